import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image, ImageDraw
from scipy import ndimage
from test_decomp2d import oracle_concavity

from shapegrasp.decomp2d import SplitTree2D, rasterize_parts
from shapegrasp.geometry import extract_contours

GAMMAS = [round(0.35 - 0.025 * k, 3) for k in range(14)] + [0.01]


@st.composite
def star_masks(draw):
    spikes = draw(st.integers(3, 8))
    outer = draw(st.lists(st.floats(18, 36), min_size=spikes, max_size=spikes))
    inner = draw(st.lists(st.floats(6, 16), min_size=spikes, max_size=spikes))
    phase = draw(st.floats(0, 2 * math.pi))
    pts = []
    for k in range(spikes):
        for r, off in ((outer[k], 0.0), (inner[k], 0.5)):
            a = phase + 2 * math.pi * (k + off) / spikes
            pts.append((40 + r * math.cos(a), 40 + r * math.sin(a)))
    img = Image.new("1", (80, 80), 0)
    ImageDraw.Draw(img).polygon(pts, fill=1)
    return np.array(img, dtype=bool)


@settings(max_examples=200)
@given(star_masks())
def test_star_decomposition_invariants(mask):
    # thin spikes can rasterise apart; the outline covers the largest 4-connected piece
    labels, _ = ndimage.label(mask)
    mask = labels == np.bincount(labels.ravel())[1:].argmax() + 1
    poly = extract_contours(mask)[0]
    tree = SplitTree2D(poly)
    counts = []
    for g in GAMMAS:
        parts = tree.parts(g)
        counts.append(len(parts))
        assert abs(sum(p.polygon.area for p in parts) - poly.area) <= 1e-6 * poly.area
        for p in parts:
            assert oracle_concavity(p.polygon.outer) <= g + 1e-9
    assert counts == sorted(counts)
    parts = rasterize_parts(tree.parts(0.1), mask)
    label = np.full(mask.shape, -1)
    for k, p in enumerate(parts):
        assert (label[p.pixels[:, 0], p.pixels[:, 1]] < 0).all()
        label[p.pixels[:, 0], p.pixels[:, 1]] = k
    assert np.array_equal(label >= 0, mask)
