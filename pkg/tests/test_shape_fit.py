import math

import numpy as np
import pytest
from conftest import disk_mask, fixture_scene, rect_mask
from hypothesis import assume, given
from hypothesis import strategies as st

from shapegrasp.errors import DegenerateGeometry
from shapegrasp.geometry import Polygon, extract_contours
from shapegrasp.pipeline import PipelineConfig, run_geometry
from shapegrasp.shape_fit import WEB_COLORS, dominant_color, fit_primitive, shape_factor


def square(s=10.0):
    return Polygon(np.array([[0, 0], [s, 0], [s, s], [0, s]], float))


def box(L, W):
    return Polygon(np.array([[0, 0], [L, 0], [L, W], [0, W]], float))


def outline(mask):
    return extract_contours(mask)[0]


def test_shape_factor_closed_forms():
    # area / area of the minimum enclosing circle
    assert shape_factor(square()) == pytest.approx(2 / math.pi, abs=1e-6)
    assert shape_factor(box(4, 1)) == pytest.approx(4 / (math.pi * 4.25), abs=1e-6)
    n = 720
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    ngon = Polygon(np.stack([np.cos(t), np.sin(t)], 1) * 50)
    assert shape_factor(ngon) == pytest.approx(n / (2 * math.pi) * math.sin(2 * math.pi / n), abs=1e-6)


def test_rasterized_disk_is_circle():
    prim = fit_primitive(outline(disk_mask((200, 200), 100, 100, 40)))
    assert prim.kind == "Circle"
    assert prim.params["radius"] == pytest.approx(40.5, abs=1.0)


def test_rotated_rectangle():
    prim = fit_primitive(outline(rect_mask((300, 300), 150, 150, 100, 30, 25)))
    assert prim.kind == "Rectangle"
    assert prim.long == pytest.approx(101, abs=2)
    assert prim.short == pytest.approx(31, abs=2)
    assert prim.angle_deg == pytest.approx(25, abs=2)


def test_triangle_is_isosceles_with_same_area():
    tri = Polygon(np.array([[0, 0], [120, 0], [50, 70]], float))
    prim = fit_primitive(tri)
    assert prim.kind == "IsoscelesTriangle"
    apex = np.array(prim.params["apex"])
    mid = np.array(prim.params["base_midpoint"])
    b = prim.params["base_length"]
    axis = (apex - mid) / np.linalg.norm(apex - mid)
    perp = np.array([-axis[1], axis[0]])
    e1, e2 = mid - perp * b / 2, mid + perp * b / 2
    assert np.linalg.norm(apex - e1) == pytest.approx(np.linalg.norm(apex - e2))
    assert np.linalg.norm(apex - e1) == pytest.approx(prim.params["leg_length"])
    assert 0.5 * b * np.linalg.norm(apex - mid) == pytest.approx(tri.area)


def test_ellipse():
    h, w = 200, 200
    yy, xx = np.mgrid[0:h, 0:w]
    m = ((xx - 100) / 40.0) ** 2 + ((yy - 100) / 20.0) ** 2 <= 1
    prim = fit_primitive(outline(m))
    assert prim.kind == "Ellipse"
    assert prim.aspect_ratio == pytest.approx(2.0, abs=0.1)


def test_zero_area_rejected():
    with pytest.raises(DegenerateGeometry):
        fit_primitive(Polygon(np.array([[0, 0], [1, 1], [2, 2]], float)))


@pytest.mark.parametrize("name", sorted(WEB_COLORS))
def test_web_colors_map_to_themselves(name):
    rgb = np.zeros((4, 4, 3), np.uint8)
    rgb[:] = WEB_COLORS[name]
    assert dominant_color(np.argwhere(np.ones((4, 4), bool)), rgb) == name


def test_majority_color_wins():
    rgb = np.zeros((10, 10, 3), np.uint8)
    rgb[:6] = (250, 5, 5)
    rgb[6:] = (0, 0, 250)
    assert dominant_color(np.argwhere(np.ones((10, 10), bool)), rgb) == "red"


def test_hammer_head_attributes():
    scene, gt = fixture_scene("hammer")
    geo = run_geometry(scene, PipelineConfig(mode="2d"), "hammer")
    head = [a for a in geo.graph.nodes if a.color == "gray"]
    assert len(head) == 1
    expected_pct = 100 * gt.part_masks["head"].sum() / scene.mask.sum()
    assert head[0].area_pct == pytest.approx(expected_pct, abs=2.0)
    assert head[0].aspect_ratio == pytest.approx(100 / 40, abs=0.15)
    assert sum(a.area_pct for a in geo.graph.nodes) == pytest.approx(100.0, abs=1e-6)


@pytest.mark.parametrize("kind", ["rect", "disk", "ellipse"])
def test_scale_equivariance(kind):
    fits = []
    for k in (1, 2, 4):
        n = 120 * k
        c = n / 2
        if kind == "rect":
            m = rect_mask((n, n), c, c, 80 * k, 20 * k, 30)
        elif kind == "disk":
            m = disk_mask((n, n), c, c, 30 * k)
        else:
            yy, xx = np.mgrid[0:n, 0:n]
            m = ((xx - c) / (40.0 * k)) ** 2 + ((yy - c) / (15.0 * k)) ** 2 <= 1
        fits.append(fit_primitive(outline(m)))
    assert len({f.kind for f in fits}) == 1
    ratios = [f.aspect_ratio for f in fits]
    assert max(ratios) - min(ratios) < 0.15 * ratios[-1]


@given(st.floats(1, 30), st.floats(1, 30), st.floats(0, 179))
def test_rectangle_aspect_property(a, b, angle):
    L, W = max(a, b), min(a, b)
    assume(W > 0.1 * L)  # thinner slivers fall below the simplification tolerance
    t = math.radians(angle)
    u, v = np.array([math.cos(t), math.sin(t)]), np.array([-math.sin(t), math.cos(t)])
    pts = np.array([-u * L / 2 - v * W / 2, u * L / 2 - v * W / 2, u * L / 2 + v * W / 2, -u * L / 2 + v * W / 2])
    prim = fit_primitive(Polygon(pts))
    if prim.kind in ("Rectangle", "Ellipse"):
        assert prim.aspect_ratio == pytest.approx(L / W, rel=1e-6)
    assert prim.kind != "IsoscelesTriangle"
