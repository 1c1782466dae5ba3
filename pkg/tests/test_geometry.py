import itertools
import math

import numpy as np
import pytest
from conftest import disk_mask, fixture_scene
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import MultiPoint
from shapely.geometry import Polygon as ShapelyPolygon

from shapegrasp.errors import DegenerateGeometry
from shapegrasp.geometry import (
    Polygon,
    convex_hull,
    extract_contours,
    min_area_rect,
    min_enclosing_circle,
    principal_axes,
    simplify_polygon,
)


def _mec_brute(pts):
    """O(n^4) reference: smallest circle through 2 or 3 points containing all."""
    best = math.inf
    pts = [tuple(p) for p in pts]

    def contains(c, r):
        return all(math.hypot(p[0] - c[0], p[1] - c[1]) <= r + 1e-7 for p in pts)

    for a, b in itertools.combinations(pts, 2):
        c = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        r = math.hypot(a[0] - c[0], a[1] - c[1])
        if r < best and contains(c, r):
            best = r
    for a, b, cc in itertools.combinations(pts, 3):
        d = 2 * (a[0] * (b[1] - cc[1]) + b[0] * (cc[1] - a[1]) + cc[0] * (a[1] - b[1]))
        if abs(d) < 1e-12:
            continue
        ux = ((a[0] ** 2 + a[1] ** 2) * (b[1] - cc[1]) + (b[0] ** 2 + b[1] ** 2) * (cc[1] - a[1]) + (cc[0] ** 2 + cc[1] ** 2) * (a[1] - b[1])) / d
        uy = ((a[0] ** 2 + a[1] ** 2) * (cc[0] - b[0]) + (b[0] ** 2 + b[1] ** 2) * (a[0] - cc[0]) + (cc[0] ** 2 + cc[1] ** 2) * (b[0] - a[0])) / d
        r = math.hypot(a[0] - ux, a[1] - uy)
        if r < best and contains((ux, uy), r):
            best = r
    return best


def _bbox_sweep(pts):
    """Smallest bounding box over 1-degree rotations."""
    best = math.inf
    for deg in range(180):
        t = math.radians(deg)
        rot = pts @ np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        ext = rot.max(0) - rot.min(0)
        best = min(best, ext[0] * ext[1])
    return best


def test_square_contour():
    m = np.zeros((20, 20), bool)
    m[5:15, 5:15] = True
    polys = extract_contours(m)
    assert len(polys) == 1 and not polys[0].holes
    assert polys[0].area == pytest.approx(100, abs=2)


def test_annulus_has_hole():
    m = disk_mask((60, 60), 30, 30, 20) & ~disk_mask((60, 60), 30, 30, 8)
    poly = extract_contours(m)[0]
    assert len(poly.holes) == 1


def test_mug_silhouette_has_handle_hole():
    scene, _ = fixture_scene("mug")
    polys = extract_contours(scene.mask)
    assert len(polys) == 1 and len(polys[0].holes) == 1


def test_largest_component_kept():
    m = np.zeros((30, 30), bool)
    m[2:5, 2:5] = True
    m[10:25, 10:25] = True
    poly = extract_contours(m)[0]
    assert poly.area == pytest.approx(225, abs=4)


def test_hull_square_and_interior_point():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    h = convex_hull(sq)
    assert sorted(map(tuple, h.outer)) == sorted(map(tuple, sq))
    h2 = convex_hull(np.vstack([sq, [[0.5, 0.5]]]))
    assert len(h2.outer) == 4


def test_hull_random_disk_against_shapely():
    rng = np.random.default_rng(3)
    r = np.sqrt(rng.random(1000)) * 10
    t = rng.random(1000) * 2 * math.pi
    pts = np.stack([r * np.cos(t), r * np.sin(t)], 1)
    h = convex_hull(pts)
    oracle = MultiPoint([tuple(p) for p in pts]).convex_hull
    assert h.area == pytest.approx(oracle.area, rel=1e-9)
    assert h.area <= math.pi * 100
    assert np.all(h.contains(pts * 0.999))


def test_hull_degenerate():
    with pytest.raises(DegenerateGeometry):
        convex_hull(np.array([[0, 0], [1, 1], [2, 2.0]]))
    with pytest.raises(DegenerateGeometry):
        convex_hull(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]]))


def test_simplify_drops_collinear_midpoint():
    tri = Polygon(np.array([[0, 0], [5, 0], [10, 0], [5, 8]], float))
    assert len(simplify_polygon(tri, 1.0).outer) == 3


def test_simplify_circle_keeps_detail():
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    circ = Polygon(np.stack([50 * np.cos(t), 50 * np.sin(t)], 1))
    out = simplify_polygon(circ, 0.1)
    assert len(out.outer) >= 16
    boundary = ShapelyPolygon(out.outer).exterior
    from shapely.geometry import Point

    assert max(boundary.distance(Point(*p)) for p in circ.outer) <= 0.1 + 1e-9


def test_simplify_jittered_square():
    rng = np.random.default_rng(0)
    side = np.linspace(0, 40, 41)[:-1]
    ring = np.concatenate([
        np.stack([side, np.zeros_like(side)], 1),
        np.stack([np.full_like(side, 40), side], 1),
        np.stack([40 - side, np.full_like(side, 40)], 1),
        np.stack([np.zeros_like(side), 40 - side], 1),
    ])
    ring = ring + rng.uniform(-0.5, 0.5, ring.shape)
    assert len(simplify_polygon(Polygon(ring), 2.0).outer) == 4


@given(st.integers(0, 10_000), st.floats(0.5, 5.0))
def test_simplify_idempotent_and_bounded(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 40))
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    if len(np.unique(ang)) < n:
        return
    rad = rng.uniform(10, 30, n)
    poly = Polygon(np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1))
    once = simplify_polygon(poly, eps)
    twice = simplify_polygon(once, eps)
    assert np.array_equal(once.outer, twice.outer)
    from shapely.geometry import Point

    boundary = ShapelyPolygon(once.outer).exterior
    assert max(boundary.distance(Point(*p)) for p in poly.outer) <= eps + 1e-9


def test_min_area_rect_axis_aligned_and_rotated():
    r = min_area_rect(np.array([[0, 0], [4, 0], [4, 2], [0, 2]], float))
    assert {round(r.long, 9), round(r.short, 9)} == {4.0, 2.0}
    assert r.angle_deg == pytest.approx(0.0)
    t = math.radians(30)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    pts = np.array([[0, 0], [4, 0], [4, 2], [0, 2]], float) @ rot.T
    assert min_area_rect(pts).angle_deg == pytest.approx(30, abs=0.5)


def test_min_area_rect_collinear():
    with pytest.raises(DegenerateGeometry):
        min_area_rect(np.array([[0, 0], [1, 1], [3, 3.0]]))


@given(st.integers(0, 10_000))
def test_min_area_rect_beats_rotation_sweep(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(30, 2)) * rng.uniform(1, 10, 2)
    hull = convex_hull(pts)
    r = min_area_rect(hull)
    ax = hull.outer.max(0) - hull.outer.min(0)
    assert r.area <= ax[0] * ax[1] + 1e-9
    assert r.area <= _bbox_sweep(hull.outer) + 1e-9
    assert r.area >= hull.area - 1e-9


def test_mec_small_cases():
    assert min_enclosing_circle(np.array([[0, 0], [2, 0.0]]))[1] == pytest.approx(1.0)
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    assert min_enclosing_circle(tri)[1] == pytest.approx(1 / math.sqrt(3), abs=1e-9)


@given(st.integers(0, 10_000))
def test_mec_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 12
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    rad = rng.uniform(5, 20, n)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1)
    (cx, cy), r = min_enclosing_circle(pts)
    assert np.all(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= r + 1e-6)
    assert r == pytest.approx(_mec_brute(pts), rel=1e-7)


def test_mec_random_50gon():
    rng = np.random.default_rng(11)
    ang = np.sort(rng.uniform(0, 2 * math.pi, 50))
    pts = np.stack([np.cos(ang), np.sin(ang)], 1) * rng.uniform(5, 10, (50, 1))
    (cx, cy), r = min_enclosing_circle(pts)
    assert np.all(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= r + 1e-6)
    assert r == pytest.approx(_mec_brute(pts), rel=1e-7)


def test_pca_line_and_tie():
    ax = principal_axes(np.array([[0, 0], [1, 0], [2, 0], [3, 0.0]]))
    assert np.allclose(ax.axes[0], [1, 0])
    assert ax.lengths[1] == pytest.approx(0.0)
    grid = np.array([[x, y] for x in range(5) for y in range(5)], float)
    tie = principal_axes(grid)
    assert tie.lengths[0] == pytest.approx(tie.lengths[1], abs=1e-9)
    assert tie.ambiguous
    assert np.allclose(tie.axes @ tie.axes.T, np.eye(2), atol=1e-6)


def test_pca_elongated_blob_at_40_degrees():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(2000, 2)) * [20, 4]
    t = math.radians(40)
    pts = pts @ np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
    ax = principal_axes(pts)
    vals, vecs = np.linalg.eig(np.cov(pts.T))
    v = vecs[:, np.argmax(vals)]
    oracle = math.degrees(math.atan2(v[1], v[0])) % 180
    assert ax.angle_deg == pytest.approx(oracle, abs=1e-6)
    assert ax.angle_deg == pytest.approx(40, abs=1)


@given(st.integers(0, 10_000), st.floats(0.1, 10), st.floats(0, 180))
def test_pca_scale_invariant_rotation_equivariant(seed, s, deg):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(200, 2)) * [10, 2]
    base = principal_axes(pts)
    assert principal_axes(pts * s).angle_deg == pytest.approx(base.angle_deg, abs=1e-6)
    t = math.radians(deg)
    rot = pts @ np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
    d = (principal_axes(rot).angle_deg - base.angle_deg - deg) % 180
    assert min(d, 180 - d) < 1e-6


def test_pca_degenerate():
    with pytest.raises(DegenerateGeometry):
        principal_axes(np.ones((5, 2)))
