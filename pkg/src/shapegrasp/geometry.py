"""Planar and spatial geometry primitives.

Angles everywhere are degrees in ``[0, 180)`` measured from the +x (column)
axis of the image, with y pointing down the rows.  Rings are ``(n, 2)`` float
arrays without a repeated closing vertex; the outer ring has positive shoelace
area and hole rings negative.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateGeometry

PCA_TIE_RATIO = 0.01


# --------------------------------------------------------------------------- basic ring helpers


def signed_area(ring: np.ndarray) -> float:
    ring = np.asarray(ring, dtype=float)
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def ring_centroid(ring: np.ndarray) -> np.ndarray:
    ring = np.asarray(ring, dtype=float)
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-12:
        return ring.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def ring_perimeter(ring: np.ndarray) -> float:
    ring = np.asarray(ring, dtype=float)
    return float(np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1).sum())


def cross2(o: np.ndarray, a: np.ndarray, b: np.ndarray):
    """z-component of (a - o) x (b - o); broadcasts over leading axes."""
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance matrix (len(points), len(a)) from points to segments a[k]-b[k]."""
    p = np.asarray(points, dtype=float)[:, None, :]
    a = np.asarray(a, dtype=float)[None, :, :]
    b = np.asarray(b, dtype=float)[None, :, :]
    ab = b - a
    denom = (ab * ab).sum(-1)
    denom = np.where(denom == 0, 1.0, denom)
    t = np.clip(((p - a) * ab).sum(-1) / denom, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p - proj, axis=-1)


def points_in_ring(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd containment test; boundary points may fall on either side."""
    p = np.asarray(points, dtype=float)
    ring = np.asarray(ring, dtype=float)
    x, y = p[:, 0:1], p[:, 1:2]
    x1, y1 = ring[:, 0][None, :], ring[:, 1][None, :]
    x2, y2 = np.roll(ring[:, 0], -1)[None, :], np.roll(ring[:, 1], -1)[None, :]
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    crossings = straddle & (x < xint)
    return (crossings.sum(axis=1) % 2) == 1


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = cross2(q1, q2, p1)
    d2 = cross2(q1, q2, p2)
    d3 = cross2(p1, p2, q1)
    d4 = cross2(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return bool(
        (d1 == 0 and on_seg(q1, q2, p1))
        or (d2 == 0 and on_seg(q1, q2, p2))
        or (d3 == 0 and on_seg(p1, p2, q1))
        or (d4 == 0 and on_seg(p1, p2, q2))
    )


def ring_is_simple(ring: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the ring touch."""
    ring = np.asarray(ring, dtype=float)
    n = len(ring)
    if n < 3:
        return False
    a = ring
    b = np.roll(ring, -1, axis=0)
    # vectorised pairwise orientation tests
    o1 = cross2(a[:, None], b[:, None], a[None, :])
    o2 = cross2(a[:, None], b[:, None], b[None, :])
    o3 = cross2(a[None, :], b[None, :], a[:, None])
    o4 = cross2(a[None, :], b[None, :], b[:, None])
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    adjacent = (diff <= 1) | (diff == n - 1)
    if np.any(proper & ~adjacent):
        return False
    # touching / collinear contacts between non-adjacent edges
    lo = np.minimum(a, b)[:, None, :]
    hi = np.maximum(a, b)[:, None, :]

    def on_edge(pts):  # pts[j] tested against the bounding box of edge i
        return np.all((lo <= pts[None, :, :]) & (pts[None, :, :] <= hi), axis=-1)

    touch = ((o1 == 0) & on_edge(a)) | ((o2 == 0) & on_edge(b))
    return not np.any(touch & ~adjacent)


# --------------------------------------------------------------------------- Polygon


@dataclass
class Polygon:
    """Outer ring (positive area) plus hole rings (negative area)."""

    outer: np.ndarray
    holes: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.outer = np.asarray(self.outer, dtype=float).reshape(-1, 2)
        if len(self.outer) < 3:
            raise DegenerateGeometry("polygon ring needs at least 3 vertices")
        if signed_area(self.outer) < 0:
            self.outer = self.outer[::-1].copy()
        holes = []
        for h in self.holes:
            h = np.asarray(h, dtype=float).reshape(-1, 2)
            if len(h) < 3:
                raise DegenerateGeometry("hole ring needs at least 3 vertices")
            if signed_area(h) > 0:
                h = h[::-1].copy()
            holes.append(h)
        self.holes = holes

    @property
    def rings(self) -> list[np.ndarray]:
        return [self.outer, *self.holes]

    @property
    def area(self) -> float:
        return signed_area(self.outer) + sum(signed_area(h) for h in self.holes)

    @property
    def centroid(self) -> np.ndarray:
        total = 0.0
        acc = np.zeros(2)
        for r in self.rings:
            a = signed_area(r)
            acc += a * ring_centroid(r)
            total += a
        return acc / total if abs(total) > 1e-12 else self.outer.mean(axis=0)

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate(self.rings, axis=0)

    def scaled(self, s: float, origin=(0.0, 0.0)) -> "Polygon":
        o = np.asarray(origin, dtype=float)
        return Polygon((self.outer - o) * s + o, [(h - o) * s + o for h in self.holes])

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = points_in_ring(points, self.outer)
        for h in self.holes:
            inside &= ~points_in_ring(points, h)
        return inside

    def to_json(self) -> dict:
        return {
            "outer": [[round(float(x), 3), round(float(y), 3)] for x, y in self.outer],
            "holes": [[[round(float(x), 3), round(float(y), 3)] for x, y in h] for h in self.holes],
        }


# --------------------------------------------------------------------------- contours


def _largest_component(mask: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(mask)  # 4-connectivity
    if n <= 1:
        return labels > 0
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))


def _trace_loops(comp: np.ndarray) -> list[np.ndarray]:
    """Crack-following boundary loops of a 4-connected pixel set, in pixel-corner coordinates."""
    padded = np.pad(comp, 1)
    core = padded[1:-1, 1:-1]
    rows, cols = np.nonzero(core)
    edges = []
    # doubled integer coordinates: corner (c-0.5, r-0.5) -> (2c-1, 2r-1)
    for dr, dc, sx, sy, ex, ey in (
        (-1, 0, -1, -1, 1, -1),  # top side, +x
        (0, 1, 1, -1, 1, 1),  # right side, +y
        (1, 0, 1, 1, -1, 1),  # bottom side, -x
        (0, -1, -1, 1, -1, -1),  # left side, -y
    ):
        nb = padded[1 + dr : padded.shape[0] - 1 + dr, 1 + dc : padded.shape[1] - 1 + dc]
        sel = ~nb[rows, cols]
        r, c = rows[sel], cols[sel]
        edges.append(np.stack([2 * c + sx, 2 * r + sy, 2 * c + ex, 2 * r + ey], axis=1))
    e = np.concatenate(edges, axis=0)
    out: dict[tuple[int, int], list[int]] = {}
    for i, (x0, y0, _, _) in enumerate(e.tolist()):
        out.setdefault((x0, y0), []).append(i)
    used = np.zeros(len(e), dtype=bool)
    loops = []
    order = np.lexsort((e[:, 0], e[:, 1]))
    for start in order.tolist():
        if used[start]:
            continue
        loop = []
        cur = start
        while not used[cur]:
            used[cur] = True
            x0, y0, x1, y1 = e[cur].tolist()
            loop.append((x0, y0))
            cands = [k for k in out[(x1, y1)] if not used[k]]
            if not cands:
                break
            if len(cands) == 1:
                cur = cands[0]
            else:
                # saddle vertex: take the tightest left turn so diagonal pixels stay separate
                din = (x1 - x0, y1 - y0)
                best = None
                for k in cands:
                    dout = (e[k, 2] - e[k, 0], e[k, 3] - e[k, 1])
                    cr = din[0] * dout[1] - din[1] * dout[0]
                    if best is None or cr > best[0]:
                        best = (cr, k)
                cur = best[1]
        loops.append(np.asarray(loop, dtype=float) / 2.0)
    return loops


def _drop_collinear(ring: np.ndarray) -> np.ndarray:
    prev = np.roll(ring, 1, axis=0)
    nxt = np.roll(ring, -1, axis=0)
    keep = cross2(prev, ring, nxt) != 0
    if keep.sum() < 3:
        return ring
    return ring[keep]


def extract_contours(mask: np.ndarray, snap: float = 1.0, keep_all: bool = False) -> list[Polygon]:
    """Trace the object's boundary at pixel-corner resolution.

    Returns one polygon per 4-connected component, largest first; by default
    only the largest component (the object) is returned.  Rings are snapped
    with a ``snap``-pixel Douglas-Peucker pass unless that breaks simplicity.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    labels, n = ndimage.label(mask)
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    order = [int(i) for i in np.argsort(-counts, kind="stable") if counts[i] > 0]
    if not keep_all:
        order = order[:1]
    polys = []
    for lab in order:
        loops = [_drop_collinear(lp) for lp in _trace_loops(labels == lab)]
        loops = [lp for lp in loops if len(lp) >= 3]
        areas = [signed_area(lp) for lp in loops]
        outer_idx = int(np.argmax(areas))
        outer = loops[outer_idx]
        holes = [lp for i, lp in enumerate(loops) if i != outer_idx and areas[i] < 0]
        poly = Polygon(outer, holes)
        if snap > 0:
            poly = _snap(poly, snap)
        polys.append(poly)
    return polys


def _snap(poly: Polygon, eps: float) -> Polygon:
    rings = []
    for ring in poly.rings:
        simple = _dp_ring(ring, eps)
        if len(simple) >= 3 and ring_is_simple(simple) and abs(signed_area(simple)) > 0:
            rings.append(simple)
        else:
            rings.append(ring)
    snapped = Polygon(rings[0], rings[1:])
    # holes must stay strictly inside the outer ring and apart from each other
    if poly.holes and not _rings_disjoint(snapped.rings):
        return poly
    return snapped


def _rings_disjoint(rings: list[np.ndarray]) -> bool:
    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            a, b = rings[i], rings[j]
            for k in range(len(a)):
                p1, p2 = a[k], a[(k + 1) % len(a)]
                for m in range(len(b)):
                    if _segments_intersect(p1, p2, b[m], b[(m + 1) % len(b)]):
                        return False
    return True


# --------------------------------------------------------------------------- convex hull


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; CCW (positive area) hull without collinear points."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise DegenerateGeometry(f"hull needs 3 distinct points, got {len(pts)}")
    pl = pts.tolist()

    def half(seq):
        h: list = []
        for p in seq:
            while len(h) >= 2 and (
                (h[-1][0] - h[-2][0]) * (p[1] - h[-2][1]) - (h[-1][1] - h[-2][1]) * (p[0] - h[-2][0])
            ) <= 0:
                h.pop()
            h.append(p)
        return h

    lower = half(pl)
    upper = half(reversed(pl))
    hull = np.asarray(lower[:-1] + upper[:-1], dtype=float)
    if len(hull) < 3:
        raise DegenerateGeometry("points are collinear")
    return hull


@dataclass
class Hull3D:
    vertices: np.ndarray  # (k, 3) hull vertex coordinates
    faces: np.ndarray  # (m, 3) indices into the input points
    equations: np.ndarray  # (m, 4) outward normals n and offsets d with n.x + d <= 0 inside
    volume: float


def convex_hull_3d(points: np.ndarray) -> Hull3D:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(np.unique(pts, axis=0)) < 4:
        raise DegenerateGeometry("3D hull needs 4 distinct points")
    try:
        h = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateGeometry(f"points are coplanar: {exc.args[0].splitlines()[0]}") from exc
    return Hull3D(vertices=pts[h.vertices], faces=h.simplices, equations=h.equations, volume=float(h.volume))


def convex_hull(points: np.ndarray):
    """2D points -> CCW hull :class:`Polygon`; 3D points -> :class:`Hull3D`."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2 and pts.shape[1] == 3:
        return convex_hull_3d(pts)
    return Polygon(convex_hull_2d(pts))


def hull_diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d * d).sum(-1).max()))


# --------------------------------------------------------------------------- Douglas-Peucker


def _dp_open(chain: np.ndarray, eps: float) -> list[int]:
    """Indices kept by Douglas-Peucker on an open chain (endpoints always kept)."""
    n = len(chain)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        seg = point_segment_distance(chain[i + 1 : j], chain[i : i + 1], chain[j : j + 1])[:, 0]
        k = int(np.argmax(seg))
        if seg[k] > eps:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return np.nonzero(keep)[0].tolist()


def _dp_ring(ring: np.ndarray, eps: float) -> np.ndarray:
    ring = np.asarray(ring, dtype=float)
    n = len(ring)
    if n <= 3:
        return ring.copy()
    # anchors: the vertex diameter pair, which is stable under re-simplification
    hull_idx = _hull_indices(ring)
    hp = ring[hull_idx]
    d = ((hp[:, None, :] - hp[None, :, :]) ** 2).sum(-1)
    flat = int(np.argmax(d))
    a, b = sorted((int(hull_idx[flat // len(hp)]), int(hull_idx[flat % len(hp)])))
    if a == b:
        return ring.copy()
    first = ring[a : b + 1]
    second = np.concatenate([ring[b:], ring[: a + 1]], axis=0)
    k1 = [a + i for i in _dp_open(first, eps)]
    k2 = [(b + i) % n for i in _dp_open(second, eps)]
    kept = sorted(set(k1) | set(k2))
    if len(kept) < 3:
        # keep the vertex farthest from the anchor chord
        dist = point_segment_distance(ring, ring[a : a + 1], ring[b : b + 1])[:, 0]
        kept = sorted({a, b, int(np.argmax(dist))})
    return ring[kept]


def _hull_indices(ring: np.ndarray) -> np.ndarray:
    try:
        hull = convex_hull_2d(ring)
    except DegenerateGeometry:
        return np.arange(len(ring))
    # map hull vertices back to their first occurrence in the ring
    idx = []
    for p in hull:
        hits = np.nonzero((ring[:, 0] == p[0]) & (ring[:, 1] == p[1]))[0]
        idx.append(int(hits[0]))
    return np.asarray(sorted(idx))


def simplify_ring(ring: np.ndarray, epsilon: float) -> np.ndarray:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return _dp_ring(ring, epsilon)


def simplify_polygon(poly: Polygon, epsilon: float) -> Polygon:
    """Douglas-Peucker per ring, anchored on each ring's diameter pair."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return Polygon(_dp_ring(poly.outer, epsilon), [_dp_ring(h, epsilon) for h in poly.holes])


# --------------------------------------------------------------------------- minimum-area rectangle


@dataclass(frozen=True)
class RotatedRect:
    center: tuple[float, float]
    long: float
    short: float
    angle_deg: float  # direction of the long side

    @property
    def area(self) -> float:
        return self.long * self.short

    def corners(self) -> np.ndarray:
        t = math.radians(self.angle_deg)
        u = np.array([math.cos(t), math.sin(t)])
        v = np.array([-math.sin(t), math.cos(t)])
        c = np.asarray(self.center)
        hl, hs = self.long / 2, self.short / 2
        return np.array([c - hl * u - hs * v, c + hl * u - hs * v, c + hl * u + hs * v, c - hl * u + hs * v])


def normalize_angle(deg: float) -> float:
    a = math.fmod(deg, 180.0)
    if a < 0:
        a += 180.0
    if a >= 180.0 - 1e-9:
        a = 0.0
    return a


def min_area_rect(points) -> RotatedRect:
    """Minimum-area enclosing rectangle via rotating calipers over hull edges.

    One side of the optimal rectangle is collinear with a hull edge, so every
    hull edge direction is tried with its caliper extents computed at once.
    """
    pts = points.vertices if isinstance(points, Polygon) else np.asarray(points, dtype=float)
    hull = convex_hull_2d(pts)
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.linalg.norm(edges, axis=1)
    u = edges / lengths[:, None]
    v = np.stack([-u[:, 1], u[:, 0]], axis=1)
    pu = hull @ u.T  # (h, e)
    pv = hull @ v.T
    w = pu.max(0) - pu.min(0)
    h = pv.max(0) - pv.min(0)
    area = w * h
    k = int(np.argmin(area))
    cu = (pu[:, k].max() + pu[:, k].min()) / 2
    cv = (pv[:, k].max() + pv[:, k].min()) / 2
    center = cu * u[k] + cv * v[k]
    if w[k] >= h[k]:
        long, short, direction = w[k], h[k], u[k]
    else:
        long, short, direction = h[k], w[k], v[k]
    angle = normalize_angle(math.degrees(math.atan2(direction[1], direction[0])))
    return RotatedRect((float(center[0]), float(center[1])), float(long), float(short), angle)


# --------------------------------------------------------------------------- minimum enclosing circle


def _circle_two(a, b):
    cx, cy = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
    return (cx, cy, max(math.hypot(cx - a[0], cy - a[1]), math.hypot(cx - b[0], cy - b[1])))


def _circumcircle(a, b, c):
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0
    if d == 0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - a[0], y - a[1]), math.hypot(x - b[0], y - b[1]), math.hypot(x - c[0], y - c[1]))
    return (x, y, r)


_EPS_REL = 1 + 1e-12


def _inside(c, p) -> bool:
    return c is not None and math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * _EPS_REL + 1e-12


def _mec_two(points, p, q):
    circ = _circle_two(p, q)
    left = right = None
    px, py = p
    qx, qy = q
    for r in points:
        if _inside(circ, r):
            continue
        cross = (qx - px) * (r[1] - py) - (qy - py) * (r[0] - px)
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        cc = (qx - px) * (c[1] - py) - (qy - py) * (c[0] - px)
        if cross > 0 and (left is None or cc > (qx - px) * (left[1] - py) - (qy - py) * (left[0] - px)):
            left = c
        elif cross < 0 and (right is None or cc < (qx - px) * (right[1] - py) - (qy - py) * (right[0] - px)):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _mec_one(points, p):
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _inside(c, q):
            c = _circle_two(p, q) if c[2] == 0.0 else _mec_two(points[: i + 1], p, q)
    return c


def min_enclosing_circle(points, seed: int = 0) -> tuple[tuple[float, float], float]:
    """Smallest circle containing every point (Welzl, iterative, seeded shuffle)."""
    pts = points.vertices if isinstance(points, Polygon) else np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise DegenerateGeometry("no points")
    # only hull vertices can lie on the circle
    try:
        pts = convex_hull_2d(pts)
    except DegenerateGeometry:
        pts = np.unique(pts, axis=0)
    shuffled = [(float(x), float(y)) for x, y in pts]
    random.Random(seed).shuffle(shuffled)
    c = None
    for i, p in enumerate(shuffled):
        if c is None or not _inside(c, p):
            c = _mec_one(shuffled[: i + 1], p)
    return (c[0], c[1]), c[2]


# --------------------------------------------------------------------------- PCA


@dataclass
class PrincipalAxes:
    center: np.ndarray
    axes: np.ndarray  # rows are unit axes, first = largest variance
    lengths: np.ndarray  # variances, descending
    ambiguous: bool

    @property
    def angle_deg(self) -> float:
        """In-plane angle of the major axis (x/y components), in [0, 180)."""
        a = self.axes[0]
        return normalize_angle(math.degrees(math.atan2(a[1], a[0])))


def principal_axes(points: np.ndarray, tie_ratio: float = PCA_TIE_RATIO) -> PrincipalAxes:
    pts = np.asarray(points, dtype=float)
    dim = pts.shape[1]
    if len(pts) < dim:
        raise DegenerateGeometry(f"need at least {dim} points for {dim}D principal axes")
    center = pts.mean(axis=0)
    cov = np.cov((pts - center).T, bias=True)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order].T.copy()
    if vals[0] <= 1e-18:
        raise DegenerateGeometry("all points coincide")
    for i in range(dim):
        a = vecs[i]
        if a[0] < -1e-12 or (abs(a[0]) <= 1e-12 and a[1] < 0):
            vecs[i] = -a
    ambiguous = (vals[0] - vals[1]) < tie_ratio * vals[0]
    return PrincipalAxes(center=center, axes=vecs, lengths=vals, ambiguous=bool(ambiguous))
