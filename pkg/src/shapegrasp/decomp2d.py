"""Approximate convex decomposition of the object silhouette.

Pieces are cut recursively at their deepest notch.  The split tree does not
depend on the threshold (only the stopping rule does), so one lazily grown
:class:`SplitTree2D` answers every threshold of a search and part counts are
monotone in the threshold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonSimplePolygon
from .geometry import (
    Polygon,
    convex_hull_2d,
    cross2,
    hull_diameter,
    point_segment_distance,
    points_in_ring,
    ring_centroid,
    ring_is_simple,
    signed_area,
)

SLIVER_FRACTION = 0.005


@dataclass
class ConvexPart2D:
    polygon: Polygon
    concavity: float
    pixels: np.ndarray | None = None  # (k, 2) int (row, col)

    @property
    def area_px(self) -> float:
        return self.polygon.area

    @property
    def centroid_px(self) -> tuple[float, float]:
        c = self.polygon.centroid
        return float(c[0]), float(c[1])

    @property
    def pixel_count(self) -> int:
        return 0 if self.pixels is None else int(len(self.pixels))


# --------------------------------------------------------------------------- concavity


def _ring_concavity(points: np.ndarray) -> tuple[float, np.ndarray]:
    """Normalised concavity of a vertex set and the per-vertex depths (pixels)."""
    try:
        hull = convex_hull_2d(points)
    except Exception:
        return 0.0, np.zeros(len(points))
    depth = point_segment_distance(points, hull, np.roll(hull, -1, axis=0)).min(axis=1)
    diam = hull_diameter(hull)
    if diam <= 0:
        return 0.0, depth
    return float(depth.max() / diam), depth


def concavity_2d(poly: Polygon | np.ndarray) -> float:
    """Deepest vertex-to-hull-boundary distance over all rings, divided by the hull diameter."""
    verts = poly.vertices if isinstance(poly, Polygon) else np.asarray(poly, dtype=float)
    return _ring_concavity(verts)[0]


# --------------------------------------------------------------------------- hole bridging


def _in_cone(ring: np.ndarray, i: int, q: np.ndarray) -> bool:
    """Whether direction ring[i] -> q leaves vertex i into the region (region on the left)."""
    n = len(ring)
    a = ring[i]
    a0 = ring[(i - 1) % n]
    a1 = ring[(i + 1) % n]
    d = q - a
    # collinear with an incident edge in the same direction is never inside
    for nb in (a0, a1):
        e = nb - a
        if e[0] * d[1] - e[1] * d[0] == 0 and e[0] * d[0] + e[1] * d[1] > 0:
            return False
    convex = cross2(a0, a, a1) >= 0  # left-on(a0, a, a1)
    if convex:
        return cross2(a, q, a0) > 0 and cross2(q, a, a1) > 0
    return not (cross2(a, q, a1) >= 0 and cross2(q, a, a0) >= 0)


def _blocked(p: np.ndarray, q: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray) -> bool:
    """True when segment p-q hits any segment except at the shared endpoints p or q."""
    if len(seg_a) == 0:
        return False
    P = p[None, :]
    Q = q[None, :]
    o1 = cross2(P, Q, seg_a)
    o2 = cross2(P, Q, seg_b)
    o3 = cross2(seg_a, seg_b, P)
    o4 = cross2(seg_a, seg_b, Q)
    if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
        return True
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)

    def on_pq(pts):
        return np.all((lo <= pts) & (pts <= hi), axis=1)

    def is_end(pts):
        return np.all(pts == p, axis=1) | np.all(pts == q, axis=1)

    # an edge endpoint lying on p-q (other than p or q themselves)
    if np.any((o1 == 0) & on_pq(seg_a) & ~is_end(seg_a)):
        return True
    if np.any((o2 == 0) & on_pq(seg_b) & ~is_end(seg_b)):
        return True
    # p or q lying in the interior of another edge
    elo = np.minimum(seg_a, seg_b)
    ehi = np.maximum(seg_a, seg_b)
    for pt, o in ((p, o3), (q, o4)):
        inside = np.all((elo <= pt) & (pt <= ehi), axis=1)
        ends = np.all(seg_a == pt, axis=1) | np.all(seg_b == pt, axis=1)
        if np.any((o == 0) & inside & ~ends):
            return True
    return False


def bridge_holes(poly: Polygon) -> np.ndarray:
    """Splice every hole into the outer ring through its shortest visible bridge.

    The result is a weakly simple ring whose bridge endpoints appear twice.
    """
    ring = poly.outer.copy()
    holes = sorted(poly.holes, key=lambda h: (float(h[:, 0].min()), float(h[:, 1].min())))
    for hi, hole in enumerate(holes):
        pending = holes[hi + 1 :]
        seg_a = [ring, hole, *pending]
        seg_b = [np.roll(r, -1, axis=0) for r in seg_a]
        A = np.concatenate(seg_a)
        B = np.concatenate(seg_b)
        d = np.linalg.norm(hole[:, None, :] - ring[None, :, :], axis=-1)
        found = None
        for flat in np.argsort(d, axis=None, kind="stable"):
            h, k = divmod(int(flat), len(ring))
            p, q = ring[k], hole[h]
            if not _in_cone(ring, k, q) or not _in_cone(hole, h, p):
                continue
            if _blocked(p, q, A, B):
                continue
            found = (k, h)
            break
        if found is None:
            raise NonSimplePolygon("no visible bridge from hole to outer ring")
        k, h = found
        rolled = np.roll(hole, -h, axis=0)
        ring = np.concatenate([ring[: k + 1], rolled, rolled[:1], ring[k : k + 1], ring[k + 1 :]], axis=0)
    return ring


# --------------------------------------------------------------------------- split tree


def _has_slit(ring: np.ndarray) -> bool:
    nxt = np.roll(ring, -1, axis=0)
    fwd = {(a[0], a[1], b[0], b[1]) for a, b in zip(ring.tolist(), nxt.tolist())}
    return any((c, d, a, b) in fwd for (a, b, c, d) in fwd)


def _reflex_mask(ring: np.ndarray) -> np.ndarray:
    prev = np.roll(ring, 1, axis=0)
    nxt = np.roll(ring, -1, axis=0)
    return cross2(prev, ring, nxt) < 0


@dataclass
class _Node:
    ring: np.ndarray
    concavity: float
    depths: np.ndarray
    slit: bool
    area: float
    children: list["_Node"] | None = None
    splittable: bool = True
    cut: tuple[int, int] | None = None

    @classmethod
    def make(cls, ring: np.ndarray) -> "_Node":
        conc, depths = _ring_concavity(ring)
        return cls(ring=ring, concavity=conc, depths=depths, slit=_has_slit(ring), area=signed_area(ring))

    def needs_split(self, gamma: float) -> bool:
        return self.concavity > gamma or self.slit


class SplitTree2D:
    """Lazily expanded notch-cut tree over one silhouette polygon."""

    def __init__(self, poly: Polygon, sliver_fraction: float = SLIVER_FRACTION):
        if not ring_is_simple(poly.outer):
            raise NonSimplePolygon("outer ring self-intersects")
        for h in poly.holes:
            if not ring_is_simple(h):
                raise NonSimplePolygon("hole ring self-intersects")
        self.polygon = poly
        self.total_area = poly.area
        self.min_area = sliver_fraction * self.total_area
        self.root = _Node.make(bridge_holes(poly) if poly.holes else poly.outer.copy())

    def _split(self, node: _Node) -> None:
        ring = node.ring
        n = len(ring)
        reflex = _reflex_mask(ring)
        if n <= 3 or not reflex.any():
            node.splittable = False
            return
        depth = np.where(reflex, node.depths, -1.0)
        # deepest notch; ties resolved by lowest position for determinism
        i = int(np.argmax(depth))
        seg_a = ring
        seg_b = np.roll(ring, -1, axis=0)
        best = None
        for j in range(n):
            if j == i or (j - i) % n in (1, n - 1):
                continue
            p, q = ring[i], ring[j]
            if p[0] == q[0] and p[1] == q[1]:
                continue
            if not _in_cone(ring, i, q) or not _in_cone(ring, j, p):
                continue
            if _blocked(p, q, seg_a, seg_b):
                continue
            lo, hi = min(i, j), max(i, j)
            ra = ring[lo : hi + 1]
            rb = np.concatenate([ring[hi:], ring[: lo + 1]], axis=0)
            aa, ab = signed_area(ra), signed_area(rb)
            if aa <= 1e-9 or ab <= 1e-9:
                continue
            ca = _ring_concavity(ra)[0]
            cb = _ring_concavity(rb)[0]
            sliver = min(aa, ab) < self.min_area
            key = (sliver, round(max(ca, cb), 12), float(np.hypot(*(q - p))), j)
            if best is None or key < best[0]:
                best = (key, ra, rb, (i, j))
        if best is None:
            node.splittable = False
            return
        _, ra, rb, cut = best
        node.cut = cut
        node.children = [_Node.make(ra), _Node.make(rb)]

    def leaves(self, gamma: float) -> list[_Node]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.needs_split(gamma) and node.splittable:
                if node.children is None:
                    self._split(node)
                if node.children is not None:
                    stack.extend(reversed(node.children))
                    continue
            out.append(node)
        return out

    def parts(self, gamma: float) -> list[ConvexPart2D]:
        if not 0 < gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        return [ConvexPart2D(polygon=Polygon(_dedupe(n.ring)), concavity=n.concavity) for n in self.leaves(gamma)]


def _dedupe(ring: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicate vertices (left over from hole bridges)."""
    keep = np.any(ring != np.roll(ring, 1, axis=0), axis=1)
    out = ring[keep]
    return out if len(out) >= 3 else ring


def decompose_2d(poly: Polygon, gamma: float) -> list[ConvexPart2D]:
    """Parts with concavity at most ``gamma``; pixels are filled in by :func:`rasterize_parts`."""
    return SplitTree2D(poly).parts(gamma)


# --------------------------------------------------------------------------- rasterisation


def rasterize_parts(parts: list[ConvexPart2D], mask: np.ndarray) -> list[ConvexPart2D]:
    """Assign every mask pixel to exactly one part.

    A pixel whose centre lies in exactly one part polygon goes to that part;
    pixels on shared cuts or outside every polygon go to the nearest part
    centroid among the candidates.
    """
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    centers = np.stack([cols, rows], axis=1).astype(float)
    n = len(parts)
    if n == 1:
        parts[0].pixels = np.stack([rows, cols], axis=1)
        return parts
    inside = np.zeros((len(centers), n), dtype=bool)
    for k, part in enumerate(parts):
        ring = part.polygon.outer
        lo = ring.min(axis=0)
        hi = ring.max(axis=0)
        box = np.all((centers >= lo) & (centers <= hi), axis=1)
        if box.any():
            inside[box, k] = points_in_ring(centers[box], ring)
    cents = np.array([ring_centroid(p.polygon.outer) for p in parts])
    dist = np.linalg.norm(centers[:, None, :] - cents[None, :, :], axis=-1)
    hits = inside.sum(axis=1)
    masked_dist = np.where(inside, dist, np.inf)
    label = np.where(hits > 0, np.argmin(masked_dist, axis=1), np.argmin(dist, axis=1))
    for k, part in enumerate(parts):
        sel = label == k
        part.pixels = np.stack([rows[sel], cols[sel]], axis=1)
    return parts


def label_image(parts, shape) -> np.ndarray:
    """(H, W) int image with part index per pixel, -1 elsewhere."""
    img = np.full(shape, -1, dtype=int)
    for k, part in enumerate(parts):
        if part.pixels is not None and len(part.pixels):
            img[part.pixels[:, 0], part.pixels[:, 1]] = k
    return img


__all__ = [
    "ConvexPart2D",
    "SplitTree2D",
    "bridge_holes",
    "concavity_2d",
    "decompose_2d",
    "label_image",
    "rasterize_parts",
]
