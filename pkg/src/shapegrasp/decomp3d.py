"""Approximate convex decomposition of the masked point cloud on a voxel grid.

The camera sees only the top of the object, so each observed column is filled
down to the deepest observed depth before measuring concavity; the result is a
solid height field rather than a one-voxel-thick shell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import DegeneratePointCloud
from .geometry import Polygon, convex_hull_2d, hull_diameter, ring_centroid, signed_area
from .scene_io import PointCloud

MIN_VOXEL = 0.002
MAX_VOXEL = 0.010
SLIVER_FRACTION = 0.01
MIN_SPLIT_VOXELS = 8

_CORNERS = np.array([[dx, dy, dz] for dx in (-0.5, 0.5) for dy in (-0.5, 0.5) for dz in (-0.5, 0.5)])
_STRUCT26 = np.ones((3, 3, 3), dtype=bool)


@dataclass
class VoxelGrid:
    origin: np.ndarray  # world position of voxel (0,0,0) centre
    voxel_size: float
    occupancy: np.ndarray  # (nx, ny, nz) bool, surface + column fill
    surface: np.ndarray  # (nx, ny, nz) bool, voxels holding at least one point
    point_voxel: np.ndarray  # (N, 3) int voxel index of every cloud point
    pixel_of: np.ndarray  # (N, 2) int source pixel of every cloud point

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.occupancy.shape)

    def occupied_indices(self) -> np.ndarray:
        return np.argwhere(self.occupancy)

    def pixel_backmap(self) -> dict[tuple[int, int, int], list[tuple[int, int]]]:
        """Voxel -> contributing pixels; fill voxels map to their column's surface pixels."""
        cols: dict[tuple[int, int], list[tuple[int, int]]] = {}
        direct: dict[tuple[int, int, int], list[tuple[int, int]]] = {}
        for v, px in zip(map(tuple, self.point_voxel.tolist()), map(tuple, self.pixel_of.tolist())):
            direct.setdefault(v, []).append(px)
            cols.setdefault(v[:2], []).append(px)
        out = {}
        for v in map(tuple, self.occupied_indices().tolist()):
            out[v] = direct.get(v) or cols.get(v[:2], [])
        return out


def default_voxel_size(points: np.ndarray) -> float:
    diag = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    return float(np.clip(diag / 64.0, MIN_VOXEL, MAX_VOXEL))


def voxelize(cloud: PointCloud, voxel_size: float | None = None, fill_columns: bool = True) -> VoxelGrid:
    pts = np.asarray(cloud.points, dtype=float)
    if len(pts) == 0:
        raise DegeneratePointCloud("empty point cloud")
    if voxel_size is None:
        voxel_size = default_voxel_size(pts)
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    lo = pts.min(axis=0)
    idx = np.floor((pts - lo) / voxel_size + 1e-9).astype(int)
    shape = tuple(int(s) for s in idx.max(axis=0) + 1)
    surface = np.zeros(shape, dtype=bool)
    surface[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    occ = surface.copy()
    if fill_columns:
        # camera z grows away from the camera: fill from the first surface voxel to the deepest layer
        first = np.where(surface.any(axis=2), surface.argmax(axis=2), shape[2])
        occ |= np.arange(shape[2])[None, None, :] >= first[:, :, None]
    return VoxelGrid(
        origin=lo + voxel_size / 2.0,
        voxel_size=float(voxel_size),
        occupancy=occ,
        surface=surface,
        point_voxel=idx,
        pixel_of=np.asarray(cloud.pixel_of),
    )


# --------------------------------------------------------------------------- concavity


@dataclass
class _Concavity:
    value: float
    anchor: np.ndarray | None = None  # voxel coordinate where the deepest notch sits
    direction: np.ndarray | None = None  # unit vector from the notch toward the hull surface


def _measure(idx: np.ndarray) -> _Concavity:
    """Concavity of a voxel set given as integer coordinates (M, 3)."""
    if len(idx) < 2:
        return _Concavity(0.0)
    lo = idx.min(axis=0) - 1
    local = idx - lo
    shape = tuple(local.max(axis=0) + 2)
    occ = np.zeros(shape, dtype=bool)
    occ[local[:, 0], local[:, 1], local[:, 2]] = True
    boundary = occ & ~ndimage.binary_erosion(occ)
    bpts = np.argwhere(boundary).astype(float)
    # hull of the voxel cubes = hull of (centre-hull vertices + cube corners)
    try:
        seeds = bpts[ConvexHull(bpts).vertices]
    except QhullError:
        seeds = bpts
    corners = np.unique((seeds[:, None, :] + _CORNERS[None, :, :]).reshape(-1, 3), axis=0)
    try:
        hull = ConvexHull(corners)
    except QhullError:
        return _Concavity(0.0)
    eq = np.unique(np.round(hull.equations, 9), axis=0)  # coplanar triangles share a plane
    diam = hull_diameter(corners[hull.vertices])
    if diam <= 0:
        return _Concavity(0.0)
    # boundary voxel centres to the hull surface (half a voxel is the cube itself)
    sd = -(bpts @ eq[:, :3].T + eq[:, 3])
    near = sd.argmin(axis=1)
    da = np.clip(sd[np.arange(len(bpts)), near] - 0.5, 0.0, None)
    ka = int(np.argmax(da))
    best = _Concavity(float(da[ka] / diam), bpts[ka] + lo, eq[near[ka], :3].copy())
    # empty space inside the hull, measured to the nearest occupied voxel
    edt, inds = ndimage.distance_transform_edt(~occ, return_indices=True)
    # only cells deeper than the current best can matter
    cells = np.argwhere(edt - 1.0 > best.value * diam)
    if len(cells):
        inside = np.all(cells @ eq[:, :3].T + eq[:, 3] <= 1e-9, axis=1)
        cells = cells[inside]
    if len(cells):
        d = edt[cells[:, 0], cells[:, 1], cells[:, 2]] - 1.0
        kb = int(np.argmax(d))
        if d[kb] / diam > best.value:
            pocket = cells[kb]
            notch = np.array([inds[a][tuple(pocket)] for a in range(3)], dtype=float)
            direction = pocket - notch
            norm = np.linalg.norm(direction)
            best = _Concavity(float(d[kb] / diam), notch + lo, direction / norm if norm > 0 else None)
    return best


def concavity_3d(voxels) -> float:
    """Normalised 3D concavity of a voxel set (``VoxelGrid`` or (M,3) indices).

    The larger of two depths is used: boundary voxels to the hull surface, and
    empty space enclosed by the hull to the nearest occupied voxel.  Both are
    divided by the hull diameter.
    """
    idx = voxels.occupied_indices() if isinstance(voxels, VoxelGrid) else np.asarray(voxels, dtype=int)
    return _measure(idx).value


# --------------------------------------------------------------------------- split tree


@dataclass
class _Node3:
    idx: np.ndarray
    measure: _Concavity
    children: list["_Node3"] | None = None
    splittable: bool = True

    @property
    def concavity(self) -> float:
        return self.measure.value


def _unique_dirs(dirs: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for d in dirs:
        if d is None:
            continue
        n = np.linalg.norm(d)
        if n == 0 or not np.isfinite(n):
            continue
        d = d / n
        if all(abs(float(d @ e)) < 0.99 for e in out):
            out.append(d)
    return out


class SplitTree3D:
    """Lazily expanded plane-split tree over the occupied voxels of a grid."""

    def __init__(self, grid: VoxelGrid, sliver_fraction: float = SLIVER_FRACTION):
        self.grid = grid
        idx = grid.occupied_indices()
        self.min_voxels = max(1, int(np.ceil(sliver_fraction * len(idx))))
        self.root = _Node3(idx, _measure(idx))

    def _components(self, idx: np.ndarray) -> list[np.ndarray]:
        lo = idx.min(axis=0)
        local = idx - lo
        occ = np.zeros(tuple(local.max(axis=0) + 1), dtype=bool)
        occ[local[:, 0], local[:, 1], local[:, 2]] = True
        lab, n = ndimage.label(occ, structure=_STRUCT26)
        ids = lab[local[:, 0], local[:, 1], local[:, 2]]
        return [idx[ids == k] for k in range(1, n + 1)]

    def _children(self, idx: np.ndarray, side: np.ndarray) -> list[np.ndarray] | None:
        comps = self._components(idx[side]) + self._components(idx[~side])
        comps.sort(key=len, reverse=True)
        big = [c for c in comps if len(c) >= self.min_voxels]
        small = [c for c in comps if len(c) < self.min_voxels]
        if len(big) < 2:
            return None
        big = [c.copy() for c in big]
        for c in small:
            # fold slivers into the big child they touch most
            touch = []
            cset = c[:, None, :]
            for b in big:
                diff = np.abs(cset - b[None, :, :]).max(axis=2)
                touch.append(int((diff <= 1).sum()))
            k = int(np.argmax(touch)) if max(touch) > 0 else 0
            big[k] = np.concatenate([big[k], c])
        return big

    def _split(self, node: _Node3) -> None:
        idx = node.idx
        if len(idx) < MIN_SPLIT_VOXELS:
            node.splittable = False
            return
        centers = idx.astype(float)
        mean = centers.mean(axis=0)
        try:
            _, _, vt = np.linalg.svd(centers - mean, full_matrices=False)
            pca = list(vt)
        except np.linalg.LinAlgError:
            pca = []
        dirs = _unique_dirs([np.eye(3)[0], np.eye(3)[1], np.eye(3)[2], *pca, node.measure.direction])
        anchor = node.measure.anchor if node.measure.anchor is not None else mean
        candidates = []
        for d in dirs:
            t = centers @ d
            offsets = {round(float(anchor @ d), 6)}
            # largest jumps of the cross-section profile along d
            bins = np.floor(t - t.min()).astype(int)
            counts = np.bincount(bins)
            if len(counts) > 2:
                jumps = np.abs(np.diff(counts))
                for b in np.argsort(-jumps, kind="stable")[:2]:
                    offsets.add(round(float(t.min() + b + 0.5), 6))  # between bins b and b+1
            for off in sorted(offsets):
                side = t <= off
                if side.all() or not side.any():
                    continue
                candidates.append((d, off, side))
        best = None
        for k, (d, off, side) in enumerate(candidates):
            kids = self._children(idx, side)
            if kids is None:
                continue
            measures = [_measure(c) for c in kids]
            worst = max(m.value for m in measures)
            key = (round(worst, 12), len(kids), k)
            if best is None or key < best[0]:
                best = (key, kids, measures)
        if best is None:
            # fall back to a median cut along the major axis so progress is guaranteed
            t = centers @ (pca[0] if pca else np.eye(3)[0])
            side = t <= np.median(t)
            if side.all() or not side.any():
                node.splittable = False
                return
            kids = [idx[side], idx[~side]]
            best = (None, kids, [_measure(c) for c in kids])
        _, kids, measures = best
        node.children = [_Node3(c, m) for c, m in zip(kids, measures)]

    def leaves(self, gamma: float) -> list[_Node3]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.concavity > gamma and node.splittable:
                if node.children is None:
                    self._split(node)
                if node.children is not None:
                    stack.extend(reversed(node.children))
                    continue
            out.append(node)
        return out

    def parts(self, gamma: float, mask: np.ndarray | None = None) -> list["ConvexPart3D"]:
        if not 0 < gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        return parts_from_leaves(self.grid, self.leaves(gamma), mask)


# --------------------------------------------------------------------------- parts


@dataclass
class ConvexPart3D:
    point_index: np.ndarray  # indices into the source cloud
    voxels: np.ndarray  # (M, 3) voxel indices
    concavity: float
    centroid_m: np.ndarray
    pixels: np.ndarray  # (k, 2) int (row, col), includes depth-less mask pixels
    polygon: Polygon = field(default=None)  # hull of the projected pixel squares

    @property
    def area_px(self) -> float:
        return float(len(self.pixels))

    @property
    def pixel_count(self) -> int:
        return int(len(self.pixels))

    @property
    def centroid_px(self) -> tuple[float, float]:
        c = self.pixels.mean(axis=0)
        return float(c[1]), float(c[0])


def pixel_hull(pixels: np.ndarray) -> Polygon:
    """Convex hull of the pixel squares; only each row's end pixels can contribute."""
    px = np.asarray(pixels, dtype=int)
    order = np.lexsort((px[:, 1], px[:, 0]))
    px = px[order]
    first = np.r_[True, px[1:, 0] != px[:-1, 0]]
    last = np.r_[px[1:, 0] != px[:-1, 0], True]
    ends = np.concatenate([px[first], px[last]])
    rows, cols = ends[:, 0].astype(float), ends[:, 1].astype(float)
    pts = np.concatenate(
        [np.stack([cols + dx, rows + dy], axis=1) for dx in (-0.5, 0.5) for dy in (-0.5, 0.5)], axis=0
    )
    return Polygon(convex_hull_2d(pts))


def parts_from_leaves(grid: VoxelGrid, leaves: list[_Node3], mask: np.ndarray | None) -> list[ConvexPart3D]:
    label = np.full(grid.shape, -1, dtype=int)
    for k, leaf in enumerate(leaves):
        label[leaf.idx[:, 0], leaf.idx[:, 1], leaf.idx[:, 2]] = k
    pv = grid.point_voxel
    point_label = label[pv[:, 0], pv[:, 1], pv[:, 2]]
    keep = [k for k in range(len(leaves)) if np.any(point_label == k)]
    remap = {k: i for i, k in enumerate(keep)}
    point_label = np.array([remap.get(int(k), -1) for k in point_label])
    pix_label = None
    if mask is not None:
        pix_label = np.full(mask.shape, -1, dtype=int)
        pix_label[grid.pixel_of[:, 0], grid.pixel_of[:, 1]] = point_label
        # masked pixels without depth take the label of the nearest labelled pixel
        missing = mask & (pix_label < 0)
        if missing.any():
            _, (ri, ci) = ndimage.distance_transform_edt(pix_label < 0, return_indices=True)
            pix_label[missing] = pix_label[ri[missing], ci[missing]]
    parts = []
    for k in keep:
        i = remap[k]
        pts_i = np.nonzero(point_label == i)[0]
        if pix_label is not None:
            pixels = np.argwhere(pix_label == i)
        else:
            pixels = grid.pixel_of[pts_i]
        centroid = grid.origin + (leaves[k].idx.mean(axis=0)) * grid.voxel_size
        parts.append(
            ConvexPart3D(
                point_index=pts_i,
                voxels=leaves[k].idx,
                concavity=leaves[k].concavity,
                centroid_m=centroid,
                pixels=pixels,
                polygon=pixel_hull(pixels),
            )
        )
    return parts


def decompose_3d(grid: VoxelGrid, gamma: float, mask: np.ndarray | None = None) -> list[ConvexPart3D]:
    return SplitTree3D(grid).parts(gamma, mask)


def projected_area(poly: Polygon) -> float:
    return signed_area(poly.outer)


def projected_centroid(poly: Polygon) -> np.ndarray:
    return ring_centroid(poly.outer)
