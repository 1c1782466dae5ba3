"""Grasp position and in-plane rotation for a chosen part."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePart, NoValidDepth
from .geometry import principal_axes
from .scene_io import HIGH_CONFIDENCE_CUTOFF, SceneInput


@dataclass
class GraspPose:
    position_m: tuple[float, float, float] | None
    pixel: tuple[float, float]  # (x, y) image centroid of the part
    yaw_deg: float
    ambiguous_yaw: bool
    source_node: int
    depth_source: str  # "part", "mask" or "none"

    @property
    def two_d_only(self) -> bool:
        return self.position_m is None

    def to_json(self) -> dict:
        return {
            "position_m": None if self.position_m is None else [round(v, 6) for v in self.position_m],
            "pixel": [round(v, 3) for v in self.pixel],
            "yaw_deg": round(self.yaw_deg, 3),
            "ambiguous_yaw": self.ambiguous_yaw,
            "node": self.source_node,
            "depth_source": self.depth_source,
        }


def _valid_depth(scene: SceneInput, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    d = scene.depth[rows, cols]
    ok = np.isfinite(d) & (d > 0)
    if scene.confidence is not None:
        ok &= scene.confidence[rows, cols] >= HIGH_CONFIDENCE_CUTOFF
    return ok


def compute_grasp(scene: SceneInput, pixels: np.ndarray, node_id: int, strict_3d: bool = False) -> GraspPose:
    """Grasp at the part's pixel centroid, lifted with the median part depth.

    Yaw is the angle of the part's major principal axis in the image plane,
    taken from the back-projected points when depth exists and from the
    pixels otherwise; symmetric parts get yaw 0 and ``ambiguous_yaw``.
    """
    px = np.asarray(pixels, dtype=int)
    if len(px) == 0:
        raise DegeneratePart(f"node {node_id} has no pixels")
    rows, cols = px[:, 0], px[:, 1]
    u, v = float(cols.mean()), float(rows.mean())
    k = scene.intrinsics
    z = None
    source = "none"
    pts_xy = None
    if scene.depth is not None:
        ok = _valid_depth(scene, rows, cols)
        if ok.any():
            z = float(np.median(scene.depth[rows[ok], cols[ok]]))
            source = "part"
            d = scene.depth[rows[ok], cols[ok]].astype(float)
            pts_xy = np.stack([(cols[ok] - k.cx) * d / k.fx, (rows[ok] - k.cy) * d / k.fy], axis=1)
        else:
            mr, mc = np.nonzero(scene.mask)
            mok = _valid_depth(scene, mr, mc)
            if mok.any():
                z = float(np.median(scene.depth[mr[mok], mc[mok]]))
                source = "mask"
    if z is None and strict_3d:
        raise NoValidDepth(f"no valid depth for node {node_id}")
    if pts_xy is None or len(pts_xy) < 2:
        pts_xy = np.stack([cols, rows], axis=1).astype(float)
    if len(np.unique(pts_xy, axis=0)) < 2:
        yaw, ambiguous = 0.0, True
    else:
        axes = principal_axes(pts_xy)
        yaw, ambiguous = (0.0, True) if axes.ambiguous else (axes.angle_deg, False)
    position = None
    if z is not None:
        position = ((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z)
    return GraspPose(position, (u, v), float(yaw), bool(ambiguous), int(node_id), source)
