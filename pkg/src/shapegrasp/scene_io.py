"""Raster/intrinsics loading and back-projection of masked depth into a point cloud.

Pixel convention used across the package: pixel ``(row, col)`` has its centre at
image coordinates ``(x=col, y=row)`` and covers ``[col-0.5, col+0.5] x [row-0.5, row+0.5]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DegeneratePointCloud, DimensionMismatch, EmptyMask, FileFormatError

HIGH_CONFIDENCE_CUTOFF = 0.5


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise FileFormatError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def project(self, points: np.ndarray) -> np.ndarray:
        """Camera-frame points (N,3) -> pixel coordinates (N,2) as (u, v)."""
        points = np.asarray(points, dtype=float)
        z = points[:, 2]
        u = points[:, 0] * self.fx / z + self.cx
        v = points[:, 1] * self.fy / z + self.cy
        return np.stack([u, v], axis=1)

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass
class SceneInput:
    rgb: np.ndarray  # (H, W, 3) uint8
    mask: np.ndarray  # (H, W) bool
    intrinsics: CameraIntrinsics
    depth: np.ndarray | None = None  # (H, W) float32 meters, 0 = invalid
    confidence: np.ndarray | None = None  # (H, W) float32 in [0, 1]

    def __post_init__(self) -> None:
        self.mask = np.asarray(self.mask, dtype=bool)
        self.rgb = np.asarray(self.rgb)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise FileFormatError(f"rgb must be (H, W, 3), got {self.rgb.shape}")
        shape = self.mask.shape
        if self.rgb.shape[:2] != shape:
            raise DimensionMismatch(f"rgb {self.rgb.shape[:2]} vs mask {shape}")
        if self.depth is not None:
            self.depth = np.asarray(self.depth, dtype=np.float32)
            if self.depth.shape != shape:
                raise DimensionMismatch(f"depth {self.depth.shape} vs mask {shape}")
            if not np.all(np.isfinite(self.depth)) or np.any(self.depth < 0):
                raise FileFormatError("depth values must be finite and >= 0")
        if self.confidence is not None:
            self.confidence = np.asarray(self.confidence, dtype=np.float32)
            if self.confidence.shape != shape:
                raise DimensionMismatch(f"confidence {self.confidence.shape} vs mask {shape}")
            if np.any(~np.isfinite(self.confidence)) or self.confidence.min() < 0 or self.confidence.max() > 1:
                raise FileFormatError("confidence values must lie in [0, 1]")
        if not self.mask.any():
            raise EmptyMask("mask has no object pixels")

    @property
    def height(self) -> int:
        return int(self.mask.shape[0])

    @property
    def width(self) -> int:
        return int(self.mask.shape[1])

    @property
    def has_depth(self) -> bool:
        return self.depth is not None


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3) meters
    pixel_of: np.ndarray  # (N, 2) int (row, col)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.points.shape[0])


def back_project(scene: SceneInput, min_confidence: float = 0.0) -> PointCloud:
    """Lift every masked pixel with depth > 0 (and confidence >= ``min_confidence``) to 3D."""
    if scene.depth is None:
        raise DegeneratePointCloud("scene has no depth raster")
    valid = scene.mask & (scene.depth > 0)
    if min_confidence > 0 and scene.confidence is not None:
        valid &= scene.confidence >= min_confidence
    rows, cols = np.nonzero(valid)
    if rows.size < 3:
        raise DegeneratePointCloud(f"only {rows.size} valid depth pixels inside the mask")
    k = scene.intrinsics
    d = scene.depth[rows, cols].astype(float)
    x = (cols - k.cx) * d / k.fx
    y = (rows - k.cy) * d / k.fy
    points = np.stack([x, y, d], axis=1)
    return PointCloud(points=points, pixel_of=np.stack([rows, cols], axis=1))


def depth_confidence_fraction(scene: SceneInput, cutoff: float = HIGH_CONFIDENCE_CUTOFF) -> float:
    """Fraction of masked pixels whose depth confidence is at least ``cutoff``.

    A scene without a confidence raster counts every masked pixel with valid
    depth as confident; a scene without depth has fraction 0.
    """
    n = int(scene.mask.sum())
    if scene.depth is None:
        return 0.0
    if scene.confidence is None:
        return float((scene.depth[scene.mask] > 0).sum()) / n
    return float((scene.confidence[scene.mask] >= cutoff).sum()) / n


# --------------------------------------------------------------------------- file formats


def read_pfm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        header_end = 0
        tokens: list[bytes] = []
        while len(tokens) < 4:
            # header is whitespace separated: id, width, height, scale
            while data[header_end : header_end + 1].isspace():
                header_end += 1
            start = header_end
            while not data[header_end : header_end + 1].isspace():
                header_end += 1
            tokens.append(data[start:header_end])
        header_end += 1  # single whitespace byte before raster
        ident, width, height, scale = tokens[0], int(tokens[1]), int(tokens[2]), float(tokens[3])
    except (ValueError, IndexError) as exc:
        raise FileFormatError(f"{path}: malformed PFM header") from exc
    if ident not in (b"Pf", b"PF"):
        raise FileFormatError(f"{path}: not a PFM file (magic {ident!r})")
    channels = 3 if ident == b"PF" else 1
    if channels != 1:
        raise FileFormatError(f"{path}: expected single-channel 'Pf' map")
    endian = "<" if scale < 0 else ">"
    count = width * height * channels
    raster = data[header_end:]
    if len(raster) != count * 4:
        raise FileFormatError(f"{path}: raster has {len(raster)} bytes, expected {count * 4}")
    arr = np.frombuffer(raster, dtype=f"{endian}f4").reshape(height, width)
    # PFM stores rows bottom-to-top
    return np.flipud(arr).astype(np.float32)


def write_pfm(path: str | Path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("write_pfm expects a 2D array")
    h, w = arr.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    Path(path).write_bytes(header + np.flipud(arr).tobytes())


def _sidecar_for(path: Path) -> Path | None:
    for candidate in (Path(str(path) + ".json"), path.with_suffix(".json")):
        if candidate.exists():
            return candidate
    return None


def read_float_raster(path: str | Path) -> np.ndarray:
    """Read a PFM, or a headerless little-endian float32 raster with a JSON sidecar."""
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"{path}: file not found")
    with path.open("rb") as fh:
        magic = fh.read(2)
    if magic in (b"Pf", b"PF"):
        return read_pfm(path)
    sidecar = _sidecar_for(path)
    if sidecar is None:
        raise FileFormatError(f"{path}: not PFM and no sidecar JSON with width/height")
    try:
        meta = json.loads(sidecar.read_text())
        w, h = int(meta["width"]), int(meta["height"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FileFormatError(f"{sidecar}: sidecar must contain integer width and height") from exc
    raw = path.read_bytes()
    if len(raw) != w * h * 4:
        raise FileFormatError(f"{path}: {len(raw)} bytes does not match {w}x{h} float32")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(np.float32)


def write_raw_float(path: str | Path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype="<f4")
    path = Path(path)
    path.write_bytes(arr.tobytes())
    Path(str(path) + ".json").write_text(json.dumps({"width": arr.shape[1], "height": arr.shape[0]}))


def read_mask(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"{path}: file not found")
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode not in ("L", "1"):
                raise FileFormatError(f"{path}: mask must be 8-bit grayscale, got mode {img.mode}")
            arr = np.asarray(img)
    except OSError as exc:
        raise FileFormatError(f"{path}: unreadable image ({exc})") from exc
    return arr != 0


def read_rgb(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"{path}: file not found")
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode == "RGBA":
                img = img.convert("RGB")
            if img.mode != "RGB":
                raise FileFormatError(f"{path}: rgb must be 8-bit RGB, got mode {img.mode}")
            return np.asarray(img, dtype=np.uint8).copy()
    except OSError as exc:
        raise FileFormatError(f"{path}: unreadable image ({exc})") from exc


def read_intrinsics(path: str | Path) -> CameraIntrinsics:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return CameraIntrinsics(*(float(data[k]) for k in ("fx", "fy", "cx", "cy")))
    except FileNotFoundError as exc:
        raise FileFormatError(f"{path}: file not found") from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise FileFormatError(f"{path}: intrinsics JSON needs numeric fx, fy, cx, cy") from exc


def default_intrinsics(width: int, height: int) -> CameraIntrinsics:
    """Fallback pinhole model (60 deg-ish FOV) for 2D-only runs without calibration."""
    f = float(max(width, height)) * 0.9375
    return CameraIntrinsics(fx=f, fy=f, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)


def load_scene(
    mask_path: str | Path,
    depth_path: str | Path | None = None,
    confidence_path: str | Path | None = None,
    rgb_path: str | Path | None = None,
    intrinsics_path: str | Path | None = None,
) -> SceneInput:
    mask = read_mask(mask_path)
    if rgb_path is None:
        raise FileFormatError("an RGB raster is required")
    rgb = read_rgb(rgb_path)
    if rgb.shape[:2] != mask.shape:
        raise DimensionMismatch(f"rgb {rgb.shape[:2]} vs mask {mask.shape}")
    depth = read_float_raster(depth_path) if depth_path is not None else None
    conf = read_float_raster(confidence_path) if confidence_path is not None else None
    if intrinsics_path is not None:
        intr = read_intrinsics(intrinsics_path)
    else:
        intr = default_intrinsics(mask.shape[1], mask.shape[0])
    return SceneInput(rgb=rgb, mask=mask, intrinsics=intr, depth=depth, confidence=conf)


def save_scene(scene: SceneInput, directory: str | Path, stem: str = "scene", depth_format: str = "pfm") -> dict:
    """Write a scene in the interchange formats; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "mask": directory / f"{stem}_mask.png",
        "rgb": directory / f"{stem}_rgb.png",
        "intrinsics": directory / f"{stem}_intrinsics.json",
    }
    Image.fromarray(scene.mask.astype(np.uint8) * 255, mode="L").save(paths["mask"])
    Image.fromarray(scene.rgb.astype(np.uint8), mode="RGB").save(paths["rgb"])
    paths["intrinsics"].write_text(json.dumps(scene.intrinsics.to_dict()))
    for key, arr in (("depth", scene.depth), ("confidence", scene.confidence)):
        if arr is None:
            continue
        if depth_format == "pfm":
            paths[key] = directory / f"{stem}_{key}.pfm"
            write_pfm(paths[key], arr)
        else:
            paths[key] = directory / f"{stem}_{key}.raw"
            write_raw_float(paths[key], arr)
    return {k: str(v) for k, v in paths.items()}

