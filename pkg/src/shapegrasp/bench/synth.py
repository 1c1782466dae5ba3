"""Synthetic tabletop objects built from labelled primitives, with ground truth."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigError, SpecOverlapError
from ..scene_io import CameraIntrinsics, SceneInput

IMAGE_W, IMAGE_H = 640, 480
FX = FY = 600.0
TABLE_DEPTH = 0.6
LOW_CONFIDENCE = 0.1


@dataclass
class PartSpec:
    label: str
    primitive: dict  # kind + dimensions in pixels
    pose: dict  # x, y (pixels), angle (degrees, long axis)
    color: tuple[int, int, int]
    elevation: dict = field(default_factory=lambda: {"profile": "flat", "height": 0.02})


@dataclass
class TaskRule:
    task: str
    target: list[str]
    attrs: dict = field(default_factory=dict)
    max_gripper_width: float | None = None


@dataclass
class SyntheticObjectSpec:
    name: str
    parts: list[PartSpec]
    tasks: list[TaskRule]
    junctions: list[tuple[str, str]] = field(default_factory=list)
    synonyms: dict[str, list[str]] = field(default_factory=dict)
    noise: dict = field(default_factory=dict)  # dropout (fraction of low-confidence pixels), jitter (m)
    image: tuple[int, int] = (IMAGE_W, IMAGE_H)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticObjectSpec":
        parts = [
            PartSpec(p["label"], dict(p["primitive"]), dict(p["pose"]), tuple(p["color"]), dict(p.get("elevation", {"profile": "flat", "height": 0.02})))
            for p in d["parts"]
        ]
        labels = [p.label for p in parts]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"{d['name']}: part labels must be unique")
        tasks = [TaskRule(t["task"], list(t["target"]), dict(t.get("attrs", {})), t.get("max_gripper_width")) for t in d.get("tasks", [])]
        return cls(
            name=d["name"],
            parts=parts,
            tasks=tasks,
            junctions=[tuple(j) for j in d.get("junctions", [])],
            synonyms={k: list(v) for k, v in d.get("synonyms", {}).items()},
            noise=dict(d.get("noise", {})),
            image=tuple(d.get("image", (IMAGE_W, IMAGE_H))),
        )


@dataclass
class GroundTruth:
    part_masks: dict[str, np.ndarray]
    spec: SyntheticObjectSpec

    def label_at(self, row: int, col: int) -> str | None:
        for k, m in self.part_masks.items():
            if m[row, col]:
                return k
        return None


def _local(shape: tuple[int, int], pose: dict) -> tuple[np.ndarray, np.ndarray]:
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    th = math.radians(pose.get("angle", 0.0))
    dx, dy = xx - pose["x"], yy - pose["y"]
    u = dx * math.cos(th) + dy * math.sin(th)
    v = -dx * math.sin(th) + dy * math.cos(th)
    # keep half-open edges stable under rotation round-off
    return np.round(u, 9), np.round(v, 9)


def primitive_mask(shape: tuple[int, int], primitive: dict, pose: dict) -> np.ndarray:
    u, v = _local(shape, pose)
    kind = primitive["kind"]
    if kind == "rect":
        L, W = primitive["length"], primitive["width"]
        return (u >= -L / 2) & (u < L / 2) & (v >= -W / 2) & (v < W / 2)
    if kind == "ellipse":
        a, b = primitive["length"] / 2, primitive["width"] / 2
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0
    if kind == "disk":
        return u**2 + v**2 <= primitive["r"] ** 2
    if kind == "ring":
        r2 = u**2 + v**2
        return (r2 <= primitive["r_out"] ** 2) & (r2 >= primitive["r_in"] ** 2)
    if kind == "trapezoid":
        # width changes linearly from width0 at u=-L/2 to width1 at u=+L/2
        L = primitive["length"]
        t = (u + L / 2) / L
        half = (primitive["width0"] + (primitive["width1"] - primitive["width0"]) * t) / 2
        return (u >= -L / 2) & (u < L / 2) & (np.abs(v) <= half)
    if kind == "triangle":
        # base centred at u=-H/2, apex at u=+H/2
        H, B = primitive["height"], primitive["base"]
        t = (H / 2 - u) / H
        return (u >= -H / 2) & (u <= H / 2) & (np.abs(v) <= B / 2 * t)
    raise ConfigError(f"unknown primitive kind {kind!r}")


def _elevation(shape, part: PartSpec) -> np.ndarray:
    e = part.elevation
    prof = e.get("profile", "flat")
    h = float(e.get("height", 0.02))
    u, v = _local(shape, part.pose)
    prim = part.primitive
    if prof == "flat":
        return np.full(shape, h)
    if prof == "cylinder":
        # rounded across the long axis
        half = prim.get("width", 2 * prim.get("r", 1.0)) / 2
        t = np.clip(np.abs(v) / half, 0, 1)
        return h - float(e.get("bulge", 0.01)) * (1 - np.sqrt(1 - t**2))
    if prof in ("dome", "dish"):
        r = prim.get("r", prim.get("r_out", max(prim.get("length", 1), prim.get("width", 1)) / 2))
        rho2 = np.clip((u**2 + v**2) / r**2, 0, 1)
        d = float(e.get("depth", 0.02))
        return h - d * rho2 if prof == "dome" else h - d * (1 - rho2)
    raise ConfigError(f"unknown elevation profile {prof!r}")


def generate(spec: SyntheticObjectSpec, seed: int = 0) -> tuple[SceneInput, GroundTruth]:
    """Rasterise the spec into a scene; earlier parts win pixels shared at junctions."""
    w, h = spec.image
    shape = (h, w)
    allowed = {frozenset(j) for j in spec.junctions}
    owner = np.full(shape, -1, dtype=int)
    masks: dict[str, np.ndarray] = {}
    raw = [primitive_mask(shape, p.primitive, p.pose) for p in spec.parts]
    for i, p in enumerate(spec.parts):
        for j in range(i):
            if (raw[i] & raw[j]).any() and frozenset((p.label, spec.parts[j].label)) not in allowed:
                raise SpecOverlapError(f"{spec.name}: parts {spec.parts[j].label!r} and {p.label!r} overlap")
        own = raw[i] & (owner < 0)
        owner[own] = i
    for i, p in enumerate(spec.parts):
        masks[p.label] = owner == i
        if not masks[p.label].any():
            raise SpecOverlapError(f"{spec.name}: part {p.label!r} is fully covered")
    mask = owner >= 0
    rgb = np.full((h, w, 3), 205, dtype=np.uint8)
    depth = np.full(shape, TABLE_DEPTH, dtype=np.float64)
    for i, p in enumerate(spec.parts):
        m = masks[p.label]
        rgb[m] = p.color
        depth[m] = TABLE_DEPTH - _elevation(shape, p)[m]
    rng = np.random.default_rng(seed)
    jitter = float(spec.noise.get("jitter", 0.0))
    if jitter > 0:
        depth[mask] += rng.normal(0.0, jitter, int(mask.sum()))
    conf = np.ones(shape, dtype=np.float32)
    dropout = float(spec.noise.get("dropout", 0.0))
    if dropout > 0:
        idx = np.flatnonzero(mask)
        k = int(round(dropout * len(idx)))
        bad = rng.choice(idx, size=k, replace=False)
        conf.flat[bad] = LOW_CONFIDENCE
        depth.flat[bad] += rng.normal(0.0, 0.02, k)
    depth = np.clip(depth, 0.05, None).astype(np.float32)
    intr = CameraIntrinsics(fx=FX, fy=FY, cx=(w - 1) / 2.0, cy=(h - 1) / 2.0)
    scene = SceneInput(rgb=rgb, mask=mask, intrinsics=intr, depth=depth, confidence=conf)
    return scene, GroundTruth(masks, spec)


def default_suite_path() -> Path:
    return Path(str(resources.files(__package__).joinpath("data").joinpath("suite.json")))


def load_suite(path: str | Path | None = None) -> list[SyntheticObjectSpec]:
    p = Path(path) if path else default_suite_path()
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read suite {p}: {e}") from None
    return [SyntheticObjectSpec.from_dict(d) for d in data]
