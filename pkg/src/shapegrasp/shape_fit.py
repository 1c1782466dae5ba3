"""Primitive fitting and per-part node attributes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry
from .geometry import (
    Polygon,
    convex_hull_2d,
    min_area_rect,
    min_enclosing_circle,
    normalize_angle,
    point_segment_distance,
    ring_perimeter,
    signed_area,
    simplify_polygon,
)

CIRCLE_THRESHOLD = 0.9
DEFAULT_EPSILON_PCT = 2.0
ELLIPSE_SAMPLES = 1440

WEB_COLORS: dict[str, tuple[int, int, int]] = {
    "white": (255, 255, 255),
    "silver": (192, 192, 192),
    "gray": (128, 128, 128),
    "black": (0, 0, 0),
    "red": (255, 0, 0),
    "maroon": (128, 0, 0),
    "yellow": (255, 255, 0),
    "olive": (128, 128, 0),
    "lime": (0, 255, 0),
    "green": (0, 128, 0),
    "aqua": (0, 255, 255),
    "teal": (0, 128, 128),
    "blue": (0, 0, 255),
    "navy": (0, 0, 128),
    "fuchsia": (255, 0, 255),
    "purple": (128, 0, 128),
}
_NAMES = sorted(WEB_COLORS)
_PALETTE = np.array([WEB_COLORS[n] for n in _NAMES], dtype=float)


@dataclass(frozen=True)
class ShapePrimitive:
    kind: str  # Circle | Rectangle | IsoscelesTriangle | Ellipse
    params: dict

    @property
    def long(self) -> float:
        return self._extents()[0]

    @property
    def short(self) -> float:
        return self._extents()[1]

    def _extents(self) -> tuple[float, float]:
        p = self.params
        if self.kind == "Circle":
            return 2 * p["radius"], 2 * p["radius"]
        if self.kind == "Rectangle":
            return p["long"], p["short"]
        if self.kind == "Ellipse":
            return p["major"], p["minor"]
        height = float(np.linalg.norm(np.subtract(p["apex"], p["base_midpoint"])))
        return max(p["base_length"], height), min(p["base_length"], height)

    @property
    def aspect_ratio(self) -> float:
        lo, sh = self._extents()
        return 1.0 if self.kind == "Circle" else lo / sh

    @property
    def angle_deg(self) -> float | None:
        p = self.params
        if self.kind == "Circle":
            return None
        if self.kind in ("Rectangle", "Ellipse"):
            return p["angle_deg"]
        axis = np.subtract(p["apex"], p["base_midpoint"])
        height = float(np.linalg.norm(axis))
        if p["base_length"] >= height:
            axis = np.array([-axis[1], axis[0]])
        return normalize_angle(math.degrees(math.atan2(axis[1], axis[0])))

    def outline(self, samples: int = ELLIPSE_SAMPLES) -> np.ndarray:
        p = self.params
        if self.kind == "Circle":
            t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
            return np.asarray(p["center"]) + p["radius"] * np.stack([np.cos(t), np.sin(t)], axis=1)
        if self.kind == "Ellipse":
            t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
            a, b = p["major"] / 2, p["minor"] / 2
            th = math.radians(p["angle_deg"])
            u = np.array([math.cos(th), math.sin(th)])
            v = np.array([-u[1], u[0]])
            return np.asarray(p["center"]) + np.outer(a * np.cos(t), u) + np.outer(b * np.sin(t), v)
        if self.kind == "Rectangle":
            c = np.asarray(p["center"])
            th = math.radians(p["angle_deg"])
            u = np.array([math.cos(th), math.sin(th)]) * p["long"] / 2
            v = np.array([-math.sin(th), math.cos(th)]) * p["short"] / 2
            return np.array([c - u - v, c + u - v, c + u + v, c - u + v])
        apex = np.asarray(p["apex"])
        mid = np.asarray(p["base_midpoint"])
        axis = apex - mid
        perp = np.array([-axis[1], axis[0]]) / np.linalg.norm(axis) * p["base_length"] / 2
        return np.array([mid - perp, mid + perp, apex])

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = [float(x) for x in v] if isinstance(v, (tuple, list, np.ndarray)) else float(v)
        return out


def _part_polygon(part) -> Polygon:
    return part.polygon if hasattr(part, "polygon") else part


def shape_factor(part) -> float:
    poly = _part_polygon(part)
    _, r = min_enclosing_circle(poly.outer)
    if r <= 0:
        return 0.0
    return float(min(1.0, poly.area / (math.pi * r * r)))


def boundary_error(vertices: np.ndarray, outline: np.ndarray) -> float:
    """Mean unsigned distance from ``vertices`` to the closed polyline ``outline``."""
    d = point_segment_distance(vertices, outline, np.roll(outline, -1, axis=0))
    return float(d.min(axis=1).mean())


def _isosceles(tri: np.ndarray, area: float) -> ShapePrimitive:
    """Isosceles triangle on the side whose neighbours differ least in length.

    The apex sits on the base's perpendicular bisector at the height that
    keeps the original area, which makes both legs equal.
    """
    best = None
    for i in range(3):
        a, b, c = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
        diff = abs(np.linalg.norm(c - a) - np.linalg.norm(c - b))
        if best is None or diff < best[0] - 1e-12:
            best = (diff, a, b, c)
    _, a, b, c = best
    base = float(np.linalg.norm(b - a))
    if base <= 0:
        raise DegenerateGeometry("triangle with zero-length base")
    mid = (a + b) / 2
    normal = np.array([-(b - a)[1], (b - a)[0]]) / base
    if normal @ (c - mid) < 0:
        normal = -normal
    height = 2 * area / base
    apex = mid + normal * height
    leg = math.hypot(base / 2, height)
    return ShapePrimitive(
        "IsoscelesTriangle",
        {"apex": tuple(apex), "base_midpoint": tuple(mid), "leg_length": leg, "base_length": base},
    )


def fit_primitive(part, epsilon: float | None = None, epsilon_pct: float = DEFAULT_EPSILON_PCT) -> ShapePrimitive:
    """Circle if the shape factor reaches 0.9, triangle if simplification leaves
    three vertices, otherwise the better of the min-area rectangle and its
    inscribed ellipse."""
    poly = _part_polygon(part)
    if poly.area <= 0 or len(poly.outer) < 3:
        raise DegenerateGeometry("part polygon has no area")
    if shape_factor(poly) >= CIRCLE_THRESHOLD:
        (cx, cy), r = min_enclosing_circle(poly.outer)
        return ShapePrimitive("Circle", {"center": (cx, cy), "radius": r})
    hull = convex_hull_2d(poly.outer)
    if epsilon is None:
        epsilon = epsilon_pct / 100.0 * ring_perimeter(hull)
    simplified = simplify_polygon(Polygon(poly.outer), epsilon).outer
    if len(simplified) == 3:
        return _isosceles(simplified, abs(signed_area(simplified)))
    rect = min_area_rect(poly.outer)
    if rect.short <= 0:
        raise DegenerateGeometry("part has zero width")
    rect_p = ShapePrimitive(
        "Rectangle",
        {"center": tuple(rect.center), "long": rect.long, "short": rect.short, "angle_deg": rect.angle_deg},
    )
    ell_p = ShapePrimitive(
        "Ellipse",
        {"center": tuple(rect.center), "major": rect.long, "minor": rect.short, "angle_deg": rect.angle_deg},
    )
    err_r = boundary_error(poly.outer, rect_p.outline())
    err_e = boundary_error(poly.outer, ell_p.outline())
    return ell_p if err_e < err_r else rect_p


def nearest_web_color(rgb: np.ndarray) -> np.ndarray:
    """Palette index (into sorted names) for each RGB row; ties go to the alphabetically first name."""
    rgb = np.asarray(rgb, dtype=float).reshape(-1, 3)
    d = ((rgb[:, None, :] - _PALETTE[None, :, :]) ** 2).sum(axis=2)
    return d.argmin(axis=1)


def dominant_color(part_pixels: np.ndarray, rgb: np.ndarray) -> str:
    px = np.asarray(part_pixels, dtype=int)
    if len(px) == 0:
        raise DegenerateGeometry("no pixels to colour")
    values = rgb[px[:, 0], px[:, 1]].reshape(-1, 3)
    uniq, inverse = np.unique(values, axis=0, return_inverse=True)
    labels = nearest_web_color(uniq)[np.asarray(inverse).reshape(-1)]
    counts = np.bincount(labels, minlength=len(_NAMES))
    return _NAMES[int(counts.argmax())]


@dataclass
class NodeAttributes:
    shape: ShapePrimitive
    centroid_px: tuple[float, float]
    area_pct: float
    aspect_ratio: float
    angle_deg: float | None
    color: str
    width_px: float
    extra: dict = field(default_factory=dict)


def node_attributes(part, primitive: ShapePrimitive, rgb: np.ndarray, total_area: float, extra: dict | None = None) -> NodeAttributes:
    cx, cy = part.centroid_px
    return NodeAttributes(
        shape=primitive,
        centroid_px=(float(cx), float(cy)),
        area_pct=100.0 * float(part.area_px) / float(total_area),
        aspect_ratio=primitive.aspect_ratio,
        angle_deg=primitive.angle_deg,
        color=dominant_color(part.pixels, rgb),
        width_px=primitive.short,
        extra=dict(extra or {}),
    )
