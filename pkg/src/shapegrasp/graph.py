"""Attributed part graph, its canonical JSON form, and an SVG overlay."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .shape_fit import NodeAttributes


@dataclass
class ObjectGraph:
    nodes: list[NodeAttributes]  # index == node id, largest area first
    edges: dict[tuple[int, int], int]  # (a < b) -> shared frontier length in pixels
    object_name: str | None = None
    image_size: tuple[int, int] = (0, 0)  # (w, h)
    part_index: list[int] = field(default_factory=list)  # node id -> index in the source part list
    note: dict = field(default_factory=dict)  # object-level attributes

    def __len__(self) -> int:
        return len(self.nodes)

    def neighbors(self, node: int) -> list[int]:
        return sorted({b if a == node else a for a, b in self.edges if node in (a, b)})


def contact_lengths(label: np.ndarray) -> dict[tuple[int, int], int]:
    """Count 4-adjacent pixel pairs with different non-negative labels."""
    out: dict[tuple[int, int], int] = {}
    for a, b in ((label[:, :-1], label[:, 1:]), (label[:-1, :], label[1:, :])):
        sel = (a >= 0) & (b >= 0) & (a != b)
        if not sel.any():
            continue
        lo = np.minimum(a[sel], b[sel])
        hi = np.maximum(a[sel], b[sel])
        pairs, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
        for (p, q), c in zip(pairs.tolist(), counts.tolist()):
            out[(p, q)] = out.get((p, q), 0) + c
    return out


def build_graph(
    parts: list,
    attributes: list[NodeAttributes],
    object_name: str | None = None,
    image_shape: tuple[int, int] | None = None,
    note: dict | None = None,
) -> ObjectGraph:
    """Nodes ordered by descending area (ties by centroid); edges where part pixels touch."""
    order = sorted(
        range(len(parts)),
        key=lambda k: (-round(attributes[k].area_pct, 9), attributes[k].centroid_px[0], attributes[k].centroid_px[1]),
    )
    rank = {k: i for i, k in enumerate(order)}
    if image_shape is None:
        rows = max(int(p.pixels[:, 0].max()) for p in parts) + 1
        cols = max(int(p.pixels[:, 1].max()) for p in parts) + 1
        image_shape = (rows, cols)
    label = np.full(image_shape, -1, dtype=int)
    for k, p in enumerate(parts):
        label[p.pixels[:, 0], p.pixels[:, 1]] = rank[k]
    return ObjectGraph(
        nodes=[attributes[k] for k in order],
        edges=dict(sorted(contact_lengths(label).items())),
        object_name=object_name or None,
        image_size=(int(image_shape[1]), int(image_shape[0])),
        part_index=order,
        note=dict(note or {}),
    )


def _r(x):
    return None if x is None else round(float(x), 1)


def graph_dict(g: ObjectGraph, with_labels: dict[int, str] | None = None) -> dict:
    nodes = []
    for i, n in enumerate(g.nodes):
        d = {
            "id": i,
            "shape": n.shape.kind,
            "area_pct": _r(n.area_pct),
            "aspect_ratio": _r(n.aspect_ratio),
            "angle_deg": _r(n.angle_deg),
            "centroid": [_r(n.centroid_px[0]), _r(n.centroid_px[1])],
            "color": n.color,
            "width_px": _r(n.width_px),
            "extra": dict(sorted(n.extra.items())),
        }
        if with_labels is not None:
            d["label"] = with_labels[i]
        nodes.append(d)
    edges = [{"a": a, "b": b, "contact_px": _r(c)} for (a, b), c in g.edges.items()]
    out = {"object": g.object_name, "nodes": nodes, "edges": edges}
    if g.note:
        out["note"] = dict(sorted(g.note.items()))
    return out


def serialize_graph(g: ObjectGraph, with_labels: dict[int, str] | None = None) -> str:
    return json.dumps(graph_dict(g, with_labels), separators=(",", ":"), ensure_ascii=True)


def render_overlay(g: ObjectGraph, parts: list | None = None, selected: int | None = None) -> str:
    """SVG 1.1 overlay: part outlines, green centroid markers, blue edges, id labels."""
    w, h = g.image_size
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
    ]
    if parts is not None:
        lines.append('<g id="outlines" fill="none" stroke="#808080" stroke-width="1">')
        for i, k in enumerate(g.part_index):
            ring = parts[k].polygon.outer
            pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in ring)
            stroke = ' stroke="#ff0000" stroke-width="2"' if i == selected else ""
            lines.append(f'<polygon id="part-{i}" points="{pts}"{stroke}/>')
        lines.append("</g>")
    lines.append('<g id="edges" stroke="#0000ff" stroke-width="2">')
    for a, b in g.edges:
        (xa, ya), (xb, yb) = g.nodes[a].centroid_px, g.nodes[b].centroid_px
        lines.append(f'<line x1="{xa:.1f}" y1="{ya:.1f}" x2="{xb:.1f}" y2="{yb:.1f}"/>')
    lines.append("</g>")
    lines.append('<g id="nodes">')
    for i, n in enumerate(g.nodes):
        x, y = n.centroid_px
        fill = "#ff0000" if i == selected else "#00ff00"
        lines.append(f'<circle class="centroid" cx="{x:.1f}" cy="{y:.1f}" r="5" fill="{fill}" stroke="#008000"/>')
        lines.append(f'<text x="{x + 7:.1f}" y="{y - 7:.1f}" font-size="12" fill="#000000">{escape(str(i))}</text>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
