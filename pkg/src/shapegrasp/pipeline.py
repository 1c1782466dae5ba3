"""End-to-end orchestration: decompositions, selection, graph, reasoning, grasp."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .decomp2d import SplitTree2D, rasterize_parts
from .decomp3d import SplitTree3D, voxelize
from .errors import ConfigError
from .geometry import extract_contours
from .graph import ObjectGraph, build_graph, graph_dict, serialize_graph
from .grasp import GraspPose, compute_grasp
from .reasoner.chain import ReasonerConfig, ReasonerTranscript, run_chain, select_part
from .scene_io import (
    HIGH_CONFIDENCE_CUTOFF,
    SceneInput,
    back_project,
    depth_confidence_fraction,
)
from .schemas import GraspOut, Inputs, RunReport, SelectionInfo
from .selector import (
    Decomposition,
    Reason,
    SelectionResult,
    SelectorConfig,
    select,
    threshold_search,
)
from .shape_fit import DEFAULT_EPSILON_PCT, fit_primitive, node_attributes


@dataclass
class PipelineConfig:
    mode: str = "auto"  # auto | 2d | 3d
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    epsilon_pct: float = DEFAULT_EPSILON_PCT
    voxel_size: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("auto", "2d", "3d"):
            raise ConfigError(f"unknown mode {self.mode!r}")


class Timer:
    def __init__(self) -> None:
        self.ms: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = self.ms.get(name, 0.0) + (time.perf_counter() - t0) * 1000.0


@dataclass
class GeometryResult:
    selection: SelectionResult
    graph: ObjectGraph
    warnings: list[str]

    @property
    def parts(self) -> list:
        return self.selection.chosen.parts

    def part_for_node(self, node: int):
        return self.parts[self.graph.part_index[node]]


def decompose_2d_search(scene: SceneInput, config: SelectorConfig) -> Decomposition:
    poly = extract_contours(scene.mask)[0]
    tree = SplitTree2D(poly)
    dec = threshold_search(tree.parts, config.gamma_init_2d, config, source="2d")
    rasterize_parts(dec.parts, scene.mask)
    return dec


def decompose_3d_search(scene: SceneInput, config: SelectorConfig, voxel_size: float | None = None) -> Decomposition:
    # low-confidence depth is left out of the cloud; those pixels inherit a nearby label
    min_conf = HIGH_CONFIDENCE_CUTOFF if scene.confidence is not None else 0.0
    cloud = back_project(scene, min_confidence=min_conf)
    tree = SplitTree3D(voxelize(cloud, voxel_size))
    return threshold_search(lambda g: tree.parts(g, scene.mask), config.gamma_init_3d, config, source="3d")


def choose_decomposition(scene: SceneInput, config: PipelineConfig, timer: Timer | None = None) -> tuple[SelectionResult, list[str]]:
    timer = timer or Timer()
    warnings: list[str] = []
    sel_cfg = config.selector
    conf = depth_confidence_fraction(scene)
    if config.mode == "3d":
        if scene.depth is None:
            raise ConfigError("mode 3d needs a depth raster")
        with timer.stage("decompose_3d"):
            c3d = decompose_3d_search(scene, sel_cfg, config.voxel_size)
        auto = select(c3d, c3d, conf, sel_cfg)
        if auto.reason is not Reason.PREFERRED_3D:
            warnings.append(f"auto mode would reject the 3D decomposition ({auto.reason.value})")
        return SelectionResult(c3d, None, Reason.PREFERRED_3D, conf), warnings
    with timer.stage("decompose_2d"):
        c2d = decompose_2d_search(scene, sel_cfg)
    if config.mode == "2d" or scene.depth is None:
        return SelectionResult(c2d, None, Reason.FORCED_2D, conf), warnings
    with timer.stage("decompose_3d"):
        c3d = decompose_3d_search(scene, sel_cfg, config.voxel_size)
    with timer.stage("select"):
        result = select(c2d, c3d, conf, sel_cfg)
    return result, warnings


def build_object_graph(
    scene: SceneInput,
    parts: list,
    object_name: str | None,
    epsilon_pct: float = DEFAULT_EPSILON_PCT,
    attrs: dict | None = None,
) -> ObjectGraph:
    total = float(sum(p.area_px for p in parts))
    attributes = []
    for p in parts:
        prim = fit_primitive(p.polygon, epsilon_pct=epsilon_pct)
        attributes.append(node_attributes(p, prim, scene.rgb, total))
    return build_graph(parts, attributes, object_name, scene.mask.shape, note=attrs)


def run_geometry(scene: SceneInput, config: PipelineConfig, object_name: str | None = None, attrs: dict | None = None, timer: Timer | None = None) -> GeometryResult:
    timer = timer or Timer()
    selection, warnings = choose_decomposition(scene, config, timer)
    with timer.stage("graph"):
        graph = build_object_graph(scene, selection.chosen.parts, object_name, config.epsilon_pct, attrs)
    return GeometryResult(selection, graph, warnings)


def selection_info(result: GeometryResult) -> SelectionInfo:
    sel = result.selection
    chosen = sel.chosen
    return SelectionInfo(
        source=chosen.source,
        gamma_used=chosen.gamma_used,
        iterations=chosen.iterations,
        gammas_tried=chosen.gammas_tried,
        reason=sel.reason.value,
        conf_fraction=round(sel.conf_fraction, 6),
        degenerate=chosen.degenerate,
        parts=len(chosen.parts),
        rejected=None if sel.rejected is None else sel.rejected.summary(),
        warnings=result.warnings,
    )


@dataclass
class RunOutcome:
    report: RunReport
    geometry: GeometryResult
    transcript: ReasonerTranscript
    grasp: GraspPose

    @property
    def exit_code(self) -> int:
        return 2 if self.report.degenerate else 0


def run_pipeline(
    scene: SceneInput,
    object_name: str,
    task: str,
    config: PipelineConfig,
    reasoner: ReasonerConfig,
    backend,
    inputs: Inputs | None = None,
) -> RunOutcome:
    timer = Timer()
    attrs = dict(reasoner.extra_object_attrs)
    geo = run_geometry(scene, config, object_name, attrs, timer)
    gjson = serialize_graph(geo.graph)
    with timer.stage("reasoner"):
        transcript = run_chain(gjson, object_name, task, reasoner, backend)
    node = select_part(transcript.scores, graph_dict(geo.graph))
    with timer.stage("grasp"):
        pose = compute_grasp(scene, geo.part_for_node(node).pixels, node)
    label = transcript.assignment.labels[node] if transcript.assignment else None
    inputs = inputs or Inputs()
    inputs = inputs.model_copy(update={"object": object_name, "task": task})
    report = RunReport(
        pipeline_version=__version__,
        inputs=inputs,
        config={
            "mode": config.mode,
            "selector": vars(config.selector),
            "epsilon_pct": config.epsilon_pct,
            "reasoner": {
                "backend": reasoner.backend,
                "model": reasoner.model_id,
                "stages": reasoner.stages,
                "include_object_name": reasoner.include_object_name,
                "max_gripper_width_px": reasoner.max_gripper_width_px,
                "attrs": attrs,
            },
        },
        selection=selection_info(geo),
        graph=graph_dict(geo.graph),
        transcript=transcript.to_json(),
        selected_node=node,
        selected_label=label,
        grasp=GraspOut(**pose.to_json()),
        degenerate=geo.selection.chosen.degenerate,
        timings_ms={k: round(v, 3) for k, v in timer.ms.items()},
    )
    return RunOutcome(report, geo, transcript, pose)


def part_summary(parts: list, graph: ObjectGraph) -> list[dict]:
    out = []
    for node, k in enumerate(graph.part_index):
        p = parts[k]
        out.append(
            {
                "node": node,
                "concavity": round(float(p.concavity), 6),
                "pixels": int(p.pixel_count),
                "area_px": round(float(p.area_px), 3),
                "outline": [[round(float(x), 2), round(float(y), 2)] for x, y in np.asarray(p.polygon.outer)],
            }
        )
    return out
