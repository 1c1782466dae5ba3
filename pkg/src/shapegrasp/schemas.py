"""Pydantic models shared by the HTTP service, the CLI and the run report."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

REPORT_VERSION = "1"


class Inputs(BaseModel):
    mask: str | None = None
    rgb: str | None = None
    depth: str | None = None
    conf: str | None = None
    intrinsics: str | None = None
    object: str | None = None
    task: str | None = None


class SelectionInfo(BaseModel):
    source: Literal["2d", "3d"]
    gamma_used: float
    iterations: int
    gammas_tried: list[float]
    reason: str
    conf_fraction: float
    degenerate: bool
    parts: int
    rejected: dict | None = None
    warnings: list[str] = Field(default_factory=list)


class GraspOut(BaseModel):
    position_m: list[float] | None
    pixel: list[float]
    yaw_deg: float
    ambiguous_yaw: bool
    node: int
    depth_source: str


class RunReport(BaseModel):
    version: str = REPORT_VERSION
    pipeline_version: str
    inputs: Inputs
    config: dict
    selection: SelectionInfo
    graph: dict
    transcript: dict | None = None
    selected_node: int | None = None
    selected_label: str | None = None
    grasp: GraspOut | None = None
    degenerate: bool
    timings_ms: dict[str, float]


class DecomposeReport(BaseModel):
    version: str = REPORT_VERSION
    pipeline_version: str
    inputs: Inputs
    selection: SelectionInfo
    parts: list[dict]
    graph: dict
    timings_ms: dict[str, float]


class ErrorOut(BaseModel):
    error: str
    message: str


class Raster(BaseModel):
    """Inline raster: PNG bytes for mask/rgb, PFM bytes for depth/conf, base64 encoded."""

    base64: str


class SceneRequest(BaseModel):
    mask: str | Raster
    rgb: str | Raster | None = None  # required for runs; decomposition falls back to gray
    depth: str | Raster | None = None
    conf: str | Raster | None = None
    intrinsics: str | dict | None = None


class PipelineOptions(BaseModel):
    mode: Literal["auto", "2d", "3d"] = "auto"
    epsilon_pct: float = 2.0
    omega: int = 10
    alpha: float = 0.85
    gamma_2d: float = 0.15
    gamma_3d: float = 0.2
    gamma_step: float = 0.025
    voxel_size: float | None = None


class ReasonerOptions(BaseModel):
    backend: Literal["mock", "http"] = "mock"
    model: str | None = None
    rulebook: str | None = None
    stages: Literal["full", "scores-only", "no-ident", "no-task"] = "full"
    no_object_name: bool = False
    max_gripper_width: float | None = None
    attrs: dict = Field(default_factory=dict)
    max_retries: int = 3


class RunRequest(BaseModel):
    scene: SceneRequest
    object: str
    task: str
    pipeline: PipelineOptions = Field(default_factory=PipelineOptions)
    reasoner: ReasonerOptions = Field(default_factory=ReasonerOptions)
    svg: bool = False


class DecomposeRequest(BaseModel):
    scene: SceneRequest
    pipeline: PipelineOptions = Field(default_factory=PipelineOptions)
    svg: bool = False


class RunResponse(BaseModel):
    report: RunReport
    svg: str | None = None
    exit_code: int


class DecomposeResponse(BaseModel):
    report: DecomposeReport
    svg: str | None = None
    exit_code: int
