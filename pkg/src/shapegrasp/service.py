"""HTTP service around the pipeline.

``handle_run`` and ``handle_decompose`` do the work; the FastAPI routes and
the in-process CLI both call them, so a report is the same whichever way it
was produced.
"""

from __future__ import annotations

import base64
import binascii
import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image

from . import __version__
from .errors import ConfigError, FileFormatError, ShapeGraspError
from .graph import graph_dict, render_overlay
from .pipeline import (
    PipelineConfig,
    Timer,
    part_summary,
    run_geometry,
    run_pipeline,
    selection_info,
)
from .reasoner.backends import make_backend
from .reasoner.chain import ReasonerConfig
from .scene_io import CameraIntrinsics, SceneInput, load_scene, read_mask
from .schemas import (
    DecomposeReport,
    DecomposeRequest,
    DecomposeResponse,
    ErrorOut,
    Inputs,
    PipelineOptions,
    Raster,
    ReasonerOptions,
    RunRequest,
    RunResponse,
    SceneRequest,
)
from .selector import SelectorConfig

NEUTRAL_GRAY = 128
_SUFFIX = {"mask": ".png", "rgb": ".png", "depth": ".pfm", "conf": ".pfm"}


def _materialize(value, key: str, workdir: Path) -> str | None:
    if value is None or isinstance(value, str):
        return value
    try:
        raw = base64.b64decode(value.base64, validate=True)
    except (binascii.Error, ValueError):
        raise FileFormatError(f"{key}: invalid base64 payload") from None
    path = workdir / f"{key}{_SUFFIX[key]}"
    path.write_bytes(raw)
    return str(path)


def _intrinsics(value, workdir: Path) -> str | None:
    if value is None or isinstance(value, str):
        return value
    try:
        k = CameraIntrinsics(*(float(value[n]) for n in ("fx", "fy", "cx", "cy")))
    except (KeyError, TypeError, ValueError):
        raise FileFormatError("intrinsics need numeric fx, fy, cx, cy") from None
    path = workdir / "intrinsics.json"
    path.write_text(json.dumps(k.to_dict()))
    return str(path)


def load_request_scene(req: SceneRequest, require_rgb: bool = True) -> tuple[SceneInput, Inputs]:
    """Resolve paths or inline rasters into a scene plus the echo of its inputs."""
    echo = Inputs(
        mask=req.mask if isinstance(req.mask, str) else "<inline>",
        rgb=req.rgb if isinstance(req.rgb, str) or req.rgb is None else "<inline>",
        depth=req.depth if isinstance(req.depth, str) or req.depth is None else "<inline>",
        conf=req.conf if isinstance(req.conf, str) or req.conf is None else "<inline>",
        intrinsics=req.intrinsics if isinstance(req.intrinsics, str) or req.intrinsics is None else "<inline>",
    )
    if req.rgb is None and require_rgb:
        raise ConfigError("an RGB raster is required")
    with tempfile.TemporaryDirectory(prefix="shapegrasp-") as tmp:
        work = Path(tmp)
        paths = {k: _materialize(getattr(req, k), k, work) for k in ("mask", "rgb", "depth", "conf")}
        intr = _intrinsics(req.intrinsics, work)
        if paths["rgb"] is None:
            mask = read_mask(paths["mask"])
            gray = np.full(mask.shape + (3,), NEUTRAL_GRAY, dtype=np.uint8)
            paths["rgb"] = str(work / "rgb.png")
            Image.fromarray(gray, mode="RGB").save(paths["rgb"])
        scene = load_scene(paths["mask"], paths["depth"], paths["conf"], paths["rgb"], intr)
    return scene, echo


def pipeline_config(opts: PipelineOptions) -> PipelineConfig:
    sel = SelectorConfig(
        gamma_init_2d=opts.gamma_2d,
        gamma_init_3d=opts.gamma_3d,
        gamma_step=opts.gamma_step,
        omega=opts.omega,
        alpha=opts.alpha,
    )
    return PipelineConfig(mode=opts.mode, selector=sel, epsilon_pct=opts.epsilon_pct, voxel_size=opts.voxel_size)


def reasoner_setup(opts: ReasonerOptions):
    backend = make_backend(opts.backend, rulebook=opts.rulebook, model=opts.model)
    cfg = ReasonerConfig(
        backend=opts.backend,
        model_id=getattr(backend, "model", "mock"),
        stages=opts.stages,
        include_object_name=not opts.no_object_name,
        max_gripper_width_px=opts.max_gripper_width,
        extra_object_attrs=dict(opts.attrs),
        max_retries=opts.max_retries,
    )
    return cfg, backend


def handle_run(req: RunRequest) -> RunResponse:
    scene, echo = load_request_scene(req.scene)
    cfg = pipeline_config(req.pipeline)
    rcfg, backend = reasoner_setup(req.reasoner)
    out = run_pipeline(scene, req.object, req.task, cfg, rcfg, backend, echo)
    svg = None
    if req.svg:
        svg = render_overlay(out.geometry.graph, out.geometry.parts, out.report.selected_node)
    return RunResponse(report=out.report, svg=svg, exit_code=out.exit_code)


def handle_decompose(req: DecomposeRequest) -> DecomposeResponse:
    scene, echo = load_request_scene(req.scene, require_rgb=False)
    cfg = pipeline_config(req.pipeline)
    timer = Timer()
    geo = run_geometry(scene, cfg, None, None, timer)
    report = DecomposeReport(
        pipeline_version=__version__,
        inputs=echo,
        selection=selection_info(geo),
        parts=part_summary(geo.parts, geo.graph),
        graph=graph_dict(geo.graph),
        timings_ms={k: round(v, 3) for k, v in timer.ms.items()},
    )
    svg = render_overlay(geo.graph, geo.parts) if req.svg else None
    return DecomposeResponse(report=report, svg=svg, exit_code=2 if geo.selection.chosen.degenerate else 0)


def create_app() -> FastAPI:
    app = FastAPI(title="shapegrasp", version=__version__)

    @app.exception_handler(ShapeGraspError)
    async def _pipeline_error(request: Request, exc: ShapeGraspError):
        return JSONResponse(status_code=400, content=ErrorOut(**exc.to_dict()).model_dump())

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        return handle_run(req)

    @app.post("/decompose", response_model=DecomposeResponse)
    def decompose(req: DecomposeRequest) -> DecomposeResponse:
        return handle_decompose(req)

    return app


def encode_file(path: str | Path) -> Raster:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise FileFormatError(f"{path}: {e.strerror or e}") from None
    return Raster(base64=base64.b64encode(raw).decode("ascii"))


app = create_app()
