"""Command-line client.

Subcommands build the same request models the HTTP service accepts and either
handle them in-process or post them to ``--server``.  Exit codes: 0 success,
2 degenerate single-part decomposition (output still written), 1 any error,
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import httpx

from .errors import BackendUnavailable, ConfigError, ShapeGraspError
from .schemas import (
    DecomposeRequest,
    DecomposeResponse,
    PipelineOptions,
    ReasonerOptions,
    RunRequest,
    RunResponse,
    SceneRequest,
)

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE = 0, 1, 2


class UsageError(ShapeGraspError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _emit_error(exc: ShapeGraspError) -> int:
    sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
    return EXIT_ERROR


# --------------------------------------------------------------------------- config file


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments, optional quotes, dashes or underscores in keys."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key.strip().replace("-", "_")] = value
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    """Config values become parser defaults, so explicit flags still win."""
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            v = value.lower()
            if v not in _TRUE | _FALSE:
                raise ConfigError(f"config key {key!r} needs a boolean, got {value!r}")
            defaults[key] = v in _TRUE
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [s.strip() for s in value.split(",") if s.strip()]
        else:
            defaults[key] = action.type(value) if action.type else value
        action.required = False
    parser.set_defaults(**defaults)


# --------------------------------------------------------------------------- parser


def _add_scene(p: argparse.ArgumentParser, rgb_required: bool) -> None:
    p.add_argument("--mask", required=True, help="binary object mask (8-bit PNG)")
    p.add_argument("--rgb", required=rgb_required, help="RGB image (PNG)")
    p.add_argument("--depth", help="depth in meters (PFM, or raw float32 with a .json size sidecar)")
    p.add_argument("--conf", help="per-pixel depth confidence in [0, 1] (same formats as --depth)")
    p.add_argument("--intrinsics", help="JSON with fx, fy, cx, cy")


def _add_geometry(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["auto", "2d", "3d"], default="auto")
    p.add_argument("--epsilon-pct", type=float, default=2.0, help="polygon simplification tolerance, %% of hull perimeter")
    p.add_argument("--omega", type=int, default=10, help="max parts accepted from the 3D decomposition")
    p.add_argument("--alpha", type=float, default=0.85, help="min fraction of confident depth pixels for 3D")
    p.add_argument("--gamma-2d", type=float, default=0.15)
    p.add_argument("--gamma-3d", type=float, default=0.2)
    p.add_argument("--gamma-step", type=float, default=0.025)
    p.add_argument("--voxel-size", type=float, default=None, help="voxel edge in meters (default: scaled to the object)")
    p.add_argument("--svg", help="write an SVG overlay here")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--server", help="base URL of a running service; default runs in-process")
    p.add_argument("--config", help="key = value file supplying defaults for these flags")


def _add_reasoner(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--model", default=None, help="model id for the http backend")
    p.add_argument("--rulebook", help="rulebook JSON for the mock backend")
    p.add_argument("--stages", choices=["full", "scores-only", "no-ident", "no-task"], default="full")
    p.add_argument("--no-object-name", action="store_true", help="describe the object generically in prompts")
    p.add_argument("--max-gripper-width", type=float, default=None, help="gripper opening in pixels")
    p.add_argument("--max-retries", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shapegrasp", description="Task-oriented part selection and grasp poses from masks and depth.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="full pipeline: decomposition, graph, reasoning, grasp")
    _add_scene(run, rgb_required=True)
    run.add_argument("--object", required=True)
    run.add_argument("--task", required=True)
    run.add_argument("--attr", action="append", default=[], help="object attribute KEY or KEY=VALUE, repeatable")
    _add_geometry(run)
    _add_reasoner(run)

    dec = sub.add_parser("decompose", help="decomposition and graph only, no reasoning")
    _add_scene(dec, rgb_required=False)
    _add_geometry(dec)

    bench = sub.add_parser("bench", help="evaluate the synthetic suite")
    bench.add_argument("--suite", help="suite JSON (default: shipped suite)")
    bench.add_argument("--out", help="write the JSON report here; the text table goes next to it as .txt")
    bench.add_argument("--sweep", help="threshold sweep range start:stop:step")
    bench.add_argument("--sweep-object", action="append", default=[], help="limit the sweep to these objects")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1))
    bench.add_argument("--mode", choices=["auto", "2d", "3d"], default="auto")
    bench.add_argument("--config", help="key = value file supplying defaults for these flags")
    _add_reasoner(bench)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    parser.subcommands = sub.choices
    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    path = _config_path(argv)
    if path and argv and argv[0] in parser.subcommands:
        _apply_config(parser.subcommands[argv[0]], read_config(path))
    return parser.parse_args(argv)


# --------------------------------------------------------------------------- requests


def _attrs(items: list[str]) -> dict:
    out: dict = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not key:
            raise UsageError(f"bad attribute {item!r}")
        out[key] = value if sep else True
    return out


def _scene_request(args, inline: bool) -> SceneRequest:
    if not inline:
        return SceneRequest(mask=args.mask, rgb=args.rgb, depth=args.depth, conf=args.conf, intrinsics=args.intrinsics)
    # a remote service cannot read our files, so rasters travel inline
    from .service import encode_file

    with tempfile.TemporaryDirectory(prefix="shapegrasp-") as tmp:
        return SceneRequest(
            mask=encode_file(args.mask),
            rgb=encode_file(args.rgb) if args.rgb else None,
            depth=_pfm(args.depth, tmp, "depth"),
            conf=_pfm(args.conf, tmp, "conf"),
            intrinsics=_intr(args.intrinsics),
        )


def _pfm(path: str | None, tmp: str, key: str):
    if path is None:
        return None
    from .scene_io import read_float_raster, write_pfm
    from .service import encode_file

    out = Path(tmp) / f"{key}.pfm"
    write_pfm(out, read_float_raster(path))
    return encode_file(out)


def _intr(path: str | None):
    if path is None:
        return None
    from .scene_io import read_intrinsics

    return read_intrinsics(path).to_dict()


def _pipeline_options(args) -> PipelineOptions:
    return PipelineOptions(
        mode=args.mode,
        epsilon_pct=args.epsilon_pct,
        omega=args.omega,
        alpha=args.alpha,
        gamma_2d=args.gamma_2d,
        gamma_3d=args.gamma_3d,
        gamma_step=args.gamma_step,
        voxel_size=args.voxel_size,
    )


def _reasoner_options(args) -> ReasonerOptions:
    return ReasonerOptions(
        backend=args.backend,
        model=args.model,
        rulebook=args.rulebook,
        stages=args.stages,
        no_object_name=args.no_object_name,
        max_gripper_width=args.max_gripper_width,
        attrs=_attrs(getattr(args, "attr", [])),
        max_retries=args.max_retries,
    )


def _post(server: str, route: str, payload: dict) -> dict:
    try:
        r = httpx.post(f"{server.rstrip('/')}/{route}", json=payload, timeout=300.0)
    except httpx.HTTPError as e:
        raise BackendUnavailable(f"service unreachable: {e}") from None
    if r.status_code == 400:
        body = r.json()
        err = ShapeGraspError(body.get("message", "service error"))
        err.code = body.get("error", "error")
        raise err
    if r.status_code != 200:
        raise BackendUnavailable(f"service returned HTTP {r.status_code}: {r.text[:200]}")
    return r.json()


def _write_outputs(args, report, svg: str | None) -> None:
    text = json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.svg and svg is not None:
        Path(args.svg).write_text(svg, encoding="utf-8")


def _finish(response) -> int:
    for w in response.report.selection.warnings:
        sys.stderr.write(json.dumps({"warning": w}) + "\n")
    if response.exit_code == EXIT_DEGENERATE:
        sys.stderr.write(json.dumps({"warning": "degenerate", "message": "decomposition has a single part"}) + "\n")
    return response.exit_code


# --------------------------------------------------------------------------- commands


def cmd_run(args) -> int:
    req = RunRequest(
        scene=_scene_request(args, inline=bool(args.server)),
        object=args.object,
        task=args.task,
        pipeline=_pipeline_options(args),
        reasoner=_reasoner_options(args),
        svg=bool(args.svg),
    )
    if args.server:
        resp = RunResponse.model_validate(_post(args.server, "run", req.model_dump(mode="json")))
    else:
        from .service import handle_run

        resp = handle_run(req)
    _write_outputs(args, resp.report, resp.svg)
    return _finish(resp)


def cmd_decompose(args) -> int:
    req = DecomposeRequest(scene=_scene_request(args, inline=bool(args.server)), pipeline=_pipeline_options(args), svg=bool(args.svg))
    if args.server:
        resp = DecomposeResponse.model_validate(_post(args.server, "decompose", req.model_dump(mode="json")))
    else:
        from .service import handle_decompose

        resp = handle_decompose(req)
    _write_outputs(args, resp.report, resp.svg)
    return _finish(resp)


def cmd_bench(args) -> int:
    from .bench.evaluate import evaluate, parse_range, sweep_thresholds
    from .bench.synth import load_suite
    from .pipeline import PipelineConfig
    from .reasoner.chain import ReasonerConfig

    gammas = parse_range(args.sweep) if args.sweep else None
    suite = load_suite(args.suite)
    if args.backend == "http":
        from .reasoner.backends import HttpChatBackend

        HttpChatBackend.from_env(args.model)  # fail fast when unconfigured
    rcfg = ReasonerConfig(
        backend=args.backend,
        model_id=args.model or ("mock" if args.backend == "mock" else os.environ.get("SHAPEGRASP_MODEL", "default")),
        stages=args.stages,
        include_object_name=not args.no_object_name,
        max_gripper_width_px=args.max_gripper_width,
        max_retries=args.max_retries,
    )
    report = evaluate(suite, PipelineConfig(mode=args.mode), rcfg, rulebook=args.rulebook, seed=args.seed, workers=args.workers)
    if gammas:
        names = set(args.sweep_object)
        unknown = names - {s.name for s in suite}
        if unknown:
            raise ConfigError(f"unknown sweep objects {sorted(unknown)}")
        for spec in suite:
            if not names or spec.name in names:
                report.sweep[spec.name] = sweep_thresholds(spec, gammas, seed=args.seed)
    table = report.table()
    if args.out:
        out = Path(args.out)
        out.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
    sys.stdout.write(table + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("shapegrasp.service:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "decompose": cmd_decompose, "bench": cmd_bench, "serve": cmd_serve}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except ShapeGraspError as e:
        return _emit_error(e)
    except OSError as e:
        return _emit_error(ShapeGraspError(str(e)))


def entry() -> None:
    sys.exit(main())
