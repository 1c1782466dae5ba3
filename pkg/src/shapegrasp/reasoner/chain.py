"""Two-stage prompt chain: part identification, then task scoring."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol

from pydantic import BaseModel, ValidationError, field_validator

from ..errors import ConfigError, MissingNodeInResponse, SchemaViolation

STAGE_SETS = {
    "full": ("P1", "P2", "P3", "P4"),
    "skip_identification": ("P3", "P4"),
    "skip_task_reasoning": ("P1", "P2", "P4"),
    "scores_only": ("P4",),
}
STAGE_ALIASES = {"no-ident": "skip_identification", "no-task": "skip_task_reasoning", "scores-only": "scores_only"}
GENERIC_OBJECT = "an object"


class Backend(Protocol):
    def complete(self, messages: list[dict], stage: str) -> str: ...


def _template(name: str) -> str:
    return resources.files(__package__).joinpath("templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


class LabelsReply(BaseModel):
    labels: dict[int, str]

    @field_validator("labels")
    @classmethod
    def _nonempty(cls, v: dict[int, str]) -> dict[int, str]:
        for k, s in v.items():
            if not s.strip():
                raise ValueError(f"label for node {k} is empty")
        return {k: s.strip() for k, s in v.items()}


class ScoresReply(BaseModel):
    scores: dict[int, float]

    @field_validator("scores")
    @classmethod
    def _range(cls, v: dict[int, float]) -> dict[int, float]:
        for k, s in v.items():
            if not (0.0 <= s <= 1.0):
                raise ValueError(f"score for node {k} is {s}, outside [0, 1]")
        return v


@dataclass
class ReasonerConfig:
    backend: str = "mock"
    model_id: str = "mock"
    stages: str = "full"
    include_object_name: bool = True
    max_gripper_width_px: float | None = None
    extra_object_attrs: dict = field(default_factory=dict)
    max_retries: int = 3
    temperature: float = 0.0

    def __post_init__(self) -> None:
        self.stages = STAGE_ALIASES.get(self.stages, self.stages)
        if self.stages not in STAGE_SETS:
            raise ConfigError(f"unknown stage set {self.stages!r}")
        if self.max_retries < 1:
            raise ConfigError("max_retries must be >= 1")


@dataclass
class SemanticAssignment:
    labels: dict[int, str]
    rationale: str = ""


@dataclass
class TaskScores:
    scores: dict[int, float]
    rationale: str = ""


@dataclass
class ReasonerTranscript:
    system: str
    turns: list[tuple[str, str]]  # (prompt, response) per executed stage
    stages: list[str]
    assignment: SemanticAssignment | None
    scores: TaskScores
    retry_count: int = 0
    attempts: list[dict] = field(default_factory=list)  # rejected structured replies

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "turns": [{"stage": s, "prompt": p, "response": r} for s, (p, r) in zip(self.stages, self.turns)],
            "labels": None if self.assignment is None else {str(k): v for k, v in sorted(self.assignment.labels.items())},
            "scores": {str(k): v for k, v in sorted(self.scores.scores.items())},
            "retry_count": self.retry_count,
            "rejected": self.attempts,
        }


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def extract_json(text: str):
    """Parse the first JSON object in ``text`` (code fences allowed)."""
    m = _FENCE.search(text)
    body = m.group(1) if m else text
    start = body.find("{")
    end = body.rfind("}")
    if start < 0 or end < start:
        raise ValueError("no JSON object found")
    return json.loads(body[start : end + 1])


def _parse(text: str, model: type[BaseModel], node_ids: list[int]):
    try:
        data = extract_json(text)
    except ValueError as e:
        raise SchemaViolation(f"invalid JSON: {e}") from None
    try:
        reply = model.model_validate(data)
    except ValidationError as e:
        msgs = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise SchemaViolation(msgs) from None
    got = reply.labels if isinstance(reply, LabelsReply) else reply.scores
    missing = sorted(set(node_ids) - set(got))
    extra = sorted(set(got) - set(node_ids))
    if missing or extra:
        raise MissingNodeInResponse(f"missing node ids {missing}, unknown node ids {extra}")
    return got


def _constraints(config: ReasonerConfig, note: dict) -> str:
    lines = []
    if config.max_gripper_width_px is not None:
        lines.append(
            f"Maximum gripper opening: {config.max_gripper_width_px:g} px. "
            "Parts wider than this cannot be grasped."
        )
    attrs = {**note, **config.extra_object_attrs}
    if attrs:
        desc = ", ".join(k if v is True else f"{k}={v}" for k, v in sorted(attrs.items()))
        lines.append(f"Object attributes: {desc}")
    return "\n".join(lines) + ("\n" if lines else "")


def run_chain(
    graph_json: str,
    object_name: str | None,
    task: str,
    config: ReasonerConfig,
    backend: Backend,
) -> ReasonerTranscript:
    if not task or not task.strip():
        raise ConfigError("task must be nonempty")
    graph = json.loads(graph_json)
    node_ids = [n["id"] for n in graph["nodes"]]
    obj = object_name if (object_name and config.include_object_name) else GENERIC_OBJECT
    fill = {
        "object": obj,
        "task": task.strip(),
        "graph": graph_json,
        "constraints": _constraints(config, graph.get("note", {})),
        "node_ids": ", ".join(map(str, node_ids)),
        "label_hint": "",
    }
    system = _template("system").format(**fill)
    messages = [{"role": "system", "content": system}]
    stages = STAGE_SETS[config.stages]
    turns: list[tuple[str, str]] = []
    attempts: list[dict] = []
    retries = 0
    labels = scores = None
    rationale_1 = rationale_3 = ""

    def ask(stage: str, prompt: str, model=None):
        nonlocal retries
        messages.append({"role": "user", "content": prompt})
        convo = list(messages)
        last_error: SchemaViolation | None = None
        for attempt in range(config.max_retries + 1 if model else 1):
            reply = backend.complete(convo, stage=stage)
            if model is None:
                messages.append({"role": "assistant", "content": reply})
                turns.append((prompt, reply))
                return reply
            try:
                parsed = _parse(reply, model, node_ids)
            except SchemaViolation as e:
                last_error = e
                attempts.append({"stage": stage, "response": reply, "error": e.to_dict()})
                if attempt == config.max_retries:
                    break
                retries += 1
                convo = convo + [
                    {"role": "assistant", "content": reply},
                    {"role": "user", "content": _template("retry").format(error=str(e))},
                ]
                continue
            messages.append({"role": "assistant", "content": reply})
            turns.append((prompt, reply))
            return parsed
        raise type(last_error)(f"{stage}: no valid reply after {config.max_retries} retries ({last_error})")

    if "P1" in stages:
        rationale_1 = ask("P1", _template("p1_identify").format(**fill))
    if "P2" in stages:
        labels = ask("P2", _template("p2_labels").format(**fill), LabelsReply)
        fill["label_hint"] = "Use the part names you assigned above. "
    if "P3" in stages:
        rationale_3 = ask("P3", _template("p3_task").format(**fill))
    scores = ask("P4", _template("p4_scores").format(**fill), ScoresReply)
    return ReasonerTranscript(
        system=system,
        turns=turns,
        stages=list(stages),
        assignment=None if labels is None else SemanticAssignment(dict(sorted(labels.items())), rationale_1),
        scores=TaskScores(dict(sorted(scores.items())), rationale_3),
        retry_count=retries,
        attempts=attempts,
    )


def select_part(scores: TaskScores | dict, graph: dict) -> int:
    """Highest score; ties go to the larger part, then the lower node id."""
    s = scores.scores if isinstance(scores, TaskScores) else scores
    area = {n["id"]: n["area_pct"] for n in graph["nodes"]}
    return min(s, key=lambda k: (-s[k], -area.get(k, 0.0), k))
