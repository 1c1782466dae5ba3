"""Chat backends: an OpenAI-compatible HTTP client, a rulebook mock and a scripted stub."""

from __future__ import annotations

import json
import os
import re
from importlib import resources
from pathlib import Path

import httpx

from ..errors import BackendUnavailable, ConfigError, RulebookMissingEntry
from .chain import GENERIC_OBJECT

ENV_BASE = "SHAPEGRASP_API_BASE"
ENV_KEY = "SHAPEGRASP_API_KEY"
ENV_MODEL = "SHAPEGRASP_MODEL"


class HttpChatBackend:
    def __init__(self, base_url: str, model: str, api_key: str | None = None, timeout: float = 120.0, client: httpx.Client | None = None):
        if not base_url:
            raise ConfigError("HTTP backend needs a base URL")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, model: str | None = None) -> "HttpChatBackend":
        base = os.environ.get(ENV_BASE)
        if not base:
            raise BackendUnavailable(f"{ENV_BASE} is not set")
        return cls(base, model or os.environ.get(ENV_MODEL, "default"), os.environ.get(ENV_KEY))

    def complete(self, messages: list[dict], stage: str = "") -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"model": self.model, "messages": messages, "temperature": 0}
        try:
            r = self.client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
            r.raise_for_status()
            return r.json()["choices"][0]["message"]["content"]
        except httpx.HTTPError as e:
            raise BackendUnavailable(f"chat request failed: {e}") from None
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise BackendUnavailable(f"unexpected chat response shape: {e}") from None


class ScriptedBackend:
    """Replays canned replies in order; used to exercise retries."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.calls: list[tuple[str, list[dict]]] = []

    def complete(self, messages: list[dict], stage: str = "") -> str:
        self.calls.append((stage, list(messages)))
        if not self.replies:
            raise BackendUnavailable("scripted backend ran out of replies")
        return self.replies.pop(0)


# --------------------------------------------------------------------------- mock


def default_rulebook_path() -> Path:
    return Path(str(resources.files("shapegrasp.bench").joinpath("data").joinpath("rulebook.json")))


def load_rulebook(path: str | Path | None = None) -> dict:
    p = Path(path) if path else default_rulebook_path()
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read rulebook {p}: {e}") from None


_GRAPH = re.compile(r"<graph>\s*(.*?)\s*</graph>", re.S)
_OBJECT = re.compile(r"^Object: (.*)$", re.M)
_TASK = re.compile(r"^Task: (.*)$", re.M)
_WIDTH = re.compile(r"^Maximum gripper opening: ([0-9.eE+-]+) px", re.M)
_ATTRS = re.compile(r"^Object attributes: (.*)$", re.M)


def _norm(s: str) -> str:
    return " ".join(s.lower().split())


def _matches(node: dict, pred: dict) -> bool:
    if "color" in pred:
        want = pred["color"] if isinstance(pred["color"], list) else [pred["color"]]
        if node["color"] not in want:
            return False
    if "shape" in pred:
        want = pred["shape"] if isinstance(pred["shape"], list) else [pred["shape"]]
        if node["shape"] not in want:
            return False
    for key, field in (("aspect", "aspect_ratio"), ("area", "area_pct"), ("width", "width_px")):
        if f"min_{key}" in pred and node[field] < pred[f"min_{key}"]:
            return False
        if f"max_{key}" in pred and node[field] > pred[f"max_{key}"]:
            return False
    return True


def pick_nodes(nodes: list[dict], pred: dict) -> list[int]:
    """Node ids selected by a rulebook predicate.

    Filters (color, shape, min/max aspect, area, width) narrow the candidates;
    ``rank`` then keeps the ``count`` nodes at position ``index`` after
    sorting by ``by`` in ``order``.
    """
    cands = [n for n in nodes if _matches(n, pred)]
    rank = pred.get("rank")
    if rank:
        key = rank.get("by", "area_pct")
        sign = -1.0 if rank.get("order", "desc") == "desc" else 1.0
        cands.sort(key=lambda n: (sign * n[key], n["id"]))
        i = rank.get("index", 0)
        cands = cands[i : i + rank.get("count", 1)]
    return [n["id"] for n in cands]


class MockBackend:
    """Deterministic stand-in for a chat model driven by a JSON rulebook.

    It reads the object, task, constraints and graph from the system message
    and answers each stage from the rulebook.  Labels are only known to the
    scoring stage when an earlier reply in the conversation assigned them, and
    task variants (for example a hot object) are only honoured when the
    free-form task reasoning turn took place.
    """

    def __init__(self, rulebook: dict | None = None, strict: bool = False):
        self.rulebook = rulebook if rulebook is not None else load_rulebook()
        self.strict = strict
        self.objects = {_norm(k): v for k, v in self.rulebook.get("objects", {}).items()}
        self.tasks = {_norm(k): v for k, v in self.rulebook.get("tasks", {}).items()}

    def _context(self, messages: list[dict]) -> dict:
        system = messages[0]["content"]
        graph = json.loads(_GRAPH.search(system).group(1))
        width = _WIDTH.search(system)
        attrs = _ATTRS.search(system)
        flags = {}
        if attrs:
            for item in attrs.group(1).split(", "):
                k, _, v = item.partition("=")
                flags[k] = True if not v else v
        return {
            "object": _norm(_OBJECT.search(system).group(1)),
            "task": _norm(_TASK.search(system).group(1)),
            "nodes": graph["nodes"],
            "max_width": float(width.group(1)) if width else None,
            "attrs": flags,
        }

    def _object_rules(self, obj: str) -> dict | None:
        rules = self.objects.get(obj)
        if rules is None and obj != GENERIC_OBJECT and self.strict:
            raise RulebookMissingEntry(f"no rulebook entry for object {obj!r}")
        return rules

    def _labels(self, ctx: dict) -> dict[int, str]:
        rules = self._object_rules(ctx["object"])
        if rules is None:
            return {n["id"]: f"part_{n['id']}" for n in ctx["nodes"]}
        out: dict[int, str] = {}
        for rule in rules["parts"]:
            free = [n for n in ctx["nodes"] if n["id"] not in out]
            ids = [n["id"] for n in free] if rule.get("rest") else pick_nodes(free, rule.get("match", {}))
            for i in ids:
                out[i] = rule["label"]
        for n in ctx["nodes"]:
            out.setdefault(n["id"], f"part_{n['id']}")
        return dict(sorted(out.items()))

    @staticmethod
    def _prior_labels(messages: list[dict]) -> dict[int, str] | None:
        for m in messages:
            if m["role"] == "assistant" and '"labels"' in m["content"]:
                try:
                    data = json.loads(m["content"])
                    return {int(k): v for k, v in data["labels"].items()}
                except (ValueError, KeyError):
                    continue
        return None

    @staticmethod
    def _reasoned(messages: list[dict]) -> bool:
        return any(m["role"] == "assistant" and m["content"].startswith("Task reasoning") for m in messages)

    def _scores(self, ctx: dict, messages: list[dict]) -> dict[int, float]:
        labels = self._prior_labels(messages)
        reasoned = self._reasoned(messages)
        rules = self._object_rules(ctx["object"])
        task_rules = rules.get("tasks", {}) if rules else {}
        task_rules = {_norm(k): v for k, v in task_rules.items()}
        entry = task_rules.get(ctx["task"])
        if entry is None and rules is not None and self.strict:
            raise RulebookMissingEntry(f"no rule for task {ctx['task']!r} on {ctx['object']!r}")
        ids = [n["id"] for n in ctx["nodes"]]
        if labels is not None and entry is not None:
            table = entry["scores"]
            if reasoned:
                for var in entry.get("variants", []):
                    if all(ctx["attrs"].get(k) == v for k, v in var["if_attrs"].items()):
                        table = var["scores"]
                        break
            default = table.get("*", 0.5)
            scores = {i: float(table.get(labels[i], default)) for i in ids}
        else:
            generic = self.tasks.get(ctx["task"], self.rulebook.get("default_task", {}))
            pred = generic.get("reasoned_guess" if reasoned else "blind_guess", {"rank": {"by": "area_pct"}})
            chosen = set(pick_nodes(ctx["nodes"], pred))
            scores = {i: (0.9 if i in chosen else 0.1) for i in ids}
        if ctx["max_width"] is not None:
            for n in ctx["nodes"]:
                if n["width_px"] > ctx["max_width"]:
                    scores[n["id"]] = round(scores[n["id"]] * 0.1, 6)
        return scores

    def complete(self, messages: list[dict], stage: str = "") -> str:
        ctx = self._context(messages)
        if stage == "P1":
            labels = self._labels(ctx)
            lines = [
                f"Node {n['id']} ({n['shape']}, {n['area_pct']}% of the area, {n['color']}) looks like the {labels[n['id']]}."
                for n in ctx["nodes"]
            ]
            return "Part reasoning:\n" + "\n".join(lines)
        if stage == "P2":
            labels = self._labels(ctx)
            return json.dumps({"labels": {str(k): v for k, v in labels.items()}}, sort_keys=True)
        if stage == "P3":
            labels = self._prior_labels(messages)
            names = sorted(set(labels.values())) if labels else []
            return f"Task reasoning for '{ctx['task']}': considered parts {', '.join(names) or 'by geometry only'}."
        if stage == "P4":
            scores = self._scores(ctx, messages)
            return json.dumps({"scores": {str(k): v for k, v in sorted(scores.items())}}, sort_keys=True)
        raise ConfigError(f"unknown stage {stage!r}")


def make_backend(kind: str, rulebook: str | Path | None = None, model: str | None = None, strict: bool = False):
    if kind == "mock":
        return MockBackend(load_rulebook(rulebook), strict=strict)
    if kind == "http":
        return HttpChatBackend.from_env(model)
    raise ConfigError(f"unknown backend {kind!r}")
