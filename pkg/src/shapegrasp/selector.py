"""Threshold search over a decomposition routine and the 2D/3D choice rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .errors import ConfigError


@dataclass(frozen=True)
class SelectorConfig:
    gamma_init_2d: float = 0.15
    gamma_init_3d: float = 0.2
    gamma_step: float = 0.025
    gamma_floor: float = 0.01
    omega: int = 10
    alpha: float = 0.85

    def __post_init__(self) -> None:
        for name in ("gamma_init_2d", "gamma_init_3d", "gamma_step", "gamma_floor", "alpha"):
            v = getattr(self, name)
            if not 0 < v < 1 and not (name == "alpha" and v == 1):
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.gamma_floor >= min(self.gamma_init_2d, self.gamma_init_3d):
            raise ConfigError("gamma_floor must be below both initial thresholds")
        if self.omega < 1:
            raise ConfigError("omega must be >= 1")


class Reason(str, Enum):
    TOO_MANY_PARTS_3D = "TooManyParts3D"
    LOW_DEPTH_CONFIDENCE = "LowDepthConfidence"
    PREFERRED_3D = "Preferred3D"
    FORCED_2D = "Forced2D"


@dataclass
class Decomposition:
    parts: list
    source: str  # "2d" or "3d"
    gamma_used: float
    iterations: int  # number of threshold reductions performed
    degenerate: bool = False
    gammas_tried: list[float] = field(default_factory=list)

    @property
    def runs(self) -> int:
        return len(self.gammas_tried)

    def summary(self) -> dict:
        return {
            "source": self.source,
            "parts": len(self.parts),
            "gamma_used": self.gamma_used,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
            "gammas_tried": list(self.gammas_tried),
        }


@dataclass
class SelectionResult:
    chosen: Decomposition
    rejected: Decomposition | None
    reason: Reason
    conf_fraction: float


def gamma_sequence(gamma_init: float, step: float = 0.025, floor: float = 0.01) -> list[float]:
    """gamma_init, gamma_init - step, ... down to (and including) the last value >= floor."""
    out = []
    k = 0
    while True:
        g = round(gamma_init - k * step, 6)
        if g < floor - 1e-12:
            break
        out.append(g)
        k += 1
    return out


def threshold_search(
    decompose_fn: Callable[[float], Sequence],
    gamma_init: float,
    config: SelectorConfig = SelectorConfig(),
    source: str = "2d",
) -> Decomposition:
    """Lower the threshold until ``decompose_fn`` yields at least two parts."""
    tried: list[float] = []
    parts: Sequence = []
    gamma = gamma_init
    for gamma in gamma_sequence(gamma_init, config.gamma_step, config.gamma_floor):
        tried.append(gamma)
        parts = decompose_fn(gamma)
        if len(parts) >= 2:
            break
    return Decomposition(
        parts=list(parts),
        source=source,
        gamma_used=gamma,
        iterations=len(tried) - 1,
        degenerate=len(parts) < 2,
        gammas_tried=tried,
    )


def select(
    c2d: Decomposition,
    c3d: Decomposition | None,
    conf_fraction: float,
    config: SelectorConfig = SelectorConfig(),
) -> SelectionResult:
    """Take the 3D decomposition iff it has at most omega parts and depth confidence is at least alpha."""
    if c3d is None:
        return SelectionResult(c2d, None, Reason.FORCED_2D, conf_fraction)
    few = len(c3d.parts) <= config.omega
    confident = conf_fraction >= config.alpha
    if few and confident:
        return SelectionResult(c3d, c2d, Reason.PREFERRED_3D, conf_fraction)
    reason = Reason.TOO_MANY_PARTS_3D if not few else Reason.LOW_DEPTH_CONFIDENCE
    return SelectionResult(c2d, c3d, reason, conf_fraction)
