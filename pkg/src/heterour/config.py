"""Test configuration and result containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import json
from typing import Any, Optional, Union

import numpy as np

from heterour.core import DetKind, DeterministicSpec
from heterour.volatility import KernelSpec

__all__ = ["StatKind", "TestConfig", "TestResult", "DECISION_LEVELS"]

DECISION_LEVELS = (0.01, 0.05, 0.10)


class StatKind(str, Enum):
    LT = "lt"
    TT = "tt"
    MZ = "mz"
    ALL = "all"
    LAD = "lad"

    @property
    def names(self) -> tuple[str, ...]:
        if self is StatKind.ALL:
            return ("lt", "tt", "mz")
        if self is StatKind.LAD:
            return ("lt", "tt")
        return (self.value,)


@dataclass(frozen=True)
class TestConfig:
    """Tuning choices for one bootstrap unit root test.

    ``bandwidth`` and ``block`` accept ``"auto"`` (cross-validation and the
    Hall-Horowitz-Jing rule respectively) or a fixed value. ``volatility``
    set to ``"constant"`` replaces the kernel estimate by a flat path; it
    exists for ablation studies.
    """

    __test__ = False

    deterministic: DeterministicSpec = field(default_factory=DeterministicSpec)
    stat: StatKind = StatKind.ALL
    B: int = 499
    alpha: float = 0.05
    bandwidth: Union[str, float] = "auto"
    block: Union[str, int] = "auto"
    kernel: KernelSpec = KernelSpec.GAUSSIAN
    seed: int = 0
    lag_p: int = 0
    volatility: str = "kernel"

    def __post_init__(self) -> None:
        det = self.deterministic
        if not isinstance(det, DeterministicSpec):
            det = DeterministicSpec(DetKind(det))
        object.__setattr__(self, "deterministic", det)
        object.__setattr__(self, "stat", StatKind(self.stat))
        object.__setattr__(self, "kernel", KernelSpec(self.kernel))
        if int(self.B) != self.B or self.B < 19:
            raise ValueError("B must be an integer of at least 19")
        object.__setattr__(self, "B", int(self.B))
        if not 0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 0.5]")
        if self.bandwidth != "auto":
            h = float(self.bandwidth)
            if not 0 < h <= 1:
                raise ValueError("bandwidth must lie in (0, 1]")
            object.__setattr__(self, "bandwidth", h)
        if self.block != "auto":
            if int(self.block) != self.block or int(self.block) < 1:
                raise ValueError("block length must be a positive integer")
            object.__setattr__(self, "block", int(self.block))
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.lag_p < 0:
            raise ValueError("lag_p must be nonnegative")
        if self.volatility not in ("kernel", "constant"):
            raise ValueError("volatility must be 'kernel' or 'constant'")

    def to_dict(self) -> dict[str, Any]:
        return {
            "deterministic": self.deterministic.kind.value,
            "c_bar": self.deterministic.c_bar,
            "stat": self.stat.value,
            "B": self.B,
            "alpha": self.alpha,
            "bandwidth": self.bandwidth,
            "block": self.block,
            "kernel": self.kernel.value,
            "seed": self.seed,
            "lag_p": self.lag_p,
            "volatility": self.volatility,
        }


@dataclass(frozen=True)
class TestResult:
    """Outcome of a bootstrap test: statistics, draws and resolved tuning."""

    __test__ = False

    statistic: dict[str, float]
    p_value: dict[str, float]
    draws: dict[str, np.ndarray]
    b_used: int
    h_used: Optional[float]
    config: TestConfig
    sigma_path: Optional[np.ndarray] = field(default=None, repr=False)
    first_index: int = 1

    @property
    def B(self) -> int:
        return self.config.B

    def reject(self, alpha: Optional[float] = None) -> dict[str, bool]:
        level = self.config.alpha if alpha is None else alpha
        return {k: bool(p < level) for k, p in self.p_value.items()}

    def decision_at(self) -> dict[str, dict[str, bool]]:
        return {f"{a:.2f}": self.reject(a) for a in DECISION_LEVELS}

    def to_dict(self) -> dict[str, Any]:
        cfg = self.config
        return {
            "schema": 1,
            "statistic": {k: float(v) for k, v in self.statistic.items()},
            "p_value": {k: float(v) for k, v in self.p_value.items()},
            "b_used": int(self.b_used),
            "h_used": None if self.h_used is None else float(self.h_used),
            "B": cfg.B,
            "deterministic": cfg.deterministic.kind.value,
            "c_bar": cfg.deterministic.c_bar,
            "seed": cfg.seed,
            "alpha": cfg.alpha,
            "kernel": cfg.kernel.value,
            "lag_p": cfg.lag_p,
            "reject": self.reject(),
            "decision_at": self.decision_at(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"
