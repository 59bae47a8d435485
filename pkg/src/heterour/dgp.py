"""Simulation designs and the Monte Carlo size/power harness."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import math
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from heterour.bootstrap import abb_test, derive_seed, thread_count
from heterour.config import TestConfig
from heterour.core import TimeSeries

__all__ = [
    "Innovation",
    "VolCase",
    "DgpSpec",
    "McReport",
    "PRESETS",
    "BURN_IN",
    "volatility_profile",
    "draw_innovations",
    "simulate_series",
    "mc_size_power",
]

BURN_IN = 100

# (theta, phi) pairs as printed in the simulation design
PRESETS = {"iid": (0.0, 0.0), "paper-ma1": (0.5, 0.0), "paper-ar1": (0.0, 0.5)}


class Innovation(str, Enum):
    NORMAL = "normal"
    STUDENT_T3 = "t3"
    DOUBLE_EXP = "de"


class VolCase(str, Enum):
    CONSTANT = "constant"
    ONE_SHIFT = "one-shift"
    TWO_SHIFTS = "two-shifts"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class DgpSpec:
    """``y_t = exp(-c/T) y_{t-1} + sigma_t e_t`` with ARMA(1,1) errors
    ``e_t = theta e_{t-1} + phi eta_{t-1} + eta_t``."""

    c: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    innovation: Innovation = Innovation.NORMAL
    vol_case: VolCase = VolCase.CONSTANT
    sigma0: float = 1.0
    sigma1: float = 1.0
    T: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "innovation", Innovation(self.innovation))
        object.__setattr__(self, "vol_case", VolCase(self.vol_case))
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if not abs(self.theta) < 1:
            raise ValueError("|theta| must be below one")
        if not (self.sigma0 > 0 and self.sigma1 > 0):
            raise ValueError("volatility levels must be positive")
        if int(self.T) != self.T or self.T < 25:
            raise ValueError("T must be an integer of at least 25")
        object.__setattr__(self, "T", int(self.T))

    @property
    def gamma0(self) -> float:
        return math.exp(-self.c / self.T)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "theta": self.theta,
            "phi": self.phi,
            "innovation": self.innovation.value,
            "vol_case": self.vol_case.value,
            "sigma0": self.sigma0,
            "sigma1": self.sigma1,
            "T": self.T,
        }


@dataclass(frozen=True)
class McReport:
    rejection_rate: dict[str, float]
    n_reps: int
    spec: DgpSpec
    alpha: float
    config: TestConfig
    p_values: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def volatility_profile(
    vol_case: VolCase | str, sigma0: float, sigma1: float, T: int
) -> np.ndarray:
    """Deterministic volatility ``sigma(t/T)`` for ``t = 1..T``."""
    vol_case = VolCase(vol_case)
    tau = np.arange(1, T + 1) / T
    jump = sigma1 - sigma0
    if vol_case is VolCase.CONSTANT:
        return np.full(T, float(sigma0))
    if vol_case is VolCase.ONE_SHIFT:
        return sigma0 + jump * (tau > 0.5)
    if vol_case is VolCase.TWO_SHIFTS:
        return sigma0 + jump * ((tau > 0.3) & (tau < 0.7))
    return sigma0 + jump * (1.0 - np.exp(-15.0 * (tau - 0.5) ** 2))


def draw_innovations(innovation: Innovation | str, size: int, rng: np.random.Generator) -> np.ndarray:
    innovation = Innovation(innovation)
    if innovation is Innovation.NORMAL:
        return rng.standard_normal(size)
    if innovation is Innovation.STUDENT_T3:
        z = rng.standard_normal(size)
        return z / np.sqrt(rng.chisquare(3, size) / 3.0)
    p = rng.random(size)
    u = np.where(p > 0, p, 2.0**-54) - 0.5
    # inverse CDF of the standard Laplace law
    return -np.sign(u) * np.log1p(-2.0 * np.abs(u))


def simulate_series(spec: DgpSpec, seed: int) -> TimeSeries:
    """Draw one series of length ``T`` with ``y_0 = 0``.

    The error recursion starts from ``e = eta = 0`` and runs ``BURN_IN``
    steps before the first retained observation.
    """
    rng = np.random.default_rng(seed)
    eta = draw_innovations(spec.innovation, BURN_IN + spec.T, rng)
    eps = lfilter([1.0, spec.phi], [1.0, -spec.theta], eta)[BURN_IN:]
    sigma = volatility_profile(spec.vol_case, spec.sigma0, spec.sigma1, spec.T)
    y = lfilter([1.0], [1.0, -spec.gamma0], sigma * eps)
    return TimeSeries(y)


def mc_size_power(
    spec: DgpSpec,
    cfg: TestConfig,
    n_reps: int,
    alpha: float,
    master_seed: int,
    threads: Optional[int] = None,
    progress=None,
) -> McReport:
    """Rejection frequencies of the bootstrap tests over simulated series.

    Replication ``j`` simulates with seed ``derive_seed(master_seed, j, 0)``
    and bootstraps with ``derive_seed(master_seed, j, 1)``, so each
    replication depends only on ``(master_seed, j)``.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")

    def one(j: int) -> dict[str, float]:
        y = simulate_series(spec, derive_seed(master_seed, j, 0))
        rep_cfg = replace(cfg, seed=derive_seed(master_seed, j, 1))
        res = abb_test(y, rep_cfg, threads=1)
        if progress is not None:
            progress()
        return res.p_value

    n_threads = min(thread_count(threads), n_reps)
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            results = list(pool.map(one, range(n_reps)))
    else:
        results = [one(j) for j in range(n_reps)]
    names = cfg.stat.names
    pvals = {k: np.array([r[k] for r in results]) for k in names}
    rates = {k: int(np.count_nonzero(pvals[k] < alpha)) / n_reps for k in names}
    return McReport(
        rejection_rate=rates, n_reps=n_reps, spec=spec, alpha=alpha, config=cfg, p_values=pvals
    )
