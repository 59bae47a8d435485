"""Kernel smoothing of absolute residuals into a volatility path."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from heterour.exceptions import DegenerateResiduals, InsufficientLength

__all__ = [
    "KernelSpec",
    "VolatilityEstimate",
    "DEFAULT_GRID_CONSTANTS",
    "kernel_function",
    "kernel_weights",
    "estimate_volatility",
    "loo_volatility",
    "cv_criterion",
    "cv_bandwidth",
    "default_bandwidth_grid",
]

DEFAULT_GRID_CONSTANTS = (0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0)


class KernelSpec(str, Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"


def kernel_function(kind: KernelSpec | str, u: np.ndarray) -> np.ndarray:
    """Evaluate a kernel that integrates to one."""
    kind = KernelSpec(kind)
    u = np.asarray(u, dtype=np.float64)
    if kind is KernelSpec.GAUSSIAN:
        return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)
    if kind is KernelSpec.EPANECHNIKOV:
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


@dataclass(frozen=True)
class VolatilityEstimate:
    sigma_hat: np.ndarray
    bandwidth_h: float
    kernel: KernelSpec


def _lag_kernel(n: int, h: float, kernel: KernelSpec) -> np.ndarray:
    # k((t - s) / (n h)) for t - s = -(n-1) .. n-1
    lags = np.arange(-(n - 1), n, dtype=np.float64)
    return kernel_function(kernel, lags / (n * h))


def kernel_weights(n: int, h: float, kernel: KernelSpec | str = KernelSpec.GAUSSIAN) -> np.ndarray:
    """Dense ``n x n`` matrix of normalised smoothing weights ``w[t, s]``."""
    kernel = KernelSpec(kernel)
    t = np.arange(n, dtype=np.float64)
    k = kernel_function(kernel, (t[:, None] - t[None, :]) / (n * h))
    return k / k.sum(axis=1, keepdims=True)


def _check_abs_resid(abs_resid: Sequence[float] | np.ndarray) -> np.ndarray:
    a = np.asarray(abs_resid, dtype=np.float64).ravel()
    if a.shape[0] < 8:
        raise InsufficientLength("volatility estimation needs at least 8 residuals")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("absolute residuals must be finite and nonnegative")
    if not np.any(a > 0):
        raise DegenerateResiduals("all absolute residuals are zero")
    return a


def estimate_volatility(
    abs_resid: Sequence[float] | np.ndarray,
    h: float,
    kernel: KernelSpec | str = KernelSpec.GAUSSIAN,
) -> VolatilityEstimate:
    """Local weighted mean of absolute residuals.

    ``sigma_t = sum_s w[t, s] |u_s|`` with ``w[t, s]`` proportional to
    ``k((t - s) / (n h))`` and normalised over ``s``, which also takes care
    of the boundaries.
    """
    kernel = KernelSpec(kernel)
    a = _check_abs_resid(abs_resid)
    if not 0 < h <= 1:
        raise ValueError("bandwidth must lie in (0, 1]")
    n = a.shape[0]
    kv = _lag_kernel(n, h, kernel)
    num = np.convolve(a, kv)[n - 1 : 2 * n - 1]
    den = np.convolve(np.ones(n), kv)[n - 1 : 2 * n - 1]
    sigma = num / den
    if not np.all(sigma > 0):
        raise DegenerateResiduals(
            "volatility estimate is zero somewhere; use a wider bandwidth or kernel"
        )
    sigma.setflags(write=False)
    return VolatilityEstimate(sigma_hat=sigma, bandwidth_h=float(h), kernel=kernel)


def loo_volatility(
    abs_resid: Sequence[float] | np.ndarray,
    h: float,
    kernel: KernelSpec | str = KernelSpec.GAUSSIAN,
) -> np.ndarray:
    """Leave-one-out path ``sigma_{-t}(h)``; ``nan`` where no weight remains."""
    kernel = KernelSpec(kernel)
    a = np.asarray(abs_resid, dtype=np.float64)
    n = a.shape[0]
    kv = _lag_kernel(n, h, kernel)
    k0 = kv[n - 1]
    num = np.convolve(a, kv)[n - 1 : 2 * n - 1] - k0 * a
    den = np.convolve(np.ones(n), kv)[n - 1 : 2 * n - 1] - k0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def cv_criterion(
    abs_resid: Sequence[float] | np.ndarray,
    h: float,
    kernel: KernelSpec | str = KernelSpec.GAUSSIAN,
) -> float:
    """Leave-one-out squared error ``sum_t (|u_t| - sigma_{-t}(h))^2``.

    Returns ``inf`` when some ``sigma_{-t}`` has no positive weight.
    """
    a = np.asarray(abs_resid, dtype=np.float64)
    loo = loo_volatility(a, h, kernel)
    if np.any(np.isnan(loo)):
        return float("inf")
    return float(np.sum((a - loo) ** 2))


def default_bandwidth_grid(n: int) -> list[float]:
    base = n ** (-0.2)
    return [min(c * base, 1.0) for c in DEFAULT_GRID_CONSTANTS]


def cv_bandwidth(
    abs_resid: Sequence[float] | np.ndarray,
    kernel: KernelSpec | str = KernelSpec.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
) -> float:
    """Bandwidth on ``grid`` minimising the leave-one-out criterion.

    Ties go to the smaller bandwidth. The default grid is
    ``c * n**(-1/5)`` for the constants in ``DEFAULT_GRID_CONSTANTS``,
    clipped at one.
    """
    a = _check_abs_resid(abs_resid)
    if grid is None:
        grid = default_bandwidth_grid(a.shape[0])
    grid = [float(h) for h in grid]
    if not grid:
        raise ValueError("bandwidth grid is empty")
    if any(not 0 < h <= 1 for h in grid):
        raise ValueError("bandwidth candidates must lie in (0, 1]")
    scores = [cv_criterion(a, h, kernel) for h in grid]
    best = min(range(len(grid)), key=lambda i: (scores[i], grid[i]))
    if not np.isfinite(scores[best]):
        raise ValueError("no bandwidth on the grid gives a defined leave-one-out fit")
    return grid[best]
