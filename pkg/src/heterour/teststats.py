"""LAD coefficient and t-ratio unit root statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence
import warnings

import numpy as np

from heterour.core import LadFit, TimeSeries, lad_slopes
from heterour.exceptions import (
    DegenerateLaggedVector,
    InsufficientLength,
    LengthMismatch,
    ZeroBandwidth,
)
from heterour.volatility import VolatilityEstimate

__all__ = [
    "StatPair",
    "silverman_bandwidth",
    "density_at_zero",
    "compute_stats",
    "statistics_rows",
]

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class StatPair:
    """Observed statistics and the parts the t-ratio is built from.

    ``l_stat = n (gamma - 1)`` and
    ``t_stat = 2 f0_hat sqrt(centered_ss) (gamma - 1)``.
    """

    l_stat: float
    t_stat: float
    f0_hat: float
    centered_ss: float
    gamma_hat: float
    n_obs: int


def _silverman_rows(e: np.ndarray) -> np.ndarray:
    n = e.shape[1]
    sd = e.std(axis=1, ddof=1)
    q75, q25 = np.percentile(e, [75, 25], axis=1)
    iqr = (q75 - q25) / 1.34
    spread = np.minimum(sd, iqr)
    # a zero IQR with positive spread falls back to the standard deviation
    spread = np.where(spread > 0, spread, np.maximum(sd, iqr))
    if np.any(spread <= 0):
        raise ZeroBandwidth("standard deviation and IQR are both zero")
    return 0.9 * spread * n ** (-0.2)


def silverman_bandwidth(x: Sequence[float] | np.ndarray) -> float:
    """Silverman's rule ``0.9 min(sd, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(x, dtype=np.float64)
    return float(_silverman_rows(x[None, :])[0])


def _density_rows(e: np.ndarray, bw: np.ndarray) -> np.ndarray:
    z = e / bw[:, None]
    return np.exp(-0.5 * z * z).sum(axis=1) / (_SQRT_2PI * e.shape[1] * bw)


def density_at_zero(
    std_resid: Sequence[float] | np.ndarray, bandwidth: Optional[float] = None
) -> float:
    """Gaussian kernel density estimate of the standardized errors at zero.

    Parameters
    ----------
    std_resid : array_like
        Standardized residuals.
    bandwidth : float, optional
        Fixed bandwidth. Silverman's rule of thumb is used when omitted.
    """
    e = np.asarray(std_resid, dtype=np.float64).ravel()
    if bandwidth is None:
        if e.shape[0] < 8:
            raise InsufficientLength("density estimation needs at least 8 residuals")
        bw = _silverman_rows(e[None, :])
    else:
        if not bandwidth > 0:
            raise ZeroBandwidth("bandwidth must be positive")
        bw = np.array([float(bandwidth)])
    return float(_density_rows(e[None, :], bw)[0])


def statistics_rows(
    response: np.ndarray, lagged: np.ndarray, sigma: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised statistics for a stack of regressions.

    ``response`` and ``lagged`` have shape ``(R, n)``; ``sigma`` has shape
    ``(n,)`` and is shared by all rows. Returns
    ``(l_stat, t_stat, f0_hat, centered_ss, gamma_hat)`` each of shape ``(R,)``.
    """
    gamma = lad_slopes(response, lagged)
    resid = response - gamma[:, None] * lagged
    return _stats_from_fit(gamma, resid, lagged, sigma)


def _stats_from_fit(gamma, resid, lagged, sigma):
    n = resid.shape[1]
    std = resid / sigma
    f0 = _density_rows(std, _silverman_rows(std))
    centered = lagged - lagged.mean(axis=1, keepdims=True)
    css = np.einsum("ij,ij->i", centered, centered)
    dev = gamma - 1.0
    return n * dev, 2.0 * f0 * np.sqrt(css) * dev, f0, css, gamma


def compute_stats(
    y: TimeSeries | np.ndarray,
    fit: LadFit,
    sigma_hat: VolatilityEstimate | np.ndarray,
) -> StatPair:
    """Coefficient statistic ``L`` and t-ratio ``t`` for a fitted series.

    ``sigma_hat`` is the volatility path aligned with ``fit.residuals``
    (the true path in the infeasible variant). The density at zero is
    estimated from ``residual / sigma``.
    """
    values = y.values if isinstance(y, TimeSeries) else np.asarray(y, dtype=np.float64)
    if fit.t_range[1] != values.shape[0]:
        raise LengthMismatch("fit does not belong to this series")
    sigma = sigma_hat.sigma_hat if isinstance(sigma_hat, VolatilityEstimate) else sigma_hat
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != fit.residuals.shape:
        raise LengthMismatch("volatility path and residuals differ in length")
    lagged = np.asarray(fit.lagged)
    if np.ptp(lagged) == 0:
        warnings.warn(
            "lagged regressor is constant; t-ratio is identically zero",
            DegenerateLaggedVector,
            stacklevel=2,
        )
    l_stat, t_stat, f0, css, gamma = _stats_from_fit(
        np.array([fit.gamma_hat]), fit.residuals[None, :], lagged[None, :], sigma
    )
    return StatPair(
        l_stat=float(l_stat[0]),
        t_stat=float(t_stat[0]),
        f0_hat=float(f0[0]),
        centered_ss=float(css[0]),
        gamma_hat=float(gamma[0]),
        n_obs=fit.n_obs,
    )
