"""Least-squares M statistics (MZ_alpha, MSB, MZ_t).

These are evaluated with the presample value ``y_0 = 0`` and the
autoregressive spectral estimate ``s2_ar = sigma2 / (1 - sum beta_i)^2``
from the regression ``dy_t = b0 y_{t-1} + sum_i b_i dy_{t-i} + e_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from heterour.core import TimeSeries
from heterour.exceptions import InsufficientLength, NearUnitDenominator, SingularDesign

__all__ = ["MStats", "m_statistics", "mz_alpha_rows", "abb_m_test"]


@dataclass(frozen=True)
class MStats:
    mz_alpha: float
    msb: float
    mz_t: float
    s_ar2: float
    lag_p: int


def _design(y: np.ndarray, lag_p: int) -> tuple[np.ndarray, np.ndarray]:
    """Response ``(R, m)`` and regressors ``(R, m, p+1)`` for t = p+1..T."""
    n = y.shape[1]
    z = np.concatenate((np.zeros((y.shape[0], 1)), y), axis=1)
    dz = np.diff(z, axis=1)  # dz[:, t-1] = dy_t, t = 1..T
    cols = [z[:, lag_p:n]]  # y_{t-1}
    for i in range(1, lag_p + 1):
        cols.append(dz[:, lag_p - i : n - i])
    return dz[:, lag_p:], np.stack(cols, axis=2)


def _mz_from_parts(y: np.ndarray, s_ar2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = y.shape[1]
    ssq = np.einsum("ij,ij->i", y[:, :-1], y[:, :-1]) / n**2
    mz_alpha = (y[:, -1] ** 2 / n - s_ar2) / (2.0 * ssq)
    msb = np.sqrt(ssq / s_ar2)
    return mz_alpha, msb


def _s_ar2_rows(y: np.ndarray, lag_p: int) -> np.ndarray:
    resp, x = _design(y, lag_p)
    xtx = np.einsum("rti,rtj->rij", x, x)
    xty = np.einsum("rti,rt->ri", x, resp)
    beta = np.linalg.solve(xtx, xty[..., None])[..., 0]
    resid = resp - np.einsum("rti,ri->rt", x, beta)
    sigma2 = np.einsum("rt,rt->r", resid, resid) / resp.shape[1]
    denom = 1.0 - beta[:, 1:].sum(axis=1)
    return sigma2 / denom**2


def mz_alpha_rows(y: np.ndarray, lag_p: int = 0) -> np.ndarray:
    """MZ_alpha for each row of ``y`` (shape ``(R, T)``)."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    mz_alpha, _ = _mz_from_parts(y, _s_ar2_rows(y, lag_p))
    return mz_alpha


def m_statistics(y: TimeSeries | np.ndarray, lag_p: int = 0) -> MStats:
    """M unit root statistics of a series.

    Parameters
    ----------
    y : TimeSeries or array_like
        Observations ``y_1..y_T`` (already demeaned or detrended if needed).
    lag_p : int
        Number of lagged differences in the autoregression used for the
        spectral density estimate at frequency zero.
    """
    series = y if isinstance(y, TimeSeries) else TimeSeries(y)
    values = series.values
    if lag_p < 0:
        raise ValueError("lag_p must be nonnegative")
    if values.shape[0] < lag_p + 10:
        raise InsufficientLength("M statistics need T >= lag_p + 10")
    resp, x = _design(values[None, :], lag_p)
    resp, x = resp[0], x[0]
    sv = np.linalg.svd(x, compute_uv=False)
    if sv.min() <= 1e-12 * sv.max():
        raise SingularDesign("autoregression design is singular")
    beta, *_ = np.linalg.lstsq(x, resp, rcond=None)
    resid = resp - x @ beta
    sigma2 = float(resid @ resid) / resp.shape[0]
    denom = 1.0 - float(beta[1:].sum())
    if abs(denom) < 1e-6:
        raise NearUnitDenominator("1 - sum of lag coefficients is numerically zero")
    s_ar2 = sigma2 / denom**2
    if not s_ar2 > 0:
        raise SingularDesign("autoregression fits exactly; spectral estimate is zero")
    mz_alpha, msb = _mz_from_parts(values[None, :], np.array([s_ar2]))
    mz_alpha, msb = float(mz_alpha[0]), float(msb[0])
    return MStats(mz_alpha=mz_alpha, msb=msb, mz_t=mz_alpha * msb, s_ar2=s_ar2, lag_p=lag_p)


def abb_m_test(y, cfg, lag_p: Optional[int] = None, **kwargs):
    """Adaptive block bootstrap test based on MZ_alpha (left tail)."""
    from heterour.bootstrap import abb_test
    from heterour.config import StatKind

    cfg = replace(cfg, stat=StatKind.MZ, lag_p=cfg.lag_p if lag_p is None else lag_p)
    return abb_test(y, cfg, **kwargs)
