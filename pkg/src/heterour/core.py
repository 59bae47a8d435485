"""Series containers, the exact LAD autoregression and GLS detrending."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from heterour.exceptions import (
    AllLagsZero,
    InsufficientLength,
    NonFiniteValues,
    SingularDesign,
)

__all__ = [
    "MIN_LENGTH",
    "TimeSeries",
    "LadFit",
    "DetKind",
    "DeterministicSpec",
    "GlsFit",
    "sgn",
    "lad_fit",
    "lad_objective",
    "lad_slopes",
    "gls_adjust",
    "gls_projector",
]

MIN_LENGTH = 8
# lagged values smaller than this carry no information about the slope
_ZERO_LAG = 1e-30
# relative slack used to detect an exactly-half cumulative weight
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TimeSeries:
    """Ordered finite observations with optional time labels."""

    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues("series contains NaN or infinite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != values.shape[0]:
                raise ValueError("labels and values must have the same length")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.values.shape[0]

    def require_length(self, minimum: int = MIN_LENGTH) -> None:
        if len(self) < minimum:
            raise InsufficientLength(
                f"series has {len(self)} observations, at least {minimum} required"
            )


def _as_values(y: TimeSeries | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(y, TimeSeries):
        return y.values
    return TimeSeries(np.asarray(y, dtype=np.float64)).values


@dataclass(frozen=True)
class LadFit:
    """Through-origin LAD fit of ``y_t`` on ``y_{t-1}``.

    ``t_range`` holds the 1-based first and last index of the dependent
    variable used in the regression.
    """

    gamma_hat: float
    residuals: np.ndarray
    objective: float
    t_range: tuple[int, int]
    lagged: np.ndarray = field(repr=False)

    @property
    def lag_start(self) -> int:
        return self.t_range[0]

    @property
    def n_obs(self) -> int:
        return self.t_range[1] - self.t_range[0] + 1


def sgn(x: float) -> int:
    """Sign function with ``sgn(0) == 0``."""
    if not np.isfinite(x):
        raise NonFiniteValues("sgn requires a finite argument")
    return int(x > 0) - int(x < 0)


def _regression_arrays(y: np.ndarray, lag_start: int) -> tuple[np.ndarray, np.ndarray]:
    if lag_start == 1:
        lagged = np.concatenate(([0.0], y[:-1]))
        return y, lagged
    if lag_start == 2:
        return y[1:], y[:-1]
    raise ValueError("lag_start must be 1 or 2")


def lad_slopes(response: np.ndarray, lagged: np.ndarray) -> np.ndarray:
    """Row-wise exact LAD slope of ``response`` on ``lagged`` through the origin.

    The criterion ``sum |r_t - g * x_t|`` equals ``sum |x_t| * |r_t / x_t - g|``
    over nonzero ``x_t`` plus a constant, so the minimiser is the weighted
    median of the ratios ``r_t / x_t`` with weights ``|x_t|``. When the
    cumulative weight hits exactly one half the criterion is flat between two
    adjacent ratios and the midpoint is returned.

    Parameters
    ----------
    response, lagged : ndarray
        Arrays of shape ``(n,)`` or ``(R, n)``.

    Returns
    -------
    ndarray
        Slopes of shape ``()`` or ``(R,)``.
    """
    r = np.atleast_2d(np.asarray(response, dtype=np.float64))
    x = np.atleast_2d(np.asarray(lagged, dtype=np.float64))
    weights = np.abs(x)
    usable = weights >= _ZERO_LAG
    if not np.all(usable.any(axis=1)):
        raise AllLagsZero("every lagged value is zero; the slope is not identified")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(usable, r / np.where(usable, x, 1.0), np.inf)
    weights = np.where(usable, weights, 0.0)

    order = np.argsort(ratios, axis=1, kind="stable")
    ratios = np.take_along_axis(ratios, order, axis=1)
    cum = np.cumsum(np.take_along_axis(weights, order, axis=1), axis=1)
    total = cum[:, -1:]
    half = 0.5 * total
    slack = _TIE_RTOL * total

    rows = np.arange(r.shape[0])
    k = np.argmax(cum >= half - slack, axis=1)
    slope = ratios[rows, k]
    tie = np.abs(cum[rows, k] - half[:, 0]) <= slack[:, 0]
    nxt = np.minimum(k + 1, r.shape[1] - 1)
    upper = ratios[rows, nxt]
    tie &= np.isfinite(upper) & (k + 1 < r.shape[1])
    slope = np.where(tie, 0.5 * (slope + np.where(tie, upper, 0.0)), slope)
    if np.ndim(response) == 1:
        return slope[0]
    return slope


def lad_objective(y: TimeSeries | np.ndarray, gamma: float, lag_start: int = 1) -> float:
    """Sum of absolute residuals of the through-origin AR(1) at ``gamma``."""
    values = _as_values(y)
    response, lagged = _regression_arrays(values, lag_start)
    return float(np.sum(np.abs(response - gamma * lagged)))


def lad_fit(y: TimeSeries | np.ndarray, lag_start: int = 1) -> LadFit:
    """Exact LAD estimate of the autoregressive coefficient.

    With ``lag_start=1`` the regression runs over ``t = 1..T`` with the
    presample value ``y_0 = 0``; with ``lag_start=2`` it runs over
    ``t = 2..T`` (used for demeaned or detrended data).
    """
    values = _as_values(y)
    TimeSeries(values).require_length()
    response, lagged = _regression_arrays(values, lag_start)
    gamma = float(lad_slopes(response, lagged))
    resid = response - gamma * lagged
    resid.setflags(write=False)
    lagged = lagged.copy()
    lagged.setflags(write=False)
    return LadFit(
        gamma_hat=gamma,
        residuals=resid,
        objective=float(np.sum(np.abs(resid))),
        t_range=(lag_start, values.shape[0]),
        lagged=lagged,
    )


class DetKind(str, Enum):
    NONE = "none"
    MEAN = "mean"
    TREND = "trend"


_DEFAULT_C_BAR = {DetKind.NONE: 0.0, DetKind.MEAN: 7.0, DetKind.TREND: 13.5}


@dataclass(frozen=True)
class DeterministicSpec:
    """Deterministic component and its quasi-differencing constant."""

    kind: DetKind = DetKind.NONE
    c_bar: Optional[float] = None

    def __post_init__(self) -> None:
        kind = DetKind(self.kind)
        object.__setattr__(self, "kind", kind)
        c_bar = _DEFAULT_C_BAR[kind] if self.c_bar is None else float(self.c_bar)
        if kind is not DetKind.NONE and not c_bar > 0:
            raise ValueError("c_bar must be positive")
        object.__setattr__(self, "c_bar", c_bar)

    @property
    def lag_start(self) -> int:
        return 1 if self.kind is DetKind.NONE else 2

    def regressors(self, n: int) -> np.ndarray:
        t = np.arange(1, n + 1, dtype=np.float64)
        if self.kind is DetKind.MEAN:
            return t[:, None] ** 0
        if self.kind is DetKind.TREND:
            return np.column_stack((np.ones(n), t))
        return np.empty((n, 0))


@dataclass(frozen=True)
class GlsFit:
    mu_hat: np.ndarray
    adjusted: TimeSeries


def _quasi_difference(a: np.ndarray, rho: float) -> np.ndarray:
    out = a.copy()
    out[1:] = a[1:] - rho * a[:-1]
    return out


def gls_projector(n: int, spec: DeterministicSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(D, A)`` such that ``mu_hat = A @ x`` and the fit is ``D @ mu_hat``.

    ``A`` is the OLS map of the quasi-differenced data; it is linear in
    ``x`` so it can be applied to many series of length ``n`` at once.
    """
    d = spec.regressors(n)
    rho = 1.0 - spec.c_bar / n
    qd = _quasi_difference(d, rho)
    sv = np.linalg.svd(qd, compute_uv=False)
    if sv.size and sv.min() <= 1e-12 * sv.max():
        raise SingularDesign("quasi-differenced deterministic regressors are singular")
    # A = (qd'qd)^{-1} qd' Q  where Q applies the quasi-difference
    pinv = np.linalg.solve(qd.T @ qd, qd.T)
    a = pinv.copy()
    a[:, :-1] -= rho * pinv[:, 1:]
    return d, a


def gls_adjust(x: TimeSeries | np.ndarray, spec: DeterministicSpec) -> GlsFit:
    """Remove a constant or linear trend by quasi-differenced OLS.

    The first observation enters untransformed (``x_1`` on ``d_1``) and
    ``t >= 2`` uses ``x_t - (1 - c_bar/T) x_{t-1}``.
    """
    series = x if isinstance(x, TimeSeries) else TimeSeries(x)
    series.require_length()
    if spec.kind is DetKind.NONE:
        return GlsFit(mu_hat=np.empty(0), adjusted=series)
    values = series.values
    n = values.shape[0]
    d = spec.regressors(n)
    rho = 1.0 - spec.c_bar / n
    qd = _quasi_difference(d, rho)
    sv = np.linalg.svd(qd, compute_uv=False)
    if sv.min() <= 1e-12 * sv.max():
        raise SingularDesign("quasi-differenced deterministic regressors are singular")
    qx = _quasi_difference(values, rho)
    mu, *_ = np.linalg.lstsq(qd, qx, rcond=None)
    adjusted = values - d @ mu
    return GlsFit(mu_hat=mu, adjusted=TimeSeries(adjusted, series.labels))
