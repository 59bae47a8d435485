"""Adaptive block bootstrap (ABB) for LAD unit root tests.

The bootstrap errors are moving blocks drawn from the sign-augmented pool
``{e_1, .., e_{n-b}, -e_1, .., -e_{n-b}}`` of standardized residuals. They
are rescaled by the (estimated) volatility path and cumulated into exact
unit-root pseudo series, on which the statistics are recomputed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os
from typing import Optional, Sequence

import numpy as np

from heterour.baselines import mz_alpha_rows
from heterour.config import TestConfig, TestResult
from heterour.core import DetKind, TimeSeries, gls_adjust, gls_projector, lad_fit
from heterour.exceptions import (
    IndexOutOfPool,
    InsufficientLength,
    InvalidSubsampleLength,
    LengthMismatch,
)
from heterour.teststats import compute_stats, statistics_rows
from heterour.volatility import cv_bandwidth, estimate_volatility

__all__ = [
    "AbbPlan",
    "derive_seed",
    "thread_count",
    "standardize_residuals",
    "draw_block_indices",
    "build_pseudo_errors",
    "pseudo_error_rows",
    "build_pseudo_series",
    "bootstrap_pvalue",
    "mbb_variance",
    "hhj_criterion",
    "hhj_block_length",
    "hhj_defaults",
    "abb_test",
]

THREADS_ENV = "HETEROUR_THREADS"
_CHUNK = 128


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed mixed from nonnegative integer keys."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def thread_count(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class AbbPlan:
    """Block length and pool size for one bootstrap design."""

    block_len_b: int
    n_resid: int

    def __post_init__(self) -> None:
        if not 1 <= self.block_len_b < self.n_resid:
            raise ValueError("block length must satisfy 1 <= b < n_resid")

    @property
    def k_blocks(self) -> int:
        return (self.n_resid - 1) // self.block_len_b

    @property
    def index_set_size(self) -> int:
        return 2 * (self.n_resid - self.block_len_b)

    def index_set(self) -> np.ndarray:
        n, b = self.n_resid, self.block_len_b
        return np.concatenate((np.arange(-n, -b), np.arange(1, n - b + 1)))


def standardize_residuals(resid: Sequence[float], sigma: Sequence[float]) -> np.ndarray:
    r = np.asarray(resid, dtype=np.float64)
    s = np.asarray(sigma, dtype=np.float64)
    if r.shape != s.shape:
        raise LengthMismatch("residuals and volatility path differ in length")
    if np.any(s <= 0):
        raise ValueError("volatility path must be positive")
    return r / s


def _indices_from_uniform(u: np.ndarray, plan: AbbPlan) -> np.ndarray:
    n, b = plan.n_resid, plan.block_len_b
    pos = n - b
    return np.where(u < pos, u + 1, u - pos - n)


def draw_block_indices(plan: AbbPlan, rng_seed: int) -> np.ndarray:
    """Draw the ``k + 1`` block start indices uniformly from the index set."""
    rng = np.random.default_rng(rng_seed)
    u = rng.integers(0, plan.index_set_size, size=plan.k_blocks + 1)
    return _indices_from_uniform(u, plan)


def _source_positions(indices: np.ndarray, plan: AbbPlan) -> tuple[np.ndarray, np.ndarray]:
    # 0-based pool position and sign for every t = 1..n
    n, b = plan.n_resid, plan.block_len_b
    t = np.arange(1, n + 1)
    m = (t - 1) // b
    s = t - m * b - 1
    start = indices[..., m]
    negative = start < 0
    pos = np.where(negative, start + s + n + 1, start + s) - 1
    if pos.size and (pos.min() < 0 or pos.max() > n - 2):
        raise IndexOutOfPool("block index maps outside the residual pool")
    return pos, np.where(negative, -1.0, 1.0)


def build_pseudo_errors(
    std_resid: Sequence[float], indices: Sequence[int], plan: AbbPlan
) -> np.ndarray:
    """Paste the drawn blocks into a bootstrap error series of length n.

    A block starting at ``i > 0`` copies ``e_i, e_{i+1}, ..``; a block
    starting at ``i < 0`` copies ``-e_{i+n+1}, -e_{i+n+2}, ..``. The last
    block is truncated at ``n``.
    """
    e = np.asarray(std_resid, dtype=np.float64)
    idx = np.asarray(indices, dtype=np.int64)
    if e.shape[0] != plan.n_resid:
        raise LengthMismatch("residual pool does not match the plan")
    if idx.shape != (plan.k_blocks + 1,):
        raise LengthMismatch("expected k_blocks + 1 indices")
    pos, sign = _source_positions(idx, plan)
    return sign * e[pos]


def pseudo_error_rows(std_resid: np.ndarray, indices: np.ndarray, plan: AbbPlan) -> np.ndarray:
    """Row-wise :func:`build_pseudo_errors` for an ``(R, k+1)`` index matrix."""
    pos, sign = _source_positions(np.asarray(indices), plan)
    return sign * np.asarray(std_resid, dtype=np.float64)[pos]


def build_pseudo_series(pseudo_err: Sequence[float], sigma: Sequence[float]) -> TimeSeries:
    """Unit-root series ``y_t = y_{t-1} + sigma_t e_t`` started at ``y_0 = 0``."""
    e = np.asarray(pseudo_err, dtype=np.float64)
    s = np.asarray(sigma, dtype=np.float64)
    if e.shape != s.shape:
        raise LengthMismatch("errors and volatility path differ in length")
    return TimeSeries(np.cumsum(s * e))


def bootstrap_pvalue(draws: np.ndarray, stat: float) -> float:
    """Left-tail bootstrap p-value ``B^-1 sum I(draw < stat)``."""
    draws = np.asarray(draws)
    return int(np.count_nonzero(draws < stat)) / draws.shape[0]


def mbb_variance(z: Sequence[float], b: int) -> float:
    """Moving-block estimate of ``var(n^-1/2 sum z_t)``.

    ``(1 / (b (n-b+1))) sum_j (S_j - b zbar)^2`` over all length-``b`` block
    sums ``S_j``.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not 1 <= b <= n:
        raise ValueError("block length must satisfy 1 <= b <= n")
    c = np.concatenate(([0.0], np.cumsum(z)))
    sums = c[b:] - c[:-b]
    dev = sums - b * z.mean()
    return float(dev @ dev) / (b * (n - b + 1))


def _subsample_psi(z: np.ndarray, m: int, b: int) -> np.ndarray:
    """``mbb_variance`` of every length-``m`` run ``z[i:i+m]``, i < n - m."""
    n = z.shape[0]
    runs = n - m
    c = np.concatenate(([0.0], np.cumsum(z)))
    sums = c[b:] - c[:-b]  # S_j, j = 0..n-b
    cs = np.concatenate(([0.0], np.cumsum(sums)))
    cs2 = np.concatenate(([0.0], np.cumsum(sums * sums)))
    i = np.arange(runs)
    nb = m - b + 1
    s1 = cs[i + nb] - cs[i]
    s2 = cs2[i + nb] - cs2[i]
    mean = (c[i + m] - c[i]) / m
    ss = s2 - 2.0 * b * mean * s1 + nb * (b * mean) ** 2
    return np.maximum(ss, 0.0) / (b * nb)


def hhj_criterion(z: Sequence[float], m: int, pilot_b: int) -> np.ndarray:
    """Subsample criterion for candidate blocks ``b = 1..ceil(m/3)``."""
    z = np.asarray(z, dtype=np.float64)
    target = mbb_variance(z, pilot_b)
    cands = range(1, math.ceil(m / 3) + 1)
    return np.array([np.sum((_subsample_psi(z, m, b) - target) ** 2) for b in cands])


def hhj_defaults(n: int) -> tuple[int, int]:
    """Default subsample length and pilot block for ``n`` residuals."""
    m = min(max(2 * math.ceil(math.sqrt(n)), 16), n // 4)
    m = max(m, 2)
    pilot = min(math.ceil(n ** (1.0 / 3.0)), m - 1)
    return m, max(pilot, 1)


def hhj_block_length(
    std_resid: Sequence[float],
    m: Optional[int] = None,
    pilot_b: Optional[int] = None,
    max_iter: int = 3,
) -> int:
    """Data-driven block length by subsample matching of the variance estimate.

    The block ``b_m`` minimising the squared distance between run-wise
    estimates and the full-sample pilot estimate is scaled up by
    ``(n/m)^(1/3)``; the pilot is then replaced by the result and the step
    repeated up to ``max_iter`` times or until it stops changing.
    """
    z = np.asarray(std_resid, dtype=np.float64)
    n = z.shape[0]
    dm, dp = hhj_defaults(n)
    m = dm if m is None else int(m)
    pilot = dp if pilot_b is None else int(pilot_b)
    if not 2 <= m < n:
        raise InvalidSubsampleLength(f"subsample length {m} must satisfy 2 <= m < n = {n}")
    if not 1 <= pilot < m:
        raise InvalidSubsampleLength("pilot block must satisfy 1 <= pilot < m")
    upper = max(n // 3, 1)
    b_opt = pilot
    for _ in range(max(max_iter, 1)):
        crit = hhj_criterion(z, m, pilot)
        b_m = int(np.argmin(crit)) + 1
        b_opt = int(math.floor((n / m) ** (1.0 / 3.0) * b_m + 0.5))
        b_opt = min(max(b_opt, 1), upper)
        if b_opt == pilot:
            break
        pilot = min(b_opt, n)
    return b_opt


def _regression_rows(y: np.ndarray, lag_start: int) -> tuple[np.ndarray, np.ndarray]:
    if lag_start == 1:
        lagged = np.concatenate((np.zeros((y.shape[0], 1)), y[:, :-1]), axis=1)
        return y, lagged
    return y[:, 1:], y[:, :-1]


class _Replicator:
    """Computes bootstrap statistics for a range of replicate numbers."""

    def __init__(self, std, sigma, plan, cfg, lag_start, n_series, names):
        self.std = std
        self.sigma = sigma
        self.plan = plan
        self.cfg = cfg
        self.lag_start = lag_start
        self.names = names
        det = cfg.deterministic
        self.proj = None if det.kind is DetKind.NONE else gls_projector(n_series, det)

    def __call__(self, js: range) -> dict[str, np.ndarray]:
        plan = self.plan
        idx = np.stack([draw_block_indices(plan, derive_seed(self.cfg.seed, j)) for j in js])
        eps = pseudo_error_rows(self.std, idx, plan)
        ystar = np.cumsum(eps * self.sigma, axis=1)
        if self.lag_start == 2:
            # the pseudo series carries the unused first observation as y*_1 = 0
            ystar = np.concatenate((np.zeros((ystar.shape[0], 1)), ystar), axis=1)
        if self.proj is not None:
            d, a = self.proj
            ystar = ystar - (ystar @ a.T) @ d.T
        out = {}
        if "lt" in self.names or "tt" in self.names:
            response, lagged = _regression_rows(ystar, self.lag_start)
            l_stat, t_stat, *_ = statistics_rows(response, lagged, self.sigma)
            out["lt"], out["tt"] = l_stat, t_stat
        if "mz" in self.names:
            out["mz"] = mz_alpha_rows(ystar, self.cfg.lag_p)
        return {k: out[k] for k in self.names}


def _resolve_sigma(sigma, n_series: int, n_resid: int) -> np.ndarray:
    s = np.asarray(sigma, dtype=np.float64).ravel()
    if s.shape[0] == n_series:
        s = s[n_series - n_resid :]
    if s.shape[0] != n_resid:
        raise LengthMismatch("volatility path length matches neither series nor residuals")
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ValueError("volatility path must be finite and positive")
    return s


def abb_test(
    y: TimeSeries | np.ndarray,
    cfg: Optional[TestConfig] = None,
    sigma: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
) -> TestResult:
    """Run the adaptive block bootstrap unit root test.

    Parameters
    ----------
    y : TimeSeries or array_like
        Observed series.
    cfg : TestConfig, optional
        Deterministic component, statistics, bootstrap size and tuning.
    sigma : array_like, optional
        Known volatility path (infeasible variant). Either one value per
        observation or one per regression residual. When given, no
        bandwidth is selected.
    threads : int, optional
        Worker threads; defaults to ``HETEROUR_THREADS`` or the CPU count.
        Results do not depend on it.
    """
    cfg = TestConfig() if cfg is None else cfg
    series = y if isinstance(y, TimeSeries) else TimeSeries(y)
    series.require_length()
    adjusted = gls_adjust(series, cfg.deterministic).adjusted
    lag_start = cfg.deterministic.lag_start
    n_series = len(adjusted)
    if n_series - (lag_start - 1) < 8:
        raise InsufficientLength("adjusted series is too short")

    fit = lad_fit(adjusted, lag_start)
    abs_resid = np.abs(fit.residuals)
    n_resid = abs_resid.shape[0]
    h_used: Optional[float] = None
    if sigma is not None:
        sig = _resolve_sigma(sigma, n_series, n_resid)
    elif cfg.volatility == "constant":
        sig = np.full(n_resid, abs_resid.mean())
        if not sig[0] > 0:
            raise ValueError("all residuals are zero")
    else:
        h_used = cv_bandwidth(abs_resid, cfg.kernel) if cfg.bandwidth == "auto" else cfg.bandwidth
        sig = np.asarray(estimate_volatility(abs_resid, h_used, cfg.kernel).sigma_hat)
    std = standardize_residuals(fit.residuals, sig)

    if cfg.block == "auto":
        b = hhj_block_length(std)
    else:
        b = cfg.block
    b = min(max(int(b), 1), n_resid - 1)
    plan = AbbPlan(b, n_resid)

    names = cfg.stat.names
    observed: dict[str, float] = {}
    if "lt" in names or "tt" in names:
        pair = compute_stats(adjusted, fit, sig)
        observed["lt"], observed["tt"] = pair.l_stat, pair.t_stat
    if "mz" in names:
        observed["mz"] = float(mz_alpha_rows(adjusted.values[None, :], cfg.lag_p)[0])
    observed = {k: observed[k] for k in names}

    worker = _Replicator(std, sig, plan, cfg, lag_start, n_series, names)
    chunks = [range(s, min(s + _CHUNK, cfg.B)) for s in range(0, cfg.B, _CHUNK)]
    n_threads = min(thread_count(threads), len(chunks))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            parts = list(pool.map(worker, chunks))
    else:
        parts = [worker(c) for c in chunks]
    draws = {k: np.concatenate([p[k] for p in parts]) for k in names}
    pvals = {k: bootstrap_pvalue(draws[k], observed[k]) for k in names}
    return TestResult(
        statistic=observed,
        p_value=pvals,
        draws=draws,
        b_used=b,
        h_used=h_used,
        config=cfg,
        sigma_path=sig,
        first_index=lag_start,
    )
