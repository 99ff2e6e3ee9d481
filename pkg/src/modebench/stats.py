"""Gamma-distribution machinery, bootstrap variance curves and moment summaries.

Gamma parameters follow the convention in which ``Gamma(a, b)`` has mean
``a * b`` and variance ``a * b^2`` (``a`` the shape, ``b`` the rate-like
scale), so moment matching reads ``a = E^2/V`` and ``b = V/E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateDistributionError(ValueError):
    """Moment matching hit a point mass (zero variance)."""


@dataclass(frozen=True)
class GammaParams:
    """Shape ``a`` and rate parameter ``b`` with mean ``a * b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("gamma parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a * self.b

    @property
    def variance(self) -> float:
        return self.a * self.b * self.b


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    skewness: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.variance < 0.0:
            raise ValueError("variance must be >= 0")


def gamma_from_moments(mean: float, variance: float) -> GammaParams:
    """Match a Gamma distribution to a mean and variance.

    Zero variance is a point mass, which has no Gamma parameters; it is
    signalled with ``DegenerateDistributionError`` instead.
    """
    if mean <= 0.0:
        raise ValueError("mean must be positive")
    if variance < 0.0:
        raise ValueError("variance must be >= 0")
    if variance == 0.0:
        raise DegenerateDistributionError("zero variance: point mass, not a Gamma")
    return GammaParams(mean * mean / variance, variance / mean)


def gamma_moment(params: GammaParams, k: int) -> float:
    """k-th raw moment ``b^k Gamma(a+k)/Gamma(a)``, via log-gamma."""
    if k < 0 or k != int(k):
        raise ValueError("k must be a nonnegative integer")
    if k == 0:
        return 1.0
    return math.exp(k * math.log(params.b) + math.lgamma(params.a + k) - math.lgamma(params.a))


def gamma_pdf(params: GammaParams, x) -> np.ndarray | float:
    """Density of ``Gamma(a, b)`` at ``x`` (zero for x < 0)."""
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(arr)
    pos = arr > 0.0
    a, b = params.a, params.b
    log_norm = math.lgamma(a) + a * math.log(b)
    out[pos] = np.exp((a - 1.0) * np.log(arr[pos]) - arr[pos] / b - log_norm)
    if a == 1.0:
        out[arr == 0.0] = 1.0 / b
    return float(out[0]) if scalar else out


def gamma_cdf(params: GammaParams, x) -> np.ndarray | float:
    """CDF of ``Gamma(a, b)`` (regularized lower incomplete gamma)."""
    from scipy.special import gammainc

    x = np.asarray(x, dtype=float)
    return gammainc(params.a, np.clip(x, 0.0, None) / params.b)


def moment_summary(values) -> MomentSummary:
    """Mean, unbiased variance and standardized sample skewness.

    An all-equal sample has undefined skewness; it is reported as 0 by
    convention.  A single-element sample likewise gets variance 0.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 1:
        raise ValueError("values must be nonempty")
    mean = float(v.mean())
    if v.size == 1:
        return MomentSummary(mean, 0.0, 0.0, 1)
    var = float(v.var(ddof=1))
    m2 = float(v.var())  # biased second moment, for the standardized skew
    if m2 == 0.0:
        return MomentSummary(mean, var, 0.0, int(v.size))
    m3 = float(np.mean((v - mean) ** 3))
    return MomentSummary(mean, var, m3 / m2 ** 1.5, int(v.size))


def ks_distance(values, params: GammaParams) -> float:
    """Kolmogorov-Smirnov distance between a sample and ``Gamma(a, b)``."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    cdf = np.asarray(gamma_cdf(params, v))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def bootstrap_variance_curve(
    samples: np.ndarray,
    m_grid,
    rng: np.random.Generator,
    resamples: int = 50,
    *,
    pool_noise_correction: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Bootstrap the circuit-to-circuit variance versus noise averages M.

    ``samples`` has shape ``(n_circuits, m_pool)``: per-realization fidelity
    estimates for each circuit.  For each ``M`` in ``m_grid``, ``resamples``
    bootstrap subsets of size M are drawn (with replacement, per circuit, from
    that circuit's pool), each subset is averaged per circuit, and the
    variance of those averages across circuits is recorded.

    The plain construction is upward-biased once M approaches the pool size:
    the pool's own per-circuit sampling noise (~ mean within-circuit variance
    / m_pool) rides on top of the resampling noise, reaching a factor ~2 at
    M = m_pool.  ``pool_noise_correction`` subtracts that constant from the
    whole curve, making it an unbiased estimate of the variance a fresh
    M-average experiment would see at every grid point.

    Returns ``(curve, traces)`` where ``curve`` is the mean over bootstraps
    (one value per grid point) and ``traces`` has shape
    ``(resamples, len(m_grid))``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must have shape (n_circuits, m_pool)")
    n_circ, m_pool = samples.shape
    m_grid = [int(m) for m in m_grid]
    if any(m < 1 for m in m_grid):
        raise ValueError("every M in the grid must be >= 1")
    if max(m_grid) > m_pool:
        raise ValueError(f"requested M={max(m_grid)} exceeds the pool of {m_pool} realizations")
    traces = np.empty((resamples, len(m_grid)))
    for gi, m in enumerate(m_grid):
        idx = rng.integers(0, m_pool, size=(resamples, n_circ, m))
        means = np.take_along_axis(samples[None, :, :], idx, axis=2).mean(axis=2)
        traces[:, gi] = means.var(axis=1, ddof=1)
    if pool_noise_correction:
        traces -= float(samples.var(axis=1).mean()) / m_pool
    return traces.mean(axis=0), traces
