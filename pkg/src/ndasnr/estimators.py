"""Non-data-aided SNR estimators and the quantities derived from an SNR estimate.

Five estimators are provided, all keyed by short method names:

``cm``
    Conventional method, ``A^2 / (2 (M2 - A^2))``.
``ml``
    Iterative maximum likelihood (the EM fixed point), started from ``A``.
``mm``
    Method of moments on ``M2`` and ``M4``.
``p2``
    Second-order polynomial inverse of ``A^2 / M2``.
``am``
    Closed-form inverse of the fitted ``h`` approximation.

The batch entry point :func:`estimate_rows` works on many trials at once and
is what the Monte Carlo harness calls; :func:`estimate_snr` wraps it for a
single block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._backend import kernels
from .model import SampleBlock
from .moments import MomentSummary, batch_moments, sample_moments
from .specfun import (
    DEFAULT_QUAD,
    GAMMA_MAX,
    PAPER_H,
    HConstants,
    QuadratureSpec,
    h_inverse_am,
    h_inverse_p2,
    j_function,
    q_function,
)

METHODS = ("cm", "ml", "mm", "p2", "am")
ML_GUARD = 1e-9


class EstimationError(ValueError):
    """An estimator could not produce a value for its input."""

    def __init__(self, method, message):
        super().__init__(f"{method}: {message}")
        self.method = method


@dataclass(frozen=True)
class EstimatorOptions:
    max_iter: int = 10
    ml_tol: float = 1e-9
    h_constants: HConstants = PAPER_H


@dataclass(frozen=True)
class DerivedParams:
    mu_hat: float
    sigma_hat: float
    lambda_hat: float
    q_hat: float
    q_flag: bool = False


@dataclass(frozen=True)
class SnrEstimate:
    method: str
    gamma_hat: float
    clamped: bool = False
    iterations_used: int = 0
    derived: DerivedParams | None = None

    @property
    def gamma_hat_db(self) -> float:
        return 10.0 * math.log10(self.gamma_hat) if self.gamma_hat > 0 else -math.inf


@dataclass(frozen=True)
class MlTrajectory:
    mu_hats: list = field(default_factory=list)
    converged: bool = False
    final_delta: float = math.nan

    @property
    def iterations(self) -> int:
        return len(self.mu_hats) - 1


@dataclass(frozen=True)
class SymbolMetrics:
    llr: np.ndarray
    inst_ber: np.ndarray
    inst_mi: np.ndarray


@dataclass(frozen=True)
class ChannelMetrics:
    avg_ber: float
    avg_mi: float


def check_method(method: str) -> str:
    m = str(method).lower()
    if m not in METHODS:
        raise ValueError(f"unknown estimator {method!r}; choose from {', '.join(METHODS)}")
    return m


def _cap(gamma, clamped):
    over = ~(gamma <= GAMMA_MAX)
    return np.where(over, GAMMA_MAX, gamma), clamped | over


def _cm(m2, a):
    a2 = a * a
    dead = m2 <= 0.0
    sat = ~dead & (a2 >= m2 * (1.0 - 1e-12))
    ok = ~(dead | sat)
    g = np.zeros_like(m2)
    g[ok] = a2[ok] / (2.0 * (m2[ok] - a2[ok]))
    g[sat] = GAMMA_MAX
    return _cap(g, dead | sat)


def _mm(m2, m4):
    dead = m2 <= 0.0
    rad = 6.0 * m2 * m2 - 2.0 * m4
    neg = ~dead & (rad < 0.0)
    s = np.sqrt(np.where(neg | dead, 0.0, rad))
    den = 4.0 * m2 - 2.0 * s
    sat = ~(dead | neg) & (den <= 0.0)
    ok = ~(dead | neg | sat)
    g = np.zeros_like(m2)
    g[ok] = s[ok] / den[ok]
    g[sat] = GAMMA_MAX
    return _cap(g, dead | neg | sat)


def _ml_gamma(m2, mu):
    dead = m2 <= 0.0
    v = m2 - mu * mu
    sat = ~dead & (v <= 0.0)
    ok = ~(dead | sat)
    g = np.zeros_like(m2)
    g[ok] = mu[ok] * mu[ok] / (2.0 * v[ok])
    g[sat] = GAMMA_MAX
    return _cap(g, dead | sat)


def estimate_rows(y, method, options=EstimatorOptions(), moments=None):
    """Estimate the SNR of every row of ``y``.

    Parameters
    ----------
    y : ndarray, shape (rows, n)
        One trial per row.  Only ``ml`` reads the samples; the others need
        just the moments.
    method : str
        One of :data:`METHODS`.
    moments : tuple of ndarray, optional
        Precomputed ``(m1, m2, m4, a)`` for the rows.

    Returns
    -------
    gamma_hat, clamped, iterations : ndarray
    """
    method = check_method(method)
    if moments is None:
        moments = batch_moments(y)
    _, m2, m4, a = (np.asarray(v, dtype=np.float64) for v in moments)
    iters = np.zeros(m2.shape, dtype=np.int64)
    if method == "cm":
        g, c = _cm(m2, a)
    elif method == "mm":
        g, c = _mm(m2, m4)
    elif method == "ml":
        mu, iters = kernels.batch_ml(
            np.ascontiguousarray(y, dtype=np.float64), m2, a,
            int(options.max_iter), float(options.ml_tol),
        )
        g, c = _ml_gamma(m2, mu)
    else:
        if np.any(m2 <= 0.0):
            raise EstimationError(method, "A^2/M2 is undefined for an all-zero block")
        ratio = a * a / m2
        if method == "am":
            g, c = h_inverse_am(ratio, options.h_constants)
        else:
            try:
                g = h_inverse_p2(ratio)
            except ZeroDivisionError as exc:
                raise EstimationError(method, str(exc)) from exc
            c = np.zeros(ratio.shape, dtype=bool)
    return np.asarray(g, dtype=np.float64), np.asarray(c, dtype=bool), iters


def estimate_snr(block: SampleBlock, method, options=EstimatorOptions()) -> SnrEstimate:
    """Estimate the linear SNR of one block, with derived amplitude/noise/prior."""
    if block.n < 1:
        raise ValueError("empty block")
    mom = sample_moments(block)
    arrays = tuple(np.array([v]) for v in (mom.m1, mom.m2, mom.m4, mom.abs_moment))
    g, c, it = estimate_rows(block.samples.reshape(1, -1), method, options, arrays)
    gamma_hat = float(g[0])
    derived = derive_params(gamma_hat, mom.m1, mom.m2) if mom.m2 > 0 else None
    return SnrEstimate(check_method(method), gamma_hat, bool(c[0]), int(it[0]), derived)


def ml_trajectory(block: SampleBlock, max_iter=10, tol=1e-9, mu0=None) -> MlTrajectory:
    """Run the amplitude fixed-point iteration and keep every iterate.

    Each step is ``mu <- mean(y * tanh(mu * y / (M2 - mu^2)))`` with ``mu``
    held below ``(1 - 1e-9) sqrt(M2)``.
    """
    y = block.samples
    m2 = sample_moments(block).m2
    if m2 <= 0:
        return MlTrajectory([0.0], True, 0.0)
    cap = (1.0 - ML_GUARD) * math.sqrt(m2)
    mu = float(np.mean(np.abs(y))) if mu0 is None else float(mu0)
    mu = min(mu, cap)
    mus = [mu]
    delta = math.nan
    converged = False
    for _ in range(max_iter):
        t = mu / (m2 - mu * mu)
        new = min(float(np.mean(y * np.tanh(t * y))), cap)
        delta = abs(new - mu)
        mu = new
        mus.append(mu)
        if delta < tol * math.sqrt(m2):
            converged = True
            break
    return MlTrajectory(mus, converged, delta)


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def log_likelihood(block: SampleBlock, mu: float, sigma: float):
    """Joint log-density of the block and its partial derivatives.

    Returns ``(value, d/dmu, d/dsigma)``.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = block.samples
    n = y.size
    s2 = sigma * sigma
    t = mu * y / s2
    value = (
        -0.5 * n * math.log(2.0 * math.pi * s2)
        - n * mu * mu / (2.0 * s2)
        - float(np.sum(y * y)) / (2.0 * s2)
        + float(np.sum(_log_cosh(t)))
    )
    corr = float(np.mean(y * np.tanh(t)))
    m2 = float(np.mean(y * y))
    grad_mu = n / s2 * (corr - mu)
    grad_sigma = n / sigma**3 * (mu * mu - s2 + m2 - 2.0 * mu * corr)
    return value, grad_mu, grad_sigma


def derive_params(gamma_hat: float, m1: float, m2: float) -> DerivedParams:
    """Amplitude, noise level, reliability and prior implied by an SNR estimate.

    ``q_flag`` is set when the prior estimate was clamped into [0, 1] or is
    undefined (``gamma_hat == 0``, reported as 0.5).
    """
    if m2 <= 0:
        raise ValueError(f"m2 must be positive, got {m2}")
    if gamma_hat < 0:
        raise ValueError(f"gamma_hat must be non-negative, got {gamma_hat}")
    g = float(gamma_hat)
    mu = math.sqrt(2.0 * g * m2 / (1.0 + 2.0 * g))
    sigma = math.sqrt(m2 / (1.0 + 2.0 * g))
    lam = math.sqrt((8.0 * g + 16.0 * g * g) / m2)
    if g == 0.0:
        return DerivedParams(mu, sigma, lam, 0.5, True)
    q = 0.5 * m1 * math.sqrt((1.0 + 2.0 * g) / (2.0 * g * m2)) + 0.5
    q_clamped = min(1.0, max(0.0, q))
    return DerivedParams(mu, sigma, lam, q_clamped, q_clamped != q)


def symbol_metrics(lambda_hat, y) -> SymbolMetrics:
    """Per-observable LLR, error probability and mutual information.

    Evaluated through ``expit``/``logaddexp`` so ``|lambda_hat * y|`` up to
    1e4 and beyond neither overflows nor loses the saturation limits.
    """
    llr = np.asarray(lambda_hat, dtype=np.float64) * np.asarray(y, dtype=np.float64)
    inst_ber = expit(-np.abs(llr))
    u = -llr
    inst_mi = 1.0 - 2.0 * np.logaddexp(0.0, u) / math.log(2.0) * expit(-u)
    return SymbolMetrics(llr, inst_ber, inst_mi)


def channel_metrics(gamma: float, quad: QuadratureSpec = DEFAULT_QUAD) -> ChannelMetrics:
    """Average BER ``Q(sqrt(2 gamma))`` and mutual information ``J(sqrt(8 gamma))``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    return ChannelMetrics(
        float(q_function(math.sqrt(2.0 * gamma))), j_function(math.sqrt(8.0 * gamma), quad)
    )


__all__ = [
    "METHODS",
    "ChannelMetrics",
    "DerivedParams",
    "EstimationError",
    "EstimatorOptions",
    "MlTrajectory",
    "MomentSummary",
    "SnrEstimate",
    "SymbolMetrics",
    "channel_metrics",
    "derive_params",
    "estimate_rows",
    "estimate_snr",
    "log_likelihood",
    "ml_trajectory",
    "symbol_metrics",
]
