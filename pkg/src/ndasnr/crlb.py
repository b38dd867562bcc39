"""Cramer-Rao bounds for amplitude, noise level, SNR, reliability, BER and MI.

All bounds are normalized by the squared parameter, depend only on
``gamma`` and ``n``, and come in two flavours: non-data-aided (``"nda"``) and
data-aided (``"da"``), the latter obtained by zeroing ``f(gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .specfun import DEFAULT_QUAD, QuadratureSpec, f_gamma, j_function, q_function

MODES = ("nda", "da")
BOUND_NAMES = ("mu", "sigma", "gamma", "lambda", "ber", "mi")


def _check_mode(mode):
    m = str(mode).lower()
    if m not in MODES:
        raise ValueError(f"mode must be 'nda' or 'da', got {mode!r}")
    return m


def _f_for(gamma, mode, quad):
    return f_gamma(gamma, quad) if mode == "nda" else 0.0


def _denominator(gamma, f):
    d = 2.0 - 2.0 * f - 8.0 * gamma * f
    assert d > 0, f"non-positive Fisher determinant factor {d} at gamma={gamma}"
    return d


@dataclass(frozen=True)
class FisherInverse:
    """Inverse Fisher matrix in ``(mu, sigma)`` coordinates."""

    mu_mu: float
    mu_sigma: float
    sigma_sigma: float
    mode: str

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.mu_mu, self.mu_sigma], [self.mu_sigma, self.sigma_sigma]])


@dataclass(frozen=True)
class CrlbBundle:
    gamma: float
    n: int
    mode: str
    ncrlb_mu: float
    ncrlb_sigma: float
    ncrlb_gamma: float
    ncrlb_lambda: float
    ncrlb_ber: float
    ncrlb_mi: float

    def as_dict(self):
        return {name: getattr(self, f"ncrlb_{name}") for name in BOUND_NAMES}


def fisher_inverse(gamma, sigma, n, mode="nda", quad: QuadratureSpec = DEFAULT_QUAD):
    if gamma <= 0 or sigma <= 0 or n < 1:
        raise ValueError("need gamma > 0, sigma > 0 and n >= 1")
    mode = _check_mode(mode)
    f = _f_for(gamma, mode, quad)
    scale = sigma * sigma / n / _denominator(gamma, f)
    # negative cross term: the sign consistent with the per-parameter bounds
    # and with direct quadrature of the expected Hessian
    return FisherInverse(
        scale * (2.0 - 8.0 * gamma * f),
        -scale * math.sqrt(8.0 * gamma) * f,
        scale * (1.0 - f),
        mode,
    )


def ncrlb_of_function(delta, grad_mu, grad_sigma, fisher_inv: FisherInverse):
    """Normalized bound ``g' J^-1 g / delta^2`` for a function of ``(mu, sigma)``."""
    if delta == 0:
        raise ValueError("the bounded quantity must be non-zero to normalize")
    g = np.array([grad_mu, grad_sigma], dtype=np.float64)
    return float(g @ fisher_inv.matrix @ g) / (delta * delta)


def mi_derivative(gamma, quad: QuadratureSpec = DEFAULT_QUAD):
    """Central difference of ``J(sqrt(8 gamma))`` with respect to ``gamma``."""
    fine = replace(quad, abs_tol=1e-12, rel_tol=1e-12)
    h = 1e-5 * max(gamma, 1e-3)
    lo = max(gamma - h, 0.0)
    hi = gamma + h
    return (j_function(math.sqrt(8.0 * hi), fine) - j_function(math.sqrt(8.0 * lo), fine)) / (hi - lo)


def ber_derivative(gamma):
    """Exact ``d Q(sqrt(2 gamma)) / d gamma``."""
    return -math.exp(-gamma) / (2.0 * math.sqrt(math.pi * gamma))


def ncrlb_ber_chain(gamma, n, mode="nda", quad: QuadratureSpec = DEFAULT_QUAD):
    """BER bound through the chain rule on the SNR bound."""
    p = float(q_function(math.sqrt(2.0 * gamma)))
    g_bound = ncrlb_bundle(gamma, n, mode, quad, with_mi=False).ncrlb_gamma
    return (ber_derivative(gamma) / p) ** 2 * gamma * gamma * g_bound


def ncrlb_bundle(gamma, n, mode="nda", quad: QuadratureSpec = DEFAULT_QUAD, with_mi=True):
    """All six normalized bounds at one SNR and block length.

    The MI bound has no closed form; it uses a finite-difference derivative of
    the J-function and is skipped (NaN) when ``with_mi`` is false.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    mode = _check_mode(mode)
    f = _f_for(gamma, mode, quad)
    d = _denominator(gamma, f)
    gn = gamma * n
    b_mu = (1.0 - 4.0 * gamma * f) / d / gn
    b_sigma = (1.0 - f) / d / n
    b_gamma = (4.0 + 4.0 * gamma - 4.0 * gamma * f) / d / gn
    b_lambda = (1.0 + 4.0 * gamma) / d / gn
    p = float(q_function(math.sqrt(2.0 * gamma)))
    b_ber = math.exp(-2.0 * gamma) / (math.pi * n * p * p) * (1.0 + gamma - gamma * f) / d
    b_mi = math.nan
    if with_mi:
        i_val = j_function(math.sqrt(8.0 * gamma), quad)
        b_mi = (mi_derivative(gamma, quad) / i_val) ** 2 * gamma * gamma * b_gamma
    return CrlbBundle(gamma, int(n), mode, b_mu, b_sigma, b_gamma, b_lambda, b_ber, b_mi)


def ncrlb_gamma(gamma, n, mode="nda", quad: QuadratureSpec = DEFAULT_QUAD):
    """Just the normalized SNR bound; what the Monte Carlo harness reports."""
    return ncrlb_bundle(gamma, n, mode, quad, with_mi=False).ncrlb_gamma


def _loglik_hessian_terms(y, mu, sigma):
    """Second derivatives of the single-observation log-density."""
    s2 = sigma * sigma
    t = mu * y / s2
    th = np.tanh(t)
    sech2 = 1.0 - th * th
    d_mm = -1.0 / s2 + y * y * sech2 / s2**2
    d_ms = 2.0 * mu / sigma**3 - 2.0 * y * th / sigma**3 - 2.0 * mu * y * y * sech2 / sigma**5
    d_ss = (
        1.0 / s2
        - 3.0 * mu * mu / s2**2
        - 3.0 * y * y / s2**2
        + 6.0 * mu * y * th / s2**2
        + 4.0 * mu * mu * y * y * sech2 / sigma**6
    )
    return d_mm, d_ms, d_ss


def numeric_fisher(gamma, sigma=1.0, n=1, tol=1e-12):
    """Fisher matrix by direct quadrature of the expected negative Hessian.

    Independent of the closed-form inverse; used to cross-check it.
    """
    mu = sigma * math.sqrt(2.0 * gamma)
    norm = 1.0 / math.sqrt(2.0 * math.pi * sigma * sigma)

    def pdf(y):
        return 0.5 * norm * (
            math.exp(-((y - mu) ** 2) / (2 * sigma * sigma))
            + math.exp(-((y + mu) ** 2) / (2 * sigma * sigma))
        )

    lim = mu + 14.0 * sigma
    out = []
    for k in range(3):
        val = integrate.quad(
            lambda y: -_loglik_hessian_terms(y, mu, sigma)[k] * pdf(y),
            -lim, lim, points=[-mu, 0.0, mu], epsabs=tol, epsrel=tol, limit=400,
        )[0]
        out.append(n * val)
    return np.array([[out[0], out[1]], [out[1], out[2]]])
