"""Special functions behind the bounds and estimators.

Gaussian tail ``Q``, the J-function (mutual information of a consistent
Gaussian LLR), the Fisher-information integral ``f(gamma)``, and the
absolute-moment ratio ``h(gamma) = A**2 / M2`` with three inverses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf, erfc

TWO_OVER_PI = 2.0 / math.pi
GAMMA_MAX = 1e6
"""Cap returned for SNR estimates whose exact value would be infinite."""

P2_COEFFS = (-34.0516, 65.9548, -23.6184)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation radius for the infinite-domain integrals.

    ``f_radius`` bounds ``|beta|`` for ``f(gamma)``; ``j_radius`` is the number
    of LLR standard deviations kept on each side of the mean for ``J``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    f_radius: float = 12.0
    j_radius: float = 10.0
    limit: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if not (0 < self.f_radius < math.inf and 0 < self.j_radius < math.inf):
            raise ValueError("truncation radii must be finite and positive")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class HConstants:
    """Fit constants of the closed-form ``h`` approximation."""

    h1: float = 0.6153
    h2: float = 1.5296
    h3: float = -0.6575

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0 and self.h3 < 0):
            raise ValueError(f"need h1 > 0, h2 > 0, h3 < 0; got {self}")

    def as_tuple(self):
        return (self.h1, self.h2, self.h3)


PAPER_H = HConstants()


def _adaptive(fn, a, b, quad: QuadratureSpec, points=None):
    with np.errstate(all="ignore"):
        val, err, info = integrate.quad(
            fn, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol,
            limit=quad.limit, points=points, full_output=1,
        )[:3]
    tol = max(quad.abs_tol, quad.rel_tol * abs(val))
    if not math.isfinite(val) or err > 10 * tol:
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: value={val}, error={err}")
    return val


def q_function(x):
    """Gaussian tail probability ``P(W > x)`` for standard normal ``W``."""
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def _f_integrand(beta, s):
    # exp(-beta^2/2 - gamma) / cosh(beta s) rewritten so nothing overflows
    a = 0.5 * (beta + s) ** 2
    b = 0.5 * (beta - s) ** 2
    hi = max(a, b)
    return 2.0 * beta * beta * math.exp(-hi) / (1.0 + math.exp(-abs(a - b)))


def f_gamma(gamma: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """NDA Fisher-information integral ``f(gamma)``, decreasing from 1 at ``gamma=0``."""
    gamma = float(gamma)
    if gamma < 0 or not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite and >= 0, got {gamma}")
    s = math.sqrt(2.0 * gamma)
    r = quad.f_radius
    # integrand is even in beta
    half = _adaptive(lambda b: _f_integrand(b, s), 0.0, r, quad)
    return 2.0 * half / math.sqrt(2.0 * math.pi)


def j_function(alpha: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Mutual information of an LLR ~ N(alpha**2/2, alpha**2) with a binary symbol."""
    alpha = float(alpha)
    if alpha < 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
    if alpha == 0.0:
        return 0.0
    mean = 0.5 * alpha * alpha
    norm = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(t):
        beta = mean + alpha * t
        # log2(1 + e^-beta), stable for both signs
        return np.logaddexp(0.0, -beta) / math.log(2.0) * norm * math.exp(-0.5 * t * t)

    r = quad.j_radius
    expect = _adaptive(integrand, -r, r, quad, points=[0.0])
    return min(1.0, max(0.0, 1.0 - expect))


def h_exact(gamma):
    """``A**2 / M2`` as an exact function of SNR; equals ``2/pi`` at 0 and tends to 1."""
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gamma must be non-negative")
    # algebraically identical to the Q-function form, without the 1/sqrt(gamma) pole
    root = np.sqrt(g) * math.sqrt(2.0) * erf(np.sqrt(g)) + math.sqrt(TWO_OVER_PI) * np.exp(-g)
    out = root * root / (1.0 + 2.0 * g)
    return out if out.ndim else float(out)


def h_exact_q(gamma: float) -> float:
    """Direct evaluation through ``Q(sqrt(2 gamma))``; needs ``gamma > 0``."""
    g = float(gamma)
    inner = 1.0 + math.exp(-g) / math.sqrt(math.pi * g) - 2.0 * float(q_function(math.sqrt(2.0 * g)))
    return 2.0 * g / (2.0 * g + 1.0) * inner * inner


def h_approx(gamma, consts: HConstants = PAPER_H):
    """Closed-form approximation ``1 - (1 - 2/pi) (h1 gamma**h2 + 1)**h3``."""
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gamma must be non-negative")
    out = 1.0 - (1.0 - TWO_OVER_PI) * (consts.h1 * g**consts.h2 + 1.0) ** consts.h3
    return out if out.ndim else float(out)


def h_forward(gamma, method="exact", consts: HConstants = PAPER_H):
    if method == "exact":
        return h_exact(gamma)
    if method == "approx":
        return h_approx(gamma, consts)
    raise ValueError(f"unknown h method {method!r}")


def h_inverse_am(ratio, consts: HConstants = PAPER_H):
    """Closed-form inverse of :func:`h_approx`.

    Returns ``(gamma_hat, clamped)``: ratios at or below ``2/pi`` map to 0 and
    ratios at or above 1 (or inverses beyond ``GAMMA_MAX``) map to ``GAMMA_MAX``.
    """
    r = np.asarray(ratio, dtype=np.float64)
    low = r <= TWO_OVER_PI
    high = r >= 1.0
    mid = ~(low | high)
    out = np.zeros_like(r)
    rm = r[mid]
    base = ((1.0 - rm) / (1.0 - TWO_OVER_PI)) ** (1.0 / consts.h3)
    out[mid] = ((base - 1.0) / consts.h1) ** (1.0 / consts.h2)
    over = mid & ~(out <= GAMMA_MAX)
    out[high | over] = GAMMA_MAX
    clamped = low | high | over
    if r.ndim == 0:
        return float(out), bool(clamped)
    return out, clamped


def h_inverse_exact(ratio, gamma_max: float = GAMMA_MAX):
    """Invert :func:`h_exact` by bisection on ``[0, gamma_max]``.

    Bisection runs until the bracket stops shrinking in floating point, so the
    result is as accurate as ``h_exact`` allows.  Returns ``(gamma_hat, clamped)``.
    """
    r = np.asarray(ratio, dtype=np.float64)
    h_top = h_exact(gamma_max)
    low = r <= TWO_OVER_PI
    high = r >= h_top
    lo = np.zeros_like(r)
    hi = np.full_like(r, gamma_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((mid <= lo) | (mid >= hi)):
            break
        below = h_exact(mid) < r
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(low, 0.0, np.where(high, gamma_max, out))
    clamped = low | high
    if r.ndim == 0:
        return float(out), bool(clamped)
    return out, clamped


def h_inverse_p2(ratio):
    """Second-order polynomial inverse in dB, applied without any clamping.

    ``gamma = 0.5 * 10**((c0/r**2 + c1/r + c2)/10)``; a zero ratio raises.
    """
    r = np.asarray(ratio, dtype=np.float64)
    if np.any(r == 0.0):
        raise ZeroDivisionError("P2 inverse is undefined at ratio 0")
    c0, c1, c2 = P2_COEFFS
    with np.errstate(over="ignore"):
        out = 0.5 * 10.0 ** ((c0 / r**2 + c1 / r + c2) / 10.0)
    return out if out.ndim else float(out)


def h_inverse(ratio, method="numeric_exact", consts: HConstants = PAPER_H):
    """Dispatch to one of the three inverses; returns ``(gamma_hat, clamped)``."""
    if method == "numeric_exact":
        return h_inverse_exact(ratio)
    if method == "am_approx":
        return h_inverse_am(ratio, consts)
    if method == "p2":
        out = h_inverse_p2(ratio)
        clamped = np.zeros(np.shape(out), dtype=bool)
        return out, (bool(clamped) if np.ndim(out) == 0 else clamped)
    raise ValueError(f"unknown inverse method {method!r}")
