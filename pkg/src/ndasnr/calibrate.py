"""Nelder-Mead simplex minimizer and the refit of the ``h`` approximation constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import PAPER_H, HConstants, h_approx, h_exact

PENALTY = 1e6


@dataclass(frozen=True)
class SimplexOptions:
    max_evals: int = 10_000
    x_tol: float = 1e-9
    f_tol: float = 1e-9
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    initial_step: float = 0.05

    def __post_init__(self):
        if not self.reflection > 0:
            raise ValueError("reflection coefficient must be positive")
        if not self.expansion > max(1.0, self.reflection):
            raise ValueError("expansion coefficient must exceed 1 and the reflection coefficient")
        if not 0 < self.contraction < 1 or not 0 < self.shrink < 1:
            raise ValueError("contraction and shrink coefficients must lie in (0, 1)")
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool


def nelder_mead(objective, x0, opts: SimplexOptions = SimplexOptions()) -> SimplexResult:
    """Minimize ``objective`` from ``x0`` with the downhill simplex method.

    The initial simplex perturbs each coordinate of ``x0`` by
    ``opts.initial_step`` (relative, or absolute for zero coordinates).
    Iteration stops when the simplex diameter is within ``x_tol`` and the
    spread of vertex values within ``f_tol``, when all vertex values are
    exactly equal, or when the evaluation budget runs out.  Ties keep the
    earlier vertex, so ``x0`` wins when the objective is flat.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    d = x0.size
    if opts.max_evals < d + 1:
        raise ValueError(f"budget {opts.max_evals} cannot build a {d}-d simplex")
    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at the start point: {f0}")
    evals = 1

    def fn(x):
        nonlocal evals
        evals += 1
        v = float(objective(x))
        return v if math.isfinite(v) else math.inf

    pts = [x0]
    vals = [f0]
    for i in range(d):
        x = x0.copy()
        x[i] = x[i] * (1.0 + opts.initial_step) if x[i] != 0 else 2.5e-4
        pts.append(x)
        vals.append(fn(x))
    sim = np.array(pts)
    fs = np.array(vals)

    a, g, c, s = opts.reflection, opts.expansion, opts.contraction, opts.shrink
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        diameter = np.max(np.abs(sim[1:] - sim[0]))
        spread = np.max(np.abs(fs[1:] - fs[0]))
        if (diameter <= opts.x_tol and spread <= opts.f_tol) or spread == 0.0:
            converged = True
            break
        if evals >= opts.max_evals:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + a * (centroid - sim[-1])
        fr = fn(xr)
        if fr < fs[0]:
            xe = centroid + g * (xr - centroid)
            fe = fn(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + c * (xr - centroid)
            fc = fn(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + c * (sim[-1] - centroid)
            fc = fn(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, d + 1):
            sim[i] = sim[0] + s * (sim[i] - sim[0])
            fs[i] = fn(sim[i])
    return SimplexResult(sim[0].copy(), float(fs[0]), evals, converged)


def default_grid(points=200, lo=1e-2, hi=1e2) -> np.ndarray:
    """Log-spaced SNR abscissae for the fit (linear SNR)."""
    if points < 1:
        raise ValueError("the fit grid needs at least one point")
    return np.logspace(math.log10(lo), math.log10(hi), int(points))


@dataclass(frozen=True)
class FitResult:
    constants: HConstants
    mse: float
    reference_mse: float
    evals: int
    converged: bool
    underdetermined: bool

    def deviation(self, reference: HConstants = PAPER_H):
        """Relative deviation of each fitted constant from ``reference``."""
        return tuple(
            (a - b) / abs(b) for a, b in zip(self.constants.as_tuple(), reference.as_tuple())
        )


def h_fit_mse(consts, grid, target=None):
    """Mean squared gap between the exact ``h`` and its approximation on ``grid``."""
    h1, h2, h3 = consts
    if not (h1 > 0 and h2 > 0 and h3 < 0):
        return PENALTY
    grid = np.asarray(grid, dtype=np.float64)
    if target is None:
        target = h_exact(grid)
    approx = 1.0 - (1.0 - 2.0 / math.pi) * (h1 * grid**h2 + 1.0) ** h3
    return float(np.mean((approx - target) ** 2))


def fit_h_constants(grid=None, opts: SimplexOptions | None = None, start: HConstants = PAPER_H):
    """Refit ``(h1, h2, h3)`` by least squares in ratio space, starting at ``start``.

    Grids with fewer than three points cannot pin three constants; the fit
    still runs but the result is flagged ``underdetermined``.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64).ravel()
    if grid.size < 1:
        raise ValueError("the fit grid is empty")
    if np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
        raise ValueError("the fit grid must be positive and strictly increasing")
    if opts is None:
        opts = SimplexOptions(x_tol=1e-10, f_tol=1e-18)
    target = h_exact(grid)
    res = nelder_mead(lambda c: h_fit_mse(c, grid, target), start.as_tuple(), opts)
    consts = HConstants(*map(float, res.x))
    ref = h_fit_mse(PAPER_H.as_tuple(), grid, target)
    return FitResult(consts, res.fun, ref, res.evals, res.converged, grid.size < 3)


def max_h_gap(consts: HConstants = PAPER_H, grid=None) -> float:
    """Largest absolute gap between exact and approximate ``h`` on ``grid``."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    return float(np.max(np.abs(h_approx(grid, consts) - h_exact(grid))))
