"""Deterministic Monte Carlo engine for NMSE / normalized-bias sweeps.

A cell is one ``(snr_db, n)`` point.  Every trial in a cell draws its block
from a key derived from ``(master_seed, snr_db, n, trial_index)``, and every
requested estimator sees the same block, so method comparisons are paired.
Trials are processed in fixed-size chunks whose boundaries depend only on
``n``; worker threads pick up chunks but results are reassembled by index,
which makes a cell's output independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .crlb import ncrlb_gamma
from .estimators import METHODS, EstimationError, EstimatorOptions, check_method, estimate_rows
from .model import derive_key, float_word, generate_rows, params_from
from .moments import batch_moments

log = logging.getLogger(__name__)

CSV_HEADER = (
    "snr_db", "n", "trials", "method", "nmse", "nb",
    "mean_gamma_hat", "clamp_rate", "ncrlb_nda", "ncrlb_da",
)
CHUNK_ELEMENTS = 1 << 21


class CellError(RuntimeError):
    """A cell could not be completed."""


@dataclass(frozen=True)
class CellConfig:
    gamma_db: float
    n: int
    trials: int = 100_000
    methods: tuple = METHODS
    master_seed: int = 0
    prior_q: float = 0.5
    ml_iters: int = 10
    ml_tol: float = 1e-9

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        object.__setattr__(self, "methods", tuple(check_method(m) for m in self.methods))

    @property
    def gamma(self) -> float:
        return 10.0 ** (self.gamma_db / 10.0)

    @property
    def cell_key(self) -> int:
        return derive_key(self.master_seed, float_word(self.gamma_db), self.n)


@dataclass(frozen=True)
class MethodStats:
    nmse: float
    nb: float
    mean_gamma_hat: float
    clamp_rate: float


@dataclass
class CellResult:
    config: CellConfig
    stats: dict = field(default_factory=dict)
    ncrlb_nda: float = math.nan
    ncrlb_da: float = math.nan
    estimates: dict | None = None

    def rows(self):
        c = self.config
        for method in c.methods:
            s = self.stats[method]
            yield {
                "snr_db": float(c.gamma_db), "n": c.n, "trials": c.trials, "method": method,
                "nmse": s.nmse, "nb": s.nb, "mean_gamma_hat": s.mean_gamma_hat,
                "clamp_rate": s.clamp_rate, "ncrlb_nda": self.ncrlb_nda, "ncrlb_da": self.ncrlb_da,
            }


def metrics(estimates, gamma_true):
    """Normalized MSE and normalized bias of SNR estimates in the linear domain.

    Sums are exact (``math.fsum``), so the result does not depend on order.
    """
    if gamma_true <= 0:
        raise ValueError(f"gamma_true must be positive, got {gamma_true}")
    e = np.asarray(estimates, dtype=np.float64).ravel()
    if e.size == 0:
        raise ValueError("no estimates to aggregate")
    err = (e - gamma_true) / gamma_true
    return math.fsum(err * err) / e.size, math.fsum(err) / e.size


def chunk_rows(n: int) -> int:
    return max(1, CHUNK_ELEMENTS // n)


def _run_chunk(config: CellConfig, params, start: int, count: int):
    keys = kernels.trial_keys(config.cell_key, start, count)
    y = generate_rows(params, config.n, keys)
    mom = batch_moments(y)
    opts = EstimatorOptions(max_iter=config.ml_iters, ml_tol=config.ml_tol)
    out = {}
    for method in config.methods:
        try:
            g, c, _ = estimate_rows(y, method, opts, mom)
        except EstimationError as exc:
            bad = int(np.flatnonzero(mom[1] <= 0)[0]) if np.any(mom[1] <= 0) else 0
            raise CellError(f"trial {start + bad}: {exc}") from exc
        out[method] = (g, c)
    return out


def run_cell(config: CellConfig, workers: int | None = None, keep_estimates=False) -> CellResult:
    """Run all trials of one cell and aggregate NMSE, NB and clamp rates."""
    if not config.methods:
        raise CellError("no estimators requested for this cell")
    params = params_from(gamma_db=config.gamma_db, m2_scale=1.0, prior_q=config.prior_q)
    step = chunk_rows(config.n)
    starts = list(range(0, config.trials, step))
    jobs = [(s, min(step, config.trials - s)) for s in starts]
    workers = workers or os.cpu_count() or 1

    def job(j):
        return _run_chunk(config, params, *j)

    if workers == 1 or len(jobs) == 1:
        parts = [job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, jobs))

    gamma = config.gamma
    result = CellResult(config)
    est = {}
    for method in config.methods:
        g = np.concatenate([p[method][0] for p in parts])
        c = np.concatenate([p[method][1] for p in parts])
        nmse, nb = metrics(g, gamma)
        result.stats[method] = MethodStats(
            nmse, nb, math.fsum(g) / g.size, float(np.count_nonzero(c)) / c.size
        )
        est[method] = g
    if keep_estimates:
        result.estimates = est
    result.ncrlb_nda = ncrlb_gamma(gamma, config.n, "nda")
    result.ncrlb_da = ncrlb_gamma(gamma, config.n, "da")
    return result


@dataclass
class SweepReport:
    results: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def rows(self):
        for r in self.results:
            yield from r.rows()

    def to_csv(self, fh=None, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            for line in comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows():
            w.writerow([_fmt(row[k]) for k in CSV_HEADER])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def get(self, gamma_db, n, method) -> MethodStats:
        for r in self.results:
            if r.config.gamma_db == gamma_db and r.config.n == n:
                return r.stats[method]
        raise KeyError((gamma_db, n, method))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(source) -> list:
    """Parse a harness CSV (path or text) back into row dictionaries."""
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        row = {k: float(rec[k]) for k in CSV_HEADER if k != "method"}
        row["n"] = int(rec["n"])
        row["trials"] = int(rec["trials"])
        row["method"] = rec["method"]
        rows.append(row)
    return rows


def run_sweep(configs, workers: int | None = None) -> SweepReport:
    """Run cells in order; a failing cell is recorded and the rest still run."""
    configs = list(configs)
    if not configs:
        raise ValueError("no cells to run")
    report = SweepReport()
    for cfg in configs:
        try:
            report.results.append(run_cell(cfg, workers))
        except Exception as exc:  # fault isolation per cell
            log.warning("cell snr_db=%s n=%s failed: %s", cfg.gamma_db, cfg.n, exc)
            report.failures.append((cfg, str(exc)))
    return report


def figure_grid(kind: str, trials=100_000, master_seed=0, methods=METHODS):
    """Default cell lists: ``"snr"`` sweeps -6..16 dB at n=64, ``"n"`` sweeps 16..8192 at -2 dB."""
    if kind == "snr":
        return [CellConfig(float(g), 64, trials, tuple(methods), master_seed) for g in range(-6, 17, 2)]
    if kind == "n":
        return [CellConfig(-2.0, 2**k, trials, tuple(methods), master_seed) for k in range(4, 14)]
    raise ValueError(f"unknown grid {kind!r}")
