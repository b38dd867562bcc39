"""Command-line front end: ``bench``, ``crlb``, ``estimate`` and ``calibrate``.

Exit status is 0 on success, 1 for invalid input and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .calibrate import default_grid, fit_h_constants
from .crlb import BOUND_NAMES, ncrlb_bundle
from .estimators import (
    METHODS,
    EstimationError,
    EstimatorOptions,
    estimate_snr,
    symbol_metrics,
)
from .harness import CellConfig, run_sweep
from .model import db_to_linear, read_samples
from .specfun import PAPER_H

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ndasnr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(tok, kind):
    try:
        return kind(tok)
    except ValueError:
        raise UsageError(f"not a number: {tok!r}") from None


def parse_range(text: str, kind=float) -> list:
    """Parse ``a,b,c``, ``start:step:stop`` (inclusive) or ``a,b,c,...,z``.

    An ellipsis continues the sequence before it: geometrically when the last
    three terms share a ratio, arithmetically otherwise.
    """
    text = text.strip()
    if not text:
        raise UsageError("empty list")
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "...":
            out.append(Ellipsis)
        elif ":" in part[1:]:
            bits = part.split(":")
            if len(bits) != 3:
                raise UsageError(f"range must be start:step:stop, got {part!r}")
            start, step, stop = (_num(b, float) for b in bits)
            if step == 0 or (stop - start) / step < 0:
                raise UsageError(f"range {part!r} never reaches its end")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(kind(round(start + k * step, 12)) for k in range(count))
        else:
            out.append(_num(part, kind))
    if Ellipsis in out:
        i = out.index(Ellipsis)
        head, tail = out[:i], out[i + 1:]
        if len(head) < 2 or len(tail) != 1 or Ellipsis in tail:
            raise UsageError("'...' needs at least two terms before it and exactly one after")
        end = tail[0]
        ratio = head[-1] / head[-2] if head[-2] else None
        geometric = (
            len(head) >= 3 and ratio and head[-2] / head[-3] == ratio and ratio > 1
        )
        seq = list(head)
        step = head[-1] - head[-2]
        if not geometric and step <= 0:
            raise UsageError("'...' sequence must increase")
        while True:
            nxt = seq[-1] * ratio if geometric else seq[-1] + step
            nxt = kind(round(nxt, 12))
            if nxt > end:
                break
            seq.append(nxt)
        if seq[-1] != end:
            raise UsageError(f"sequence does not land on {end}")
        out = seq
    return out


def parse_methods(text: str) -> tuple:
    names = tuple(m.strip().lower() for m in text.split(",") if m.strip())
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise UsageError(f"unknown method(s) {', '.join(bad) or '(none)'}; choose from {','.join(METHODS)}")
    return names


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _g(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def cmd_bench(args) -> int:
    snrs = parse_range(args.snr_db, float)
    ns = parse_range(args.n, int)
    if any(n < 1 for n in ns):
        raise UsageError("--n values must be positive")
    methods = parse_methods(args.methods)
    configs = [
        CellConfig(float(s), int(n), args.trials, methods, args.seed, ml_iters=args.ml_iters)
        for s in snrs
        for n in ns
    ]
    report = run_sweep(configs, workers=args.workers)
    comment = (
        f"config: bench snr_db={args.snr_db} n={args.n} trials={args.trials} "
        f"methods={','.join(methods)} seed={args.seed} ml_iters={args.ml_iters}"
    )
    text = report.to_csv(comment=comment)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    out = sys.stderr if not args.out else sys.stdout
    print(f"{'snr_db':>7} {'n':>6} {'method':>6} {'nmse':>11} {'nb':>10} {'clamp':>7} {'ncrlb_nda':>11}", file=out)
    for row in report.rows():
        print(
            f"{row['snr_db']:7.2f} {row['n']:6d} {row['method']:>6} {row['nmse']:11.4e} "
            f"{row['nb']:10.4f} {row['clamp_rate']:7.4f} {row['ncrlb_nda']:11.4e}",
            file=out,
        )
    for cfg, msg in report.failures:
        print(f"cell snr_db={cfg.gamma_db} n={cfg.n} failed: {msg}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_RUNTIME


CRLB_HEADER = ("snr_db", "gamma", "n", "mode") + tuple(f"ncrlb_{b}" for b in BOUND_NAMES)


def cmd_crlb(args) -> int:
    snrs = parse_range(args.snr_db, float)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    modes = ("nda", "da") if args.mode == "both" else (args.mode,)
    lines = [f"# config: crlb snr_db={args.snr_db} n={args.n} mode={args.mode}"]
    rows = []
    for s in snrs:
        gamma = db_to_linear(s)
        for mode in modes:
            b = ncrlb_bundle(gamma, args.n, mode)
            vals = b.as_dict()
            rows.append([repr(float(s)), repr(gamma), str(args.n), mode]
                        + [repr(vals[k]) for k in BOUND_NAMES])
    lines.append(",".join(CRLB_HEADER))
    lines += [",".join(r) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_estimate(args) -> int:
    methods = parse_methods(args.methods)
    try:
        block = read_samples(args.infile)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.infile}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    opts = EstimatorOptions(max_iter=args.ml_iters)
    print(f"# n={block.n} backend={BACKEND}")
    if block.truth is not None and block.truth.sigma > 0:
        print(f"# truth gamma={_g(block.truth.gamma)} ({_g(block.truth.gamma_db)} dB)")
    header = ("method", "gamma_hat", "gamma_hat_db", "mu_hat", "sigma_hat",
              "lambda_hat", "q_hat", "clamped", "q_flag", "iterations")
    print(",".join(header))
    failed = False
    first = None
    for m in methods:
        try:
            e = estimate_snr(block, m, opts)
        except EstimationError as exc:
            print(f"{m},error: {exc}", file=sys.stderr)
            failed = True
            continue
        d = e.derived
        cols = [m, _g(e.gamma_hat), _g(e.gamma_hat_db)]
        if d is None:
            cols += ["nan"] * 4 + [str(e.clamped), "True"]
        else:
            cols += [_g(d.mu_hat), _g(d.sigma_hat), _g(d.lambda_hat), _g(d.q_hat),
                     str(e.clamped), str(d.q_flag)]
        cols.append(str(e.iterations_used))
        print(",".join(cols))
        if first is None:
            first = e
    if args.emit_symbol_metrics:
        if first is None or first.derived is None:
            print("no usable estimate for symbol metrics", file=sys.stderr)
            return EXIT_RUNTIME
        sm = symbol_metrics(first.derived.lambda_hat, block.samples)
        with open(args.emit_symbol_metrics, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            fh.write(f"# method={first.method} lambda_hat={first.derived.lambda_hat!r}\n")
            w.writerow(("y", "llr", "inst_ber", "inst_mi"))
            for row in zip(block.samples, sm.llr, sm.inst_ber, sm.inst_mi):
                w.writerow([repr(float(v)) for v in row])
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_calibrate(args) -> int:
    if args.grid_points < 3:
        raise UsageError("--grid-points must be at least 3 to pin three constants")
    if args.grid_max_db <= args.grid_min_db:
        raise UsageError("--grid-max-db must exceed --grid-min-db")
    grid = default_grid(args.grid_points, db_to_linear(args.grid_min_db), db_to_linear(args.grid_max_db))
    res = fit_h_constants(grid)
    dev = res.deviation()
    print(f"grid: {args.grid_points} points, {args.grid_min_db} to {args.grid_max_db} dB")
    for name, fitted, ref, d in zip(("H1", "H2", "H3"), res.constants.as_tuple(), PAPER_H.as_tuple(), dev):
        print(f"{name} = {fitted!r:<22} published {ref:+.4f}  deviation {100 * d:+.3f}%")
    print(f"mse = {res.mse!r}")
    print(f"mse with published constants = {res.reference_mse!r}")
    print(f"evaluations = {res.evals}  converged = {res.converged}")
    return EXIT_OK if res.converged else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ndasnr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="Monte Carlo NMSE/NB sweep to CSV")
    b.add_argument("--snr-db", required=True, help="list or start:step:stop, in dB")
    b.add_argument("--n", required=True, help="samples per trial; list, range or a,b,c,...,z")
    b.add_argument("--trials", type=_positive_int, default=100_000)
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--seed", type=_u64, default=0)
    b.add_argument("--ml-iters", type=_positive_int, default=10)
    b.add_argument("--workers", type=_positive_int, default=None,
                   help="worker threads; does not change the output")
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("crlb", help="tabulate normalized Cramer-Rao bounds")
    c.add_argument("--snr-db", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--mode", choices=("nda", "da", "both"), default="both")
    c.add_argument("--out")
    c.set_defaults(func=cmd_crlb)

    e = sub.add_parser("estimate", help="estimate SNR and derived parameters from a sample file")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--methods", default=",".join(METHODS))
    # one block is cheap, so iterate to convergence rather than the sweep default of 10
    e.add_argument("--ml-iters", type=_positive_int, default=100)
    e.add_argument("--emit-symbol-metrics", metavar="CSV",
                   help="write per-sample LLR, error probability and MI using the first method")
    e.set_defaults(func=cmd_estimate)

    k = sub.add_parser("calibrate", help="refit the h-approximation constants")
    k.add_argument("--grid-min-db", type=float, default=-20.0)
    k.add_argument("--grid-max-db", type=float, default=20.0)
    k.add_argument("--grid-points", type=int, default=200)
    k.set_defaults(func=cmd_calibrate)
    return p


_VALUE_FLAGS = ("--snr-db", "--n", "--grid-min-db", "--grid-max-db")


def _glue_negative_values(argv):
    # argparse reads "-6:2:16" as an option; bind it to its flag explicitly
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ndasnr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - surface as a runtime failure code
        log.debug("failure", exc_info=True)
        print(f"ndasnr {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
