"""Command-line front end.

    crpowerload solve            one realization, one CSV row per subcarrier
    crpowerload sweep            Monte Carlo means over a parameter grid
    crpowerload compare-sensing  sensing-aware vs perfect-sensing arms
    crpowerload validate         KKT solver vs reference oracle

Exit codes: 0 ok, 1 bad input or config, 2 solver failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time

import numpy as np

from . import harness
from .config import SWEEP_VARIABLES, SweepSpec, load_config
from .errors import ConfigError, NotConverged, SolverError, ValidationFailure

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3

SOLVE_COLUMNS = ("subcarrier", "power", "ee", "rate", "n_q", "case_id", "feasible", "total_power")

DEFAULT_GRIDS = {
    "cci_threshold": tuple(float(v) for v in np.logspace(-16, -10, 13)),
    "rate_floor": tuple(float(v) for v in np.linspace(0.0, 1e6, 11)),
    "mmse": (0.0, 0.05, 0.1),
}


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for solver failures here.
    def error(self, message):
        raise _InputError(f"{self.prog}: {message}")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return repr(value) if math.isfinite(value) else ""


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _InputError(f"cannot write {out}: {exc}") from None


def parse_grid(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad --grid value {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value scenario file")
    common.add_argument("--seed", type=int, help="base seed (overrides config)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (overrides config)")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no summary on stderr")
    common.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend")

    parser = _Parser(prog="crpowerload", description="Energy-efficient OFDM cognitive-radio power loading.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve trial 0 of the scenario")
    for name, helptext in (("sweep", "mean EE/rate over a grid"),
                           ("compare-sensing", "sensing-aware vs perfect-sensing baseline")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--var", choices=SWEEP_VARIABLES, default="cci_threshold")
        p.add_argument("--grid", help="comma-separated increasing values")
        if name == "compare-sensing":
            p.add_argument("--draws", type=int, default=100, help="fading draws per trial")
    p = sub.add_parser("validate", parents=[common], help="cross-check against the reference oracle")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--n", type=int, default=4, help="subcarriers per random instance")
    return parser


def _sweep_spec(args) -> SweepSpec:
    grid = parse_grid(args.grid) if args.grid else DEFAULT_GRIDS[args.var]
    return SweepSpec(args.var, grid)


def _run(args) -> tuple[str, str]:
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    cfg = load_config(args.config, seed=args.seed, trials=args.trials)
    backend = args.backend
    if args.command == "solve":
        try:
            rec = harness.run_solve(cfg, backend)
        except SolverError as exc:
            raise SolverError(f"{exc} (seed={cfg.seed})") from exc
        rows = [
            {"subcarrier": i, "power": p, "ee": rec["ee"], "rate": rec["rate"], "n_q": rec["n_q"],
             "case_id": rec["case_id"], "feasible": rec["feasible"], "total_power": rec["total_power"]}
            for i, p in enumerate(rec["powers"])
        ]
        summary = (f"ee={rec['ee']:.6g} J/bit rate={rec['rate']:.6g} b/s n_q={rec['n_q']} "
                   f"case={rec['case_id']} feasible={rec['feasible']}")
        return format_csv(SOLVE_COLUMNS, rows), summary
    if args.command == "sweep":
        rows = harness.run_sweep(cfg, _sweep_spec(args), backend)
        return format_csv(harness.SWEEP_COLUMNS, rows), f"{len(rows)} grid points x {cfg.trials} trials"
    if args.command == "compare-sensing":
        if args.draws < 1:
            raise ConfigError("--draws must be >= 1")
        rows = harness.run_baseline_comparison(cfg, _sweep_spec(args), args.draws, backend)
        return format_csv(harness.COMPARE_COLUMNS, rows), f"{len(rows)} grid points x {cfg.trials} trials"
    if args.instances < 1 or args.n < 1:
        raise ConfigError("--instances and --n must be >= 1")
    rows = harness.run_validate(cfg, args.instances, args.n, backend)
    worst = max(r["rel_gap"] for r in rows)
    return format_csv(harness.VALIDATE_COLUMNS, rows), f"{len(rows)} instances passed, worst gap {worst:.3g}"


def main(argv=None) -> int:
    parser = _build_parser()
    quiet = False
    try:
        args = parser.parse_args(argv)
        quiet = args.quiet
        start = time.perf_counter()
        text, summary = _run(args)
        _emit(text, args.out)
        if not quiet:
            print(f"{summary} ({time.perf_counter() - start:.2f} s)", file=sys.stderr)
        return EXIT_OK
    except (_InputError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, NotConverged) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationFailure as exc:
        try:
            _emit(format_csv(harness.VALIDATE_COLUMNS, exc.rows), args.out)
        except _InputError:
            pass
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
