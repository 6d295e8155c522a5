"""Time the numba and numpy kernel backends on identical workloads.

    python benchmarks/bench_kernels.py [--repeat 5] [--trials 50]

Workloads:
  case6   one inner solve, two ACI caps and the rate floor binding
  case7   one inner solve, total cap and two ACI caps binding
  solve   full Dinkelbach solves of default-scenario trials, N = 128 and 1024

Compile time is reported separately from steady-state time.
"""

import argparse
import time
import timeit

import numpy as np

from crpowerload import harness, kernels
from crpowerload.config import load_config
from crpowerload.problem import capacity
from crpowerload.solver import SolverOptions, solve_inner

Q_BENCH = 2e-7


def loaded_instance(case, n=128):
    """Two-PU instance whose inner solve at Q_BENCH lands in ``case`` (6 or 7).

    Case 6 binds both ACI caps and the rate floor; case 7 binds the total cap
    and both ACI caps. Caps are fractions of a rate-lifted allocation.
    """
    cfg = load_config(n_subcarriers=n, delta_f=1.25e6 / n, n_pu=2)
    inst = harness.build_trial(cfg, 0).instance
    r0 = capacity(inst, solve_inner(inst, Q_BENCH).powers)
    lifted = solve_inner(inst.with_constraints(rate_floor=1.2 * r0), Q_BENCH).powers
    ft, fa = (0.6, 0.3) if case == 6 else (0.5, 0.5)
    leak_use = inst.constraints.leakage @ lifted
    inst = inst.with_constraints(total_cap=float(ft * lifted.sum()), aci_caps=fa * leak_use)
    if case == 6:
        r_lo = capacity(inst, solve_inner(inst, Q_BENCH).powers)
        r_hi = capacity(inst, solve_inner(inst, 1e-2).powers)
        inst = inst.with_constraints(rate_floor=0.5 * (r_lo + r_hi))
    return inst


def bench(repeat, trials):
    rows = []
    for backend in ("numba", "numpy"):
        t0 = time.perf_counter()
        kernels.get_kernels(backend)
        opts = SolverOptions(backend=backend)
        solve_inner(loaded_instance(6), Q_BENCH, opts)
        warm = time.perf_counter() - t0
        for case in (6, 7):
            inst = loaded_instance(case)
            assert solve_inner(inst, Q_BENCH, opts).case_id == case
            t = min(timeit.repeat(lambda: solve_inner(inst, Q_BENCH, opts), number=3, repeat=repeat)) / 3
            rows.append((backend, f"case{case}", 128, warm if case == 6 else 0.0, t))
        for n in (128, 1024):
            cfg = load_config(n_subcarriers=n, delta_f=1.25e6 / n)
            built = [harness.build_trial(cfg, t) for t in range(trials)]

            def run():
                for tr in built:
                    harness.solve_trial(tr, opts)

            best = min(timeit.repeat(run, number=1, repeat=repeat)) / trials
            rows.append((backend, "solve", n, 0.0, best))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trials", type=int, default=50)
    args = ap.parse_args()
    rows = bench(args.repeat, args.trials)
    print(f"{'backend':8s} {'workload':8s} {'N':>5s} {'load+compile s':>15s} {'per call ms':>12s}")
    for backend, work, n, warm, t in rows:
        print(f"{backend:8s} {work:8s} {n:5d} {warm:15.3f} {1e3 * t:12.3f}")
    by = {(b, w, n): t for b, w, n, _, t in rows}
    for w, n in sorted({(w, n) for _, w, n, _, _ in rows}):
        print(f"speedup numba/numpy {w} N={n}: {by[('numpy', w, n)] / by[('numba', w, n)]:.1f}x")


if __name__ == "__main__":
    np.seterr(all="ignore")
    main()
