"""KKT power loading for fixed q and the Dinkelbach loop around it.

For a fixed parameter q the inner problem

    min  kappa * sum(p) + p_c - q * c(p)
    s.t. sum(p) <= total_cap,  leak_l . p <= aci_cap_l,  c(p) >= R_th,  p >= 0

is convex and separable apart from the coupling constraints, so for given
multipliers every subcarrier has a closed-form optimum. The multipliers are
found by nested bisection on the concave dual (lambda1 outermost, lambda3
innermost); each partial dual derivative is a constraint value that is
monotone in its own multiplier once the inner multipliers are re-optimised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _k
from .errors import BisectionStall, MaxIterations
from .problem import (
    LN2,
    Allocation,
    ProblemInstance,
    capacity,
    check_feasibility,
    energy_efficiency,
    parametric_objective,
    Status,
)

__all__ = [
    "SolverOptions",
    "SolveTrace",
    "closed_form_power",
    "classify_case",
    "solve_inner",
    "solve",
    "initial_q",
    "kkt_residuals",
]

# (lambda1 > 0, any lambda2 > 0, lambda3 > 0) -> case number
_CASES = {
    (False, False, False): 1,
    (False, False, True): 2,
    (True, False, False): 3,
    (True, False, True): 4,
    (False, True, False): 5,
    (False, True, True): 6,
    (True, True, False): 7,
    (True, True, True): 8,
}


@dataclass(frozen=True)
class SolverOptions:
    delta: float = 1e-8
    q_initial: float | None = None
    multiplier_tol: float = 1e-10
    max_outer: int = 100
    max_bisect: int = 200
    backend: str | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.max_outer < 1 or self.max_bisect < 1:
            raise ValueError("iteration guards must be >= 1")
        if not self.multiplier_tol > 0:
            raise ValueError("multiplier_tol must be > 0")


@dataclass
class SolveTrace:
    iterates: list = field(default_factory=list)  # (q_k, phi_min, case_id)
    n_q: int = 0
    final: Allocation | None = None
    final_ee: float = math.inf
    final_rate: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.final is not None and self.final.feasible


def _reduced(instance: ProblemInstance):
    return (
        np.ascontiguousarray(instance.signal_gain, dtype=float),
        float(instance.error_gain),
        np.ascontiguousarray(instance.noise_floor, dtype=float),
        instance.delta_f / LN2,
    )


def closed_form_power(instance: ProblemInstance, q, lambda1=0.0, lambda2=None, lambda3=0.0, backend=None):
    """Per-subcarrier minimiser of the Lagrangian for given multipliers."""
    cons = instance.constraints
    lam2 = np.zeros(cons.n_pu) if lambda2 is None else np.atleast_1d(np.asarray(lambda2, dtype=float))
    if q < 0 or lambda1 < 0 or lambda3 < 0 or np.any(lam2 < 0):
        raise ValueError("q and multipliers must be non-negative")
    a, b, d, scal = _reduced(instance)
    keff = instance.kappa + lambda1 + (lam2 @ cons.leakage if cons.n_pu else 0.0)
    keff = np.broadcast_to(np.asarray(keff, dtype=float), a.shape).copy()
    return _k.get_kernels(backend).closed_form_power(a, b, d, scal, float(q + lambda3), keff)


def classify_case(allocation: Allocation) -> int:
    key = (
        allocation.lambda1 > 0,
        bool(np.any(np.asarray(allocation.lambda2) > 0)),
        allocation.lambda3 > 0,
    )
    return _CASES[key]


def _violations(instance, p, tol):
    rep = check_feasibility(instance, p, tol)
    return (
        rep.c1 is Status.VIOLATED,
        np.array([s is Status.VIOLATED for s in rep.c2], dtype=bool),
        rep.c3 is Status.VIOLATED,
    )


def solve_inner(instance: ProblemInstance, q: float, options: SolverOptions = SolverOptions()) -> Allocation:
    """Minimise the parametric objective at fixed q subject to all constraints.

    Starts from the unconstrained stationary point (case 1). Constraints it
    violates become active and their multipliers are found by nested
    bisection; if that repaired point violates a constraint that was assumed
    slack, the constraint joins the active set and the solve repeats. When the
    rate floor cannot be met under the power caps, a zero allocation flagged
    infeasible is returned.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    kern = _k.get_kernels(options.backend)
    cons = instance.constraints
    a, b, d, scal = _reduced(instance)
    leak = np.ascontiguousarray(cons.leakage if cons.n_pu else np.zeros((0, a.size)), dtype=float)
    caps = np.ascontiguousarray(cons.aci_caps, dtype=float)
    tol = options.multiplier_tol

    use1 = False
    use2 = np.zeros(cons.n_pu, dtype=bool)
    use3 = False
    p = closed_form_power(instance, q, backend=options.backend)
    lam1, lam2, lam3 = 0.0, np.zeros(cons.n_pu), 0.0
    # Each round adds at least one constraint, so L + 3 rounds always suffice.
    for _ in range(cons.n_pu + 3):
        v1, v2, v3 = _violations(instance, p, tol)
        if not (v1 or v2.any() or v3):
            break
        use1 |= v1
        use2 |= v2
        use3 |= v3
        status, lam1, lam2, lam3, p = kern.solve_multipliers(
            a, b, d, scal, float(q), float(instance.kappa), float(cons.total_cap), use1,
            leak, caps, use2, float(cons.rate_floor), use3, tol, int(options.max_bisect),
        )
        if status == _k.INFEASIBLE:
            return Allocation(np.zeros(a.size), 0.0, np.zeros(cons.n_pu), 0.0, 1, False, float(q))
        if status == _k.STALL:
            raise BisectionStall("could not bracket a power-cap multiplier; check the instance caps")
    else:
        raise BisectionStall("active-set repair did not settle")
    alloc = Allocation(np.asarray(p, dtype=float).copy(), float(lam1), np.asarray(lam2, dtype=float).copy(),
                       float(lam3), 1, True, float(q))
    alloc.case_id = classify_case(alloc)
    return alloc


def _equal_power_point(instance: ProblemInstance) -> np.ndarray:
    cons = instance.constraints
    level = cons.total_cap / instance.n
    for row, cap in zip(cons.leakage, cons.aci_caps):
        s = float(row.sum())
        if s > 0:
            level = min(level, cap / s)
    return np.full(instance.n, level)


def initial_q(instance: ProblemInstance, options: SolverOptions = SolverOptions()) -> float | None:
    """EE of a feasible starting point, or None if the instance is infeasible.

    Uses equal power at the binding cap; if that misses the rate floor, the
    least-power allocation meeting the floor (the inner solve at q = 0).
    """
    p0 = _equal_power_point(instance)
    if capacity(instance, p0) > 0 and check_feasibility(instance, p0, options.multiplier_tol).feasible:
        return energy_efficiency(instance, p0)
    if instance.constraints.rate_floor <= 0:
        return None
    alloc = solve_inner(instance, 0.0, options)
    if not alloc.feasible or capacity(instance, alloc.powers) <= 0:
        return None
    return energy_efficiency(instance, alloc.powers)


def solve(instance: ProblemInstance, options: SolverOptions = SolverOptions()) -> SolveTrace:
    """Minimise energy per bit by Dinkelbach iteration over q."""
    trace = SolveTrace()
    q = options.q_initial if options.q_initial is not None else initial_q(instance, options)
    if q is None:
        trace.final = Allocation(np.zeros(instance.n), 0.0, np.zeros(instance.constraints.n_pu), 0.0, 1, False, 0.0)
        return trace
    for _ in range(options.max_outer):
        alloc = solve_inner(instance, q, options)
        trace.n_q += 1
        if not alloc.feasible:
            trace.iterates.append((q, math.nan, alloc.case_id))
            trace.final = alloc
            return trace
        phi = parametric_objective(instance, alloc.powers, q)
        trace.iterates.append((q, phi, alloc.case_id))
        rate = capacity(instance, alloc.powers)
        if rate <= 0.0:
            # q too small to switch on any subcarrier: restart from a feasible point.
            q = initial_q(instance, options)
            if q is None:
                trace.final = alloc
                trace.final.feasible = False
                return trace
            continue
        q_next = (instance.kappa * alloc.total_power + instance.p_c) / rate
        # A start below the optimum gives phi > delta; one update fixes that.
        if abs(phi) <= options.delta:
            trace.final = alloc
            trace.final_ee = q_next
            trace.final_rate = rate
            return trace
        q = q_next
    raise MaxIterations(f"Dinkelbach loop exceeded {options.max_outer} iterations")


def kkt_residuals(instance: ProblemInstance, alloc: Allocation) -> dict:
    """Scaled KKT residuals of an inner-problem allocation.

    stationarity : max over p_i > 0 of |dL/dp_i| / (kappa + lambda1 + sum lambda2 leak)
    dual_sign : most negative scaled dL/dp_i over p_i == 0 (should be >= 0)
    primal : max relative constraint violation
    slackness : max relative gap of constraints with a positive multiplier
    """
    cons = instance.constraints
    p = alloc.powers
    a, b, d = instance.signal_gain, instance.error_gain, instance.noise_floor
    weight = instance.kappa + alloc.lambda1 + (alloc.lambda2 @ cons.leakage if cons.n_pu else 0.0)
    denom = b * (a + b) * p**2 + d * (a + 2 * b) * p + d**2
    benefit = instance.delta_f / LN2 * (alloc.q + alloc.lambda3) * a * d / denom
    grad = (weight - benefit) / weight
    on = p > 0
    stationarity = float(np.max(np.abs(grad[on]))) if on.any() else 0.0
    dual_sign = float(np.min(grad[~on])) if (~on).any() else 0.0

    rate = capacity(instance, p)
    gaps = [float(np.sum(p)) / cons.total_cap - 1.0]
    gaps += [float(row @ p) / cap - 1.0 for row, cap in zip(cons.leakage, cons.aci_caps)]
    rate_gap = 1.0 - rate / cons.rate_floor if cons.rate_floor > 0 else -1.0
    gaps.append(rate_gap)
    primal = max(0.0, max(gaps))
    lams = [alloc.lambda1, *np.asarray(alloc.lambda2).tolist(), alloc.lambda3]
    slackness = max((abs(g) for g, lam in zip(gaps, lams) if lam > 0), default=0.0)
    return {
        "stationarity": stationarity,
        "dual_sign": dual_sign,
        "primal": primal,
        "slackness": slackness,
    }
