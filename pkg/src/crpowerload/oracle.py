"""Slow reference solvers used to certify the KKT solver.

Nothing here uses the closed-form power expression or the multiplier
bisection; only the rate / objective evaluations from :mod:`problem` are
shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotConverged
from .problem import ProblemInstance, capacity, energy_efficiency, parametric_objective

__all__ = ["OracleResult", "oracle_inner", "oracle_ee", "grid_inner"]


@dataclass
class OracleResult:
    powers: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _constraint_rows(instance: ProblemInstance):
    cons = instance.constraints
    rows = [np.ones(instance.n)] + [row for row in cons.leakage]
    caps = [cons.total_cap] + [float(c) for c in cons.aci_caps]
    return np.array(rows), np.array(caps)


def _rate_derivatives(instance: ProblemInstance, p):
    """Capacity and its diagonal first and second derivatives."""
    a, b, d = instance.signal_gain, instance.error_gain, instance.noise_floor
    scal = instance.delta_f / np.log(2.0)
    top = (a + b) * p + d
    bot = b * p + d
    rate = scal * float(np.sum(np.log1p(a * p / bot)))
    g1 = scal * ((a + b) / top - b / bot)
    g2 = scal * (b**2 / bot**2 - (a + b) ** 2 / top**2)
    return rate, g1, g2


class _Barrier:
    """Log-barrier Newton method in scaled variables p = s * u.

    Minimises ``w.p - q * c(p)`` subject to p > 0, the linear caps and, when
    ``floor > 0``, c(p) > floor.
    """

    def __init__(self, instance, scale, w, q, floor):
        self.inst = instance
        self.s = scale
        self.rows, self.caps = _constraint_rows(instance)
        self.w = w
        self.q = q
        self.floor = floor

    def slacks(self, p):
        lin = self.caps - self.rows @ p
        rate = _rate_derivatives(self.inst, p)[0]
        return lin, rate - self.floor

    def inside(self, p):
        if not np.all(p > 0):
            return False
        lin, rs = self.slacks(p)
        return bool( np.all(lin > 0) and (self.floor <= 0 or rs > 0))

    def value(self, p, t):
        lin, rs = self.slacks(p)
        rate = rs + self.floor
        val = t * (self.w @ p - self.q * rate) - np.sum(np.log(p)) - np.sum(np.log(lin))
        if self.floor > 0:
            val -= np.log(rs)
        return val

    def newton(self, p, t, tol=1e-10, max_iter=200):
        s = self.s
        prev = np.inf
        for it in range(max_iter):
            rate, g1, g2 = _rate_derivatives(self.inst, p)
            lin = self.caps - self.rows @ p
            grad = t * (self.w - self.q * g1) - 1.0 / p + self.rows.T @ (1.0 / lin)
            hess = np.diag(-t * self.q * g2 + 1.0 / p**2) + (self.rows.T / lin**2) @ self.rows
            if self.floor > 0:
                rs = rate - self.floor
                grad -= g1 / rs
                hess += np.outer(g1, g1) / rs**2 - np.diag(g2) / rs
            gu = grad * s
            hu = hess * np.outer(s, s)
            du = -np.linalg.solve(hu, gu)
            dec = float(-gu @ du)
            if dec / 2.0 <= tol:
                return p, it
            dp = du * s
            if dec < 0.0625:
                # Newton decrement below 1/4: the full step is safe and converges
                # quadratically, so judge progress by the decrement, not by values
                # that no longer resolve in double precision.
                if dec >= 0.5 * prev:
                    return p, it
                prev = dec
                cand = p + dp
                if self.inside(cand):
                    p = cand
                    continue
            f0 = self.value(p, t)
            # Below 1e-14 |f0| the decrement is rounding noise.
            if dec / 2.0 <= 1e-14 * abs(f0):
                return p, it
            step = 1.0
            while True:
                cand = p + step * dp
                if self.inside(cand) and self.value(cand, t) <= f0 - 0.25 * step * dec:
                    break
                step *= 0.5
                if step < 1e-12:
                    return p, it
            p = cand
            if step < 1e-6:
                # Line search is resolving rounding noise; p is centred.
                return p, it
        raise NotConverged("barrier Newton iteration cap reached")

    def solve(self, p, gap):
        m = self.inst.n + len(self.caps) + (1 if self.floor > 0 else 0)
        t = 1.0
        total = 0
        while True:
            p, it = self.newton(p, t)
            total += it + 1
            if m / t <= gap:
                return p, total
            t *= 10.0


def _interior_start(instance: ProblemInstance, gap: float):
    """Strictly feasible point, or None if the rate floor cannot be met strictly."""
    rows, caps = _constraint_rows(instance)
    level = min(c / w.sum() for w, c in zip(rows, caps) if w.sum() > 0)
    p = np.full(instance.n, 0.5 * level)
    floor = instance.constraints.rate_floor
    if floor <= 0 or _rate_derivatives(instance, p)[0] > floor:
        return p
    # Phase I: push the rate up inside the caps until it clears the floor.
    scale = np.full(instance.n, level)
    bar = _Barrier(instance, scale, np.zeros(instance.n), 1.0, 0.0)
    m = instance.n + len(caps)
    t = 1.0 / instance.delta_f
    while m / t > 1e-14 * instance.delta_f * instance.n:
        p, _ = bar.newton(p, t)
        if _rate_derivatives(instance, p)[0] > floor:
            return p
        t *= 10.0
    return None


def oracle_inner(instance: ProblemInstance, q: float, tol: float = 1e-10, p0=None) -> OracleResult:
    """Minimise the parametric objective at fixed q by a primal log-barrier method.

    ``tol`` bounds the barrier duality gap relative to ``kappa * total_cap +
    p_c``. ``p0`` must be strictly feasible if given.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    p = _interior_start(instance, tol) if p0 is None else np.asarray(p0, dtype=float).copy()
    if p is None:
        raise NotConverged("rate floor is not strictly attainable")
    cons = instance.constraints
    level = float(np.min(_constraint_rows(instance)[1]))
    scale = np.maximum(p, 1e-3 * level)
    w = np.full(instance.n, instance.kappa)
    bar = _Barrier(instance, scale, w, q, cons.rate_floor)
    gap = tol * (instance.kappa * cons.total_cap + instance.p_c)
    p, iterations = bar.solve(p, gap)
    return OracleResult(p, parametric_objective(instance, p, q), iterations, True)


def oracle_ee(instance: ProblemInstance, tol: float = 1e-10, rel_width: float = 1e-9) -> OracleResult:
    """Minimise energy per bit by bracketing the root of q -> min Phi(., q).

    The bracket starts at [0, EE of a feasible point] and is halved on the
    sign of the inner minimum. The returned objective is the smallest EE
    among the inner minimisers visited.
    """
    p = _interior_start(instance, tol)
    if p is None or capacity(instance, p) <= 0:
        raise NotConverged("no strictly feasible point with positive rate")
    best_p, best = p, energy_efficiency(instance, p)
    lo, hi = 0.0, best
    iterations = 0
    start = p
    while hi - lo > rel_width * hi:
        q = 0.5 * (lo + hi)
        res = oracle_inner(instance, q, tol, p0=start)
        iterations += res.iterations
        if capacity(instance, res.powers) > 0:
            ee = energy_efficiency(instance, res.powers)
            if ee < best:
                best, best_p = ee, res.powers
        if res.objective < 0:
            hi = q
        else:
            lo = q
    return OracleResult(best_p, best, iterations, True)


def grid_inner(instance: ProblemInstance, q: float, points: int = 1000):
    """Exhaustive minimum of the parametric objective for N = 2 on a ``points`` x ``points`` grid.

    Returns (best objective, best powers). Infeasible grid points are skipped.
    """
    if instance.n != 2:
        raise ValueError("grid search is only provided for N = 2")
    rows, caps = _constraint_rows(instance)
    upper = [min(c / w[i] for w, c in zip(rows, caps) if w[i] > 0) for i in range(2)]
    g0 = np.linspace(0.0, upper[0], points)
    g1 = np.linspace(0.0, upper[1], points)
    p0, p1 = np.meshgrid(g0, g1, indexing="ij")
    feasible = np.ones_like(p0, dtype=bool)
    for w, c in zip(rows, caps):
        feasible &= w[0] * p0 + w[1] * p1 <= c
    a, b, d = instance.signal_gain, instance.error_gain, instance.noise_floor
    rate = instance.delta_f / np.log(2.0) * (
        np.log1p(a[0] * p0 / (b * p0 + d[0])) + np.log1p(a[1] * p1 / (b * p1 + d[1]))
    )
    feasible &= rate >= instance.constraints.rate_floor
    phi = instance.kappa * (p0 + p1) + instance.p_c - q * rate
    phi = np.where(feasible, phi, np.inf)
    k = np.unravel_index(np.argmin(phi), phi.shape)
    return float(phi[k]), np.array([p0[k], p1[k]])
