"""Nested multiplier bisection shared by both kernel backends.

This file is executed twice by :mod:`kernels`, once per backend. The names
``cf``, ``rate``, ``dot`` and ``keff_of`` are bound by the loader before the
first call: loop primitives compiled with numba, or vectorised numpy ones.
"""

import math

import numpy as np

OK, INFEASIBLE, STALL = 0, 1, 2
_EPS = 2.220446049250313e-16

cf = rate = dot = keff_of = None  # bound by the loader


# -- loop primitives ---------------------------------------------------------

def _cf_loop(a, b, d, scal, qeff, keff, out):
    for i in range(a.shape[0]):
        num = scal * qeff / keff[i] * a[i] - d[i]
        if num <= 0.0:
            out[i] = 0.0
        elif b == 0.0:
            out[i] = num / a[i]
        else:
            s = a[i] + 2.0 * b
            x = -4.0 * b * (a[i] + b) * num / (d[i] * s * s)
            out[i] = 2.0 * num / (s * (1.0 + math.sqrt(1.0 - x)))
    return out


def _rate_loop(a, b, d, scal, p):
    total = 0.0
    for i in range(a.shape[0]):
        total += math.log1p(a[i] * p[i] / (b * p[i] + d[i]))
    return scal * total


def _dot_loop(w, p):
    total = 0.0
    for i in range(w.shape[0]):
        total += w[i] * p[i]
    return total


def _keff_loop(kappa, lam1, lam2, leak, out):
    for i in range(out.shape[0]):
        acc = kappa + lam1
        for l in range(lam2.shape[0]):
            acc += lam2[l] * leak[l, i]
        out[i] = acc
    return out


# -- driver ------------------------------------------------------------------

def rate_supremum(a, b, scal):
    if b == 0.0:
        return np.inf
    total = 0.0
    for i in range(a.shape[0]):
        total += math.log1p(a[i] / b)
    return scal * total

def level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p):
    # Innermost multiplier: rate floor. Writes the allocation into p.
    cf(a, b, d, scal, q, keff, p)
    if not use3 or rate(a, b, d, scal, p) >= rate_floor:
        return OK, 0.0
    if rate_floor >= rate_supremum(a, b, scal):
        return INFEASIBLE, 0.0
    # Smallest qeff that switches on at least one subcarrier.
    start = np.inf
    for i in range(a.shape[0]):
        if a[i] > 0.0:
            start = min(start, keff[i] * d[i] / (a[i] * scal))
    lo = 0.0
    hi = max(start, q, 1e-300)
    n = 0
    while True:
        cf(a, b, d, scal, q + hi, keff, p)
        if rate(a, b, d, scal, p) >= rate_floor:
            break
        lo = hi
        hi *= 2.0
        n += 1
        if n > max_bisect:
            return INFEASIBLE, 0.0
    for _ in range(max_bisect):
        if hi - lo <= 4.0 * _EPS * hi:
            break
        mid = 0.5 * (lo + hi)
        cf(a, b, d, scal, q + mid, keff, p)
        r = rate(a, b, d, scal, p)
        if r >= rate_floor:
            hi = mid
            if r <= rate_floor * (1.0 + tol):
                break
        else:
            lo = mid
    cf(a, b, d, scal, q + hi, keff, p)
    return OK, hi

def level2(a, b, d, scal, q, kappa, lam1, leak, aci_caps, use2, rate_floor, use3,
           tol, max_bisect, keff, lam2, p):
    # Middle multipliers: ACI caps, cyclic over PUs. Fills lam2 and p.
    n_pu = aci_caps.shape[0]
    for l in range(n_pu):
        lam2[l] = 0.0
    keff_of(kappa, lam1, lam2, leak, keff)
    st, lam3 = level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p)
    if st != OK:
        return st, lam3
    any_active = False
    for l in range(n_pu):
        any_active = any_active or use2[l]
    if not any_active:
        return OK, lam3
    max_pass = 1 if n_pu == 1 else 200
    for _ in range(max_pass):
        changed = False
        for l in range(n_pu):
            if not use2[l]:
                continue
            old = lam2[l]
            cap = aci_caps[l]
            lam2[l] = 0.0
            keff_of(kappa, lam1, lam2, leak, keff)
            st, lam3 = level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p)
            if st != OK:
                return st, lam3
            if dot(leak[l], p) <= cap:
                if old != 0.0:
                    changed = True
                continue
            wmax = 0.0
            for i in range(leak.shape[1]):
                wmax = max(wmax, leak[l, i])
            lo = 0.0
            hi = (kappa + lam1) / max(wmax, 1e-300)
            n = 0
            while True:
                lam2[l] = hi
                keff_of(kappa, lam1, lam2, leak, keff)
                st, lam3 = level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p)
                if st != OK:
                    return st, lam3
                if dot(leak[l], p) <= cap:
                    break
                lo = hi
                hi *= 2.0
                n += 1
                if n > max_bisect:
                    return (INFEASIBLE if use3 else STALL), lam3
            for _ in range(max_bisect):
                if hi - lo <= 4.0 * _EPS * hi:
                    break
                mid = 0.5 * (lo + hi)
                lam2[l] = mid
                keff_of(kappa, lam1, lam2, leak, keff)
                st, lam3 = level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p)
                if st != OK:
                    return st, lam3
                g = dot(leak[l], p) - cap
                if g <= 0.0:
                    hi = mid
                    if g >= -tol * cap:
                        break
                else:
                    lo = mid
            lam2[l] = hi
            if abs(hi - old) > tol * max(hi, old):
                changed = True
        if not changed:
            break
    keff_of(kappa, lam1, lam2, leak, keff)
    st, lam3 = level3(a, b, d, scal, q, keff, rate_floor, use3, tol, max_bisect, p)
    return st, lam3

def solve_multipliers(a, b, d, scal, q, kappa, total_cap, use1, leak, aci_caps, use2,
                      rate_floor, use3, tol, max_bisect):
    """Nested bisection lambda1 -> lambda2 -> lambda3 for a fixed active set.

    Returns (status, lambda1, lambda2, lambda3, powers).
    """
    n = a.shape[0]
    p = np.zeros(n)
    keff = np.empty(n)
    lam2 = np.zeros(aci_caps.shape[0])
    args = (leak, aci_caps, use2, rate_floor, use3, tol, max_bisect, keff, lam2, p)
    st, lam3 = level2(a, b, d, scal, q, kappa, 0.0, *args)
    if st != OK or not use1:
        return st, 0.0, lam2, lam3, p
    total = 0.0
    for i in range(n):
        total += p[i]
    if total <= total_cap:
        return OK, 0.0, lam2, lam3, p
    lo = 0.0
    hi = kappa
    k = 0
    while True:
        st, lam3 = level2(a, b, d, scal, q, kappa, hi, *args)
        if st != OK:
            return st, hi, lam2, lam3, p
        total = 0.0
        for i in range(n):
            total += p[i]
        if total <= total_cap:
            break
        lo = hi
        hi *= 2.0
        k += 1
        if k > max_bisect:
            return (INFEASIBLE if use3 else STALL), hi, lam2, lam3, p
    for _ in range(max_bisect):
        if hi - lo <= 4.0 * _EPS * hi:
            break
        mid = 0.5 * (lo + hi)
        st, lam3 = level2(a, b, d, scal, q, kappa, mid, *args)
        if st != OK:
            return st, mid, lam2, lam3, p
        total = 0.0
        for i in range(n):
            total += p[i]
        if total <= total_cap:
            hi = mid
            if total >= total_cap * (1.0 - tol):
                break
        else:
            lo = mid
    st, lam3 = level2(a, b, d, scal, q, kappa, hi, *args)
    return st, hi, lam2, lam3, p

def closed_form_power(a, b, d, scal, qeff, keff):
    out = np.empty(a.shape[0])
    return cf(a, b, d, scal, qeff, keff, out)
