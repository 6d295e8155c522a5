"""Hot kernels: closed-form power loading and nested multiplier bisection.

The driver lives in ``_driver.py`` and is loaded once per backend. The
``numba`` build jit-compiles it with loop primitives (cached on disk); the
``numpy`` build runs the same source in the interpreter on vectorised
primitives. Selection:

* ``CRPOWERLOAD_DISABLE_NUMBA=1`` in the environment forces ``numpy``;
* otherwise ``numba`` is used when importable.

All kernels work on the reduced per-subcarrier data

    a = |H_hat|^2 G     b = sigma_dH^2 G     d = sigma_n^2 + J
    scal = delta_f / ln 2
    keff = kappa + lambda1 + sum_l lambda2_l * leak_l      (per subcarrier)
    qeff = q + lambda3
"""

from __future__ import annotations

import importlib.util
import os
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

__all__ = ["OK", "INFEASIBLE", "STALL", "default_backend", "get_kernels"]

from ._driver import INFEASIBLE, OK, STALL

_ENV_FLAG = "CRPOWERLOAD_DISABLE_NUMBA"


def default_backend() -> str:
    if os.environ.get(_ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on"):
        return "numpy"
    return "numba" if numba is not None else "numpy"


# -- vectorised primitives (numpy) -------------------------------------------

def _cf_np(a, b, d, scal, qeff, keff, out):
    num = scal * qeff / keff * a - d
    pos = num > 0.0
    if b == 0.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            p = num / a
    else:
        s = a + 2.0 * b
        x = -4.0 * b * (a + b) * num / (d * s * s)
        p = 2.0 * num / (s * (1.0 + np.sqrt(np.maximum(1.0 - x, 0.0))))
    out[:] = np.where(pos, p, 0.0)
    return out


def _rate_np(a, b, d, scal, p):
    return scal * float(np.sum(np.log1p(a * p / (b * p + d))))


def _dot_np(w, p):
    return float(w @ p)


def _keff_np(kappa, lam1, lam2, leak, out):
    out[:] = kappa + lam1
    if lam2.shape[0]:
        out += lam2 @ leak
    return out


# -- loading -----------------------------------------------------------------

_DRIVER_FUNCS = ("rate_supremum", "level3", "level2", "solve_multipliers", "closed_form_power")
_LOOP_PRIMS = {"cf": "_cf_loop", "rate": "_rate_loop", "dot": "_dot_loop", "keff_of": "_keff_loop"}


def _load_driver(backend):
    """Fresh copy of the driver module with ``backend`` primitives bound."""
    name = f"{__package__}._driver_{backend}"
    spec = importlib.util.spec_from_file_location(name, Path(__file__).with_name("_driver.py"))
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    if backend == "numba":
        jit = numba.njit(cache=True)
        for alias, prim in _LOOP_PRIMS.items():
            setattr(mod, alias, jit(getattr(mod, prim)))
        for fname in _DRIVER_FUNCS:
            setattr(mod, fname, jit(getattr(mod, fname)))
    else:
        mod.cf, mod.rate, mod.dot, mod.keff_of = _cf_np, _rate_np, _dot_np, _keff_np
    return mod


_CACHE: dict = {}


def get_kernels(backend: str | None = None) -> SimpleNamespace:
    """Kernel namespace for ``backend`` ('numba' or 'numpy'; default per env)."""
    backend = backend or default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and numba is None:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend not in _CACHE:
        mod = _load_driver(backend)
        ns = SimpleNamespace(
            closed_form_power=mod.closed_form_power,
            rate=mod.rate,
            solve_multipliers=mod.solve_multipliers,
            backend=backend,
        )
        _CACHE[backend] = ns
    return _CACHE[backend]
