import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crpowerload import kernels
from crpowerload.harness import build_trial, random_instance
from crpowerload.config import load_config
from crpowerload.solver import SolverOptions, closed_form_power, solve, solve_inner

numba = pytest.importorskip("numba")


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.delenv("CRPOWERLOAD_DISABLE_NUMBA", raising=False)
    assert kernels.default_backend() == "numba"
    monkeypatch.setenv("CRPOWERLOAD_DISABLE_NUMBA", "1")
    assert kernels.default_backend() == "numpy"
    assert kernels.get_kernels().backend == "numpy"


def test_env_flag_end_to_end_in_fresh_process():
    code = (
        "from crpowerload import kernels; from crpowerload.harness import run_solve;"
        "from crpowerload.config import load_config;"
        "r = run_solve(load_config(n_subcarriers=16, delta_f=1.25e6/16));"
        "print(kernels.get_kernels().backend, r['n_q'])"
    )
    env = dict(os.environ, CRPOWERLOAD_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "numpy" and int(out[1]) >= 1


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.get_kernels("fortran")


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.05, 0.1]), st.floats(1e-8, 1e-5))
def test_closed_form_parity(seed, mmse, q):
    inst = random_instance(np.random.default_rng(seed), 8, mmse)
    lam2 = np.random.default_rng(seed + 1).uniform(0, 5, 1)
    a = closed_form_power(inst, q, 1.0, lam2, 1e-7, backend="numba")
    b = closed_form_power(inst, q, 1.0, lam2, 1e-7, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


@pytest.mark.parametrize("seed", range(12))
def test_inner_solve_parity(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 6, (0.0, 0.05, 0.1)[seed % 3], binding_rate=bool(seed % 2))
    base = solve(inst)
    q = base.final_ee * rng.uniform(0.5, 1.5) if base.feasible else 3e-7
    a = solve_inner(inst, q, SolverOptions(backend="numba"))
    b = solve_inner(inst, q, SolverOptions(backend="numpy"))
    assert a.case_id == b.case_id and a.feasible == b.feasible
    np.testing.assert_allclose(a.powers, b.powers, rtol=1e-9, atol=1e-18)


def test_full_solve_parity_default_scenario():
    cfg = load_config(n_subcarriers=64, delta_f=1.25e6 / 64)
    for t in range(5):
        inst = build_trial(cfg, t).instance
        a = solve(inst, SolverOptions(backend="numba"))
        b = solve(inst, SolverOptions(backend="numpy"))
        assert a.n_q == b.n_q
        assert a.final_ee == pytest.approx(b.final_ee, rel=1e-12)
