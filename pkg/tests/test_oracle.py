import numpy as np
import pytest

from crpowerload.harness import random_instance
from crpowerload.oracle import grid_inner, oracle_ee, oracle_inner
from crpowerload.problem import check_feasibility, parametric_objective
from crpowerload.solver import closed_form_power, solve, solve_inner


def _inst(seed, n=4, mmse=0.05, binding=False):
    return random_instance(np.random.default_rng(seed), n, mmse, binding_rate=binding)


def test_zero_price_gives_zero_power():
    inst = _inst(0)
    res = oracle_inner(inst, 0.0)
    assert res.converged
    level = inst.constraints.total_cap / inst.n
    assert np.all(res.powers <= 1e-8 * level)
    with pytest.raises(ValueError):
        oracle_inner(inst, -1.0)


@pytest.mark.parametrize("seed", range(4))
def test_unconstrained_matches_closed_form(seed):
    # Caps at twice the unconstrained use: slack, yet on the scale of the powers so the
    # barrier's duality gap (relative to the cap) stays far below the powers themselves.
    inst = _inst(seed, 6, 0.05)
    q = 3e-7
    ref = closed_form_power(inst, q)
    inst = inst.with_constraints(total_cap=2 * ref.sum(), aci_caps=2 * inst.constraints.leakage @ ref)
    got = oracle_inner(inst, q).powers
    on = ref > 1e-6 * ref.max()
    assert np.max(np.abs(got[on] - ref[on]) / ref[on]) <= 1e-6
    assert np.all(got[~on] <= 1e-6 * ref.max())


@pytest.mark.parametrize("seed,binding", [(0, False), (1, True), (2, False), (7, True)])
def test_grid_never_beats_oracle(seed, binding):
    inst = _inst(seed, 2, 0.1, binding)
    q = 3e-7
    try:
        orc = oracle_inner(inst, q)
    except Exception:
        pytest.skip("rate floor not strictly attainable")
    best, _ = grid_inner(inst, q, points=1000)
    scale = inst.kappa * inst.constraints.total_cap + inst.p_c
    assert best >= orc.objective - 1e-6 * scale


def test_grid_requires_two_subcarriers():
    with pytest.raises(ValueError):
        grid_inner(_inst(0, 3), 1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_dominant_circuit_power_pushes_to_a_cap(seed):
    inst = _inst(seed, 4, 0.05)
    inst = type(inst)(inst.channel, inst.constraints, inst.kappa, 1e6, inst.delta_f)
    trace = solve(inst)
    orc = oracle_ee(inst)
    act_s = check_feasibility(inst, trace.final.powers, 1e-6).active
    act_o = check_feasibility(inst, orc.powers, 1e-6).active
    assert act_s == act_o
    assert act_s[0] or act_s[1]


@pytest.mark.parametrize("n", [2, 4, 8])
@pytest.mark.parametrize("seed", range(3))
def test_oracle_agrees_with_solver(n, seed):
    inst = _inst(100 * n + seed, n, (0.0, 0.05, 0.1)[seed], binding=bool(seed % 2))
    trace = solve(inst)
    orc = oracle_ee(inst)
    assert trace.final_ee == pytest.approx(orc.objective, rel=1e-6)
    q = trace.final_ee
    inner = oracle_inner(inst, q)
    mine = solve_inner(inst, q)
    scale = inst.kappa * inst.constraints.total_cap + inst.p_c
    assert parametric_objective(inst, mine.powers, q) <= inner.objective + 1e-9 * scale


@pytest.mark.parametrize("seed", range(3))
def test_phi_min_changes_sign_once(seed):
    inst = _inst(seed, 3, 0.05)
    q_star = oracle_ee(inst).objective
    qs = q_star * np.array([0.25, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 4.0])
    signs = [np.sign(oracle_inner(inst, q).objective) for q in qs]
    assert signs == [1.0] * 4 + [-1.0] * 4
