import math

import numpy as np
import pytest

from crpowerload.config import SweepSpec, load_config
from crpowerload.channel import estimate_mmse, path_loss, PathLossModel
from crpowerload import harness
from crpowerload.harness import (
    build_trial,
    compare_trials,
    default_mmse,
    interference_samples,
    run_baseline_comparison,
    run_solve,
    run_sweep,
    sweep_trials,
    trial_seed,
)
from crpowerload.problem import check_feasibility

SMALL = dict(n_subcarriers=16, delta_f=1.25e6 / 16, trials=6)


def test_trial_seed_streams_are_distinct():
    keys = {trial_seed(0, t, s) for t in range(20) for s in range(4)}
    assert len(keys) == 80
    assert trial_seed(5, 1, 2) == trial_seed(5, 1, 2)
    assert 0 <= trial_seed(2**64 - 1, 0, 0) < 2**128


def test_default_mmse_from_pilots():
    cfg = load_config()
    g = path_loss(PathLossModel(), cfg.d_su)
    assert default_mmse(cfg) == estimate_mmse(5, 1 / 6, 4e-16, g, 0.1)
    assert default_mmse(cfg.replace(mmse=0.07)) == 0.07


def test_build_trial_arms():
    cfg = load_config(**SMALL)
    tr = build_trial(cfg, 2)
    naive = build_trial(cfg, 2, perfect_sensing=True)
    assert 0 < tr.beta_ov < 1
    assert naive.beta_ov == 0.0 and naive.beta_oo == (1.0,)
    assert naive.instance.constraints.total_cap == cfg.p_th
    np.testing.assert_array_equal(naive.instance.channel.est_gain, tr.instance.channel.est_gain)
    moved = build_trial(cfg, 2, capacity_mmse=0.3)
    np.testing.assert_array_equal(moved.instance.channel.est_gain, tr.instance.channel.est_gain)
    assert moved.instance.channel.mmse == 0.3


def test_run_solve_deterministic():
    cfg = load_config(**SMALL, seed=11)
    a, b = run_solve(cfg), run_solve(cfg)
    np.testing.assert_array_equal(a["powers"], b["powers"])
    assert a["ee"] == b["ee"] and a["feasible"]
    assert run_solve(cfg.replace(seed=12))["ee"] != a["ee"]


def test_unreachable_floor_reports_infeasible():
    rec = run_solve(load_config(**SMALL, r_th=1e12))
    assert rec["feasible"] is False
    assert np.all(rec["powers"] == 0) and math.isinf(rec["ee"])


def test_interference_identity_at_active_cap():
    cfg = load_config(n_subcarriers=32, delta_f=1.25e6 / 32, p_th_m=1e-15)
    hits = 0
    for t in range(10):
        tr = build_trial(cfg, t)
        res = harness.solve_trial(tr, harness._options(cfg))
        if not (tr.cci_statistical and res.c1_active):
            continue
        hits += 1
        lhs = tr.beta_ov * (1.0 / cfg.nu_m) * tr.m_band.path_loss * res.total_power
        rhs = cfg.p_th_m / -math.log1p(-cfg.psi_th_m)
        assert lhs == pytest.approx(rhs, rel=1e-6)
        assert check_feasibility(tr.instance, res.powers).feasible
    assert hits > 0


def test_sweep_uses_common_random_numbers():
    cfg = load_config(**SMALL)
    sweep = SweepSpec("cci_threshold", (1e-14, 1e-12))
    res = sweep_trials(cfg, sweep)
    assert len(res) == 2 and all(len(r) == cfg.trials for r in res)
    direct = harness.solve_trial(build_trial(cfg.replace(p_th_m=1e-12), 3), harness._options(cfg))
    assert res[1][3].ee == direct.ee


@pytest.mark.parametrize("var,grid", [
    ("cci_threshold", (1e-15, 1e-13, 1e-11)),
    ("rate_floor", (0.0, 1e5)),
    ("mmse", (0.0, 0.05, 0.1)),
])
def test_run_sweep_rows(var, grid):
    cfg = load_config(**SMALL)
    rows = run_sweep(cfg, SweepSpec(var, grid))
    assert [r["value"] for r in rows] == list(grid)
    assert set(rows[0]) == set(harness.SWEEP_COLUMNS)
    assert all(0.0 <= r["infeasible_fraction"] <= 1.0 for r in rows)


def test_mmse_sweep_keeps_estimate_fixed():
    cfg = load_config(**SMALL)
    res = sweep_trials(cfg, SweepSpec("mmse", (0.0, 0.1)))
    for lo, hi in zip(res[0], res[1]):
        assert hi.ee >= lo.ee * (1 - 1e-8)


def test_compare_trials_shapes():
    cfg = load_config(**SMALL)
    sweep = SweepSpec("cci_threshold", (1e-15, 1e-12))
    res = compare_trials(cfg, sweep, draws=50)
    assert res.fading.shape == (cfg.trials, 50)
    assert res.beta_ov_true.shape == (2, cfg.trials)
    assert interference_samples(res, "naive", 0).shape == (cfg.trials, 50)
    rows = run_baseline_comparison(cfg, sweep, draws=50)
    assert len(rows) == 2 and set(rows[0]) == set(harness.COMPARE_COLUMNS)
    for r in rows:
        assert 0 <= r["compliance_aware"] <= 1 and 0 <= r["cci_active_fraction"] <= 1


def test_validate_rows():
    rows = harness.run_validate(load_config(), 3, 4)
    assert [r["instance"] for r in rows] == [0, 1, 2]
    assert all(r["pass"] == 1 for r in rows)
    with pytest.raises(ValueError):
        harness.run_validate(load_config(), 0)
