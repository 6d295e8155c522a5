"""Scenario construction and the Monte Carlo experiments behind the CLI.

Random streams: every trial ``t`` of a run seeded with ``s`` draws from
independent Philox streams keyed by ``(s, t, stream)``, with one stream id per
purpose (sensing, channel, fading). A sweep therefore reuses identical draws
for trial ``t`` at every grid value (common random numbers), and results do
not depend on the order in which trials are evaluated.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .channel import PathLossModel, draw_realization, estimate_mmse, path_loss, pu_interference
from .config import ScenarioConfig, SweepSpec
from .errors import ValidationFailure
from .problem import ProblemInstance, capacity, check_feasibility
from .sensing import posterior_occupied_given_occupied, posterior_occupied_given_vacant, sample_profile
from .solver import SolverOptions, kkt_residuals, solve
from .spectral import PowerConstraintSet, PuBand, aci_power_cap, band_leakage, cci_power_cap

__all__ = [
    "STREAM_SENSING",
    "STREAM_CHANNEL",
    "STREAM_FADING",
    "trial_seed",
    "Trial",
    "build_trial",
    "TrialResult",
    "solve_trial",
    "sweep_trials",
    "run_solve",
    "run_sweep",
    "compare_trials",
    "run_baseline_comparison",
    "random_instance",
    "run_validate",
    "SWEEP_COLUMNS",
    "COMPARE_COLUMNS",
    "VALIDATE_COLUMNS",
]

STREAM_SENSING, STREAM_CHANNEL, STREAM_FADING, STREAM_VALIDATE = 0, 1, 2, 3

SWEEP_COLUMNS = ("value", "mean_ee", "mean_rate", "mean_n_q", "infeasible_fraction")
COMPARE_COLUMNS = (
    "value", "interference_aware", "interference_naive", "ee_aware", "ee_naive",
    "rate_aware", "rate_naive", "compliance_aware", "compliance_naive", "cci_active_fraction",
)
VALIDATE_COLUMNS = (
    "instance", "n", "mmse", "rate_floor", "ee_solver", "ee_oracle", "rel_gap",
    "stationarity", "primal", "slackness", "case_id", "active_agree", "pass",
)


def trial_seed(seed: int, trial: int, stream: int) -> int:
    """128-bit integer key for the Philox stream of (seed, trial, stream)."""
    words = np.random.SeedSequence([seed, trial, stream]).generate_state(2, dtype=np.uint64)
    return int(words[0]) << 64 | int(words[1])


@dataclass(frozen=True)
class _Geometry:
    g_su: float
    g_l: float
    g_m: float
    leakage: np.ndarray
    interference: np.ndarray
    bands: tuple
    m_band: PuBand


@functools.lru_cache(maxsize=32)
def _geometry(cfg: ScenarioConfig) -> _Geometry:
    model = PathLossModel(cfg.ref_distance, cfg.exponent, cfg.wavelength)
    g_su, g_l, g_m = (path_loss(model, d) for d in (cfg.d_su, cfg.d_l, cfg.d_m))
    n, df = cfg.n_subcarriers, cfg.delta_f
    centres = (np.arange(n) - (n - 1) / 2.0) * df
    edge = n * df / 2.0 + cfg.pu_guard
    bands = []
    for k in range(cfg.n_pu):
        # Alternate right/left of the SU band, stacking outwards.
        tier = k // 2
        side = 1.0 if k % 2 == 0 else -1.0
        centre = side * (edge + (tier + 0.5) * cfg.pu_bandwidth)
        bands.append(PuBand(centre - centres, cfg.pu_bandwidth, cfg.p_th_l, cfg.psi_th_l,
                            cfg.nu_l, g_l, cfg.pu_power))
    leakage = np.array([band_leakage(b, cfg.ts) for b in bands]).reshape(cfg.n_pu, n)
    if cfg.interference is not None:
        interference = np.full(n, cfg.interference)
    else:
        interference = pu_interference(bands, n, df, cfg.ts)
    m_band = PuBand(np.zeros(n), n * df, cfg.p_th_m, cfg.psi_th_m, cfg.nu_m, g_m)
    return _Geometry(g_su, g_l, g_m, leakage, interference, tuple(bands), m_band)


def default_mmse(cfg: ScenarioConfig) -> float:
    if cfg.mmse is not None:
        return cfg.mmse
    g = _geometry(cfg).g_su
    return estimate_mmse(cfg.n_ch, cfg.sigma_h2, cfg.noise, g, cfg.pilot_power)


@dataclass(frozen=True)
class Trial:
    instance: ProblemInstance
    beta_ov: float
    beta_oo: tuple
    cci_statistical: bool  # statistical CCI term (not the hardware limit) sets total_cap
    m_band: PuBand


def build_trial(cfg: ScenarioConfig, trial: int, *, perfect_sensing: bool = False,
                capacity_mmse: float | None = None) -> Trial:
    """Instance for trial ``trial``.

    ``perfect_sensing`` solves with beta_ov = 0 and beta_oo = 1 (the baseline
    that ignores sensing errors). ``capacity_mmse`` changes the error variance
    in the rate expression while keeping the drawn channel estimate fixed.
    """
    geo = _geometry(cfg)
    profiles = sample_profile(trial_seed(cfg.seed, trial, STREAM_SENSING), 1 + cfg.n_pu)
    if perfect_sensing:
        beta_ov, beta_oo = 0.0, (1.0,) * cfg.n_pu
    else:
        beta_ov = posterior_occupied_given_vacant(profiles[0])
        beta_oo = tuple(posterior_occupied_given_occupied(p) for p in profiles[1:])
    total_cap = cci_power_cap(beta_ov, geo.m_band, cfg.p_th)
    aci = np.array([aci_power_cap(b, band) for b, band in zip(beta_oo, geo.bands)])
    cons = PowerConstraintSet(total_cap, aci, geo.leakage, cfg.r_th)
    mmse = default_mmse(cfg)
    chan = draw_realization(trial_seed(cfg.seed, trial, STREAM_CHANNEL), cfg.n_subcarriers, cfg.n_ch,
                            cfg.sigma_h2, mmse, geo.g_su, cfg.noise, interference=geo.interference)
    if capacity_mmse is not None:
        chan = chan.with_mmse(capacity_mmse)
    inst = ProblemInstance(chan, cons, cfg.kappa, cfg.p_c, cfg.delta_f)
    return Trial(inst, beta_ov, beta_oo, total_cap < cfg.p_th, geo.m_band)


@dataclass(frozen=True)
class TrialResult:
    ee: float
    rate: float
    n_q: int
    case_id: int
    feasible: bool
    total_power: float
    c1_active: bool
    powers: np.ndarray


def _options(cfg: ScenarioConfig, backend=None) -> SolverOptions:
    return SolverOptions(delta=cfg.delta, backend=backend)


def solve_trial(trial: Trial, options: SolverOptions) -> TrialResult:
    trace = solve(trial.instance, options)
    alloc = trace.final
    c1_active = False
    if trace.feasible:
        c1_active = check_feasibility(trial.instance, alloc.powers, 1e-6).c1.value == "active"
    return TrialResult(
        ee=trace.final_ee if trace.feasible else math.inf,
        rate=trace.final_rate,
        n_q=trace.n_q,
        case_id=alloc.case_id,
        feasible=trace.feasible,
        total_power=alloc.total_power,
        c1_active=c1_active,
        powers=alloc.powers,
    )


def _sweep_config(cfg: ScenarioConfig, variable: str, value: float):
    if variable == "cci_threshold":
        return cfg.replace(p_th_m=value), None
    if variable == "rate_floor":
        return cfg.replace(r_th=value), None
    return cfg, value


def sweep_trials(cfg: ScenarioConfig, sweep: SweepSpec, *, perfect_sensing: bool = False,
                 capacity_mmse: float | None = None, backend=None) -> list[list[TrialResult]]:
    """Per-trial results, indexed ``[grid_index][trial]``.

    ``capacity_mmse`` fixes the error variance in the rate expression for a
    non-mmse sweep while leaving the drawn estimate unchanged.
    """
    out = []
    options = _options(cfg, backend)
    for value in sweep.grid:
        point_cfg, cap_mmse = _sweep_config(cfg, sweep.variable, value)
        if cap_mmse is None:
            cap_mmse = capacity_mmse
        out.append([
            solve_trial(build_trial(point_cfg, t, perfect_sensing=perfect_sensing, capacity_mmse=cap_mmse),
                        options)
            for t in range(cfg.trials)
        ])
    return out


def run_solve(cfg: ScenarioConfig, backend=None) -> dict:
    """Solve trial 0 of ``cfg`` and return the record."""
    res = solve_trial(build_trial(cfg, 0), _options(cfg, backend))
    return {
        "ee": res.ee,
        "rate": res.rate,
        "n_q": res.n_q,
        "case_id": res.case_id,
        "feasible": res.feasible,
        "total_power": res.total_power,
        "powers": res.powers,
    }


def _mean(values):
    values = [v for v in values if math.isfinite(v)]
    return float(np.mean(values)) if values else None


def run_sweep(cfg: ScenarioConfig, sweep: SweepSpec, backend=None) -> list[dict]:
    rows = []
    for value, results in zip(sweep.grid, sweep_trials(cfg, sweep, backend=backend)):
        feas = [r for r in results if r.feasible]
        rows.append({
            "value": value,
            "mean_ee": _mean([r.ee for r in feas]),
            "mean_rate": _mean([r.rate for r in feas]) if feas else None,
            "mean_n_q": float(np.mean([r.n_q for r in results])),
            "infeasible_fraction": 1.0 - len(feas) / len(results),
        })
    return rows


@dataclass(frozen=True)
class CompareResult:
    aware: list  # [grid][trial] TrialResult
    naive: list
    beta_ov_true: np.ndarray  # [grid][trial]
    cci_statistical: np.ndarray  # [grid][trial], aware arm's statistical CCI cap sets total_cap
    fading: np.ndarray  # [trial][draw], exponential |H_sp|^2 samples
    g_m: np.ndarray  # [grid]
    threshold: np.ndarray  # [grid]


def compare_trials(cfg: ScenarioConfig, sweep: SweepSpec, draws: int = 100, backend=None) -> CompareResult:
    """Solve every trial twice: with the true sensing posteriors and assuming perfect sensing.

    Both arms see the same channel; ``draws`` exponential cross-link gains per
    trial (shared by both arms and all grid points) give the interference at
    the mis-detected PU.
    """
    options = _options(cfg, backend)
    aware, naive, betas, stat = [], [], [], []
    g_m, thresholds = [], []
    for value in sweep.grid:
        point_cfg, cap_mmse = _sweep_config(cfg, sweep.variable, value)
        row_a, row_n, row_b, row_s = [], [], [], []
        for t in range(cfg.trials):
            tr = build_trial(point_cfg, t, capacity_mmse=cap_mmse)
            tn = build_trial(point_cfg, t, perfect_sensing=True, capacity_mmse=cap_mmse)
            row_a.append(solve_trial(tr, options))
            row_n.append(solve_trial(tn, options))
            row_b.append(tr.beta_ov)
            row_s.append(tr.cci_statistical)
        aware.append(row_a)
        naive.append(row_n)
        betas.append(row_b)
        stat.append(row_s)
        geo = _geometry(point_cfg)
        g_m.append(geo.g_m)
        thresholds.append(point_cfg.p_th_m)
    fading = np.empty((cfg.trials, draws))
    for t in range(cfg.trials):
        rng = np.random.Generator(np.random.Philox(trial_seed(cfg.seed, t, STREAM_FADING)))
        fading[t] = rng.exponential(1.0 / cfg.nu_m, size=draws)
    return CompareResult(aware, naive, np.array(betas), np.array(stat), fading, np.array(g_m),
                         np.array(thresholds))


def interference_samples(result: CompareResult, arm: str, k: int) -> np.ndarray:
    """CCI at the mis-detected PU, shape [trial][draw], for grid point ``k``."""
    rows = result.aware if arm == "aware" else result.naive
    totals = np.array([r.total_power for r in rows[k]])
    beta = result.beta_ov_true[k]
    return beta[:, None] * result.fading * result.g_m[k] * totals[:, None]


def run_baseline_comparison(cfg: ScenarioConfig, sweep: SweepSpec, draws: int = 100, backend=None) -> list[dict]:
    res = compare_trials(cfg, sweep, draws, backend)
    rows = []
    for k, value in enumerate(sweep.grid):
        ia = interference_samples(res, "aware", k)
        inv = interference_samples(res, "naive", k)
        thr = res.threshold[k]
        rows.append({
            "value": value,
            "interference_aware": float(ia.mean()),
            "interference_naive": float(inv.mean()),
            "ee_aware": _mean([r.ee for r in res.aware[k]]),
            "ee_naive": _mean([r.ee for r in res.naive[k]]),
            "rate_aware": float(np.mean([r.rate for r in res.aware[k]])),
            "rate_naive": float(np.mean([r.rate for r in res.naive[k]])),
            "compliance_aware": float(np.mean(ia <= thr)),
            "compliance_naive": float(np.mean(inv <= thr)),
            "cci_active_fraction": float(np.mean([
                s and r.c1_active for s, r in zip(res.cci_statistical[k], res.aware[k])
            ])),
        })
    return rows


# -- validation --------------------------------------------------------------

def random_instance(rng: np.random.Generator, n: int, mmse: float, binding_rate: bool = False) -> ProblemInstance:
    """Small random instance in the physical units of the default scenario.

    Caps are drawn log-uniformly so that cap-bound and cap-free optima both
    occur. With ``binding_rate`` the rate floor is placed between the rate of
    the floor-free optimum and the largest rate the caps allow, so it is both
    feasible and binding whenever that interval is non-empty.
    """
    from .channel import ChannelRealization
    from .solver import solve_inner

    g = path_loss(PathLossModel(), 1000.0)
    gain = rng.exponential(1.0, n) + 0.05
    interference = 4e-16 * rng.uniform(0.0, 0.5, n)
    chan = ChannelRealization(gain, mmse, g, 4e-16, interference)
    leak = rng.uniform(0.0, 0.3, (1, n))
    total_cap = 10 ** rng.uniform(-3.0, 0.3)
    aci_cap = 10 ** rng.uniform(-3.5, -0.5)
    cons = PowerConstraintSet(total_cap, np.array([aci_cap]), leak, 0.0)
    inst = ProblemInstance(chan, cons, 7.8, 2.0 * n / 128, 1.25e6 / 128)
    if binding_rate:
        base = solve(inst)
        # A price far above any EE makes the inner solve a capped rate maximiser.
        r_max = capacity(inst, solve_inner(inst, 1e3 * base.final_ee).powers)
        if base.feasible and r_max > base.final_rate * 1.02:
            floor = base.final_rate + rng.uniform(0.3, 0.7) * (r_max - base.final_rate)
            inst = inst.with_constraints(rate_floor=floor)
    return inst


def run_validate(cfg: ScenarioConfig, instance_count: int, n: int = 4, backend=None) -> list[dict]:
    """Cross-check the KKT solver against the reference oracle on random instances.

    Returns one row per instance; raises ValidationFailure if any fails.
    """
    from .oracle import oracle_ee

    if instance_count < 1:
        raise ValueError("instance_count must be >= 1")
    options = _options(cfg, backend)
    rows, failures = [], []
    mmses = (0.0, 0.05, 0.1)
    for k in range(instance_count):
        rng = np.random.Generator(np.random.Philox(trial_seed(cfg.seed, k, STREAM_VALIDATE)))
        inst = random_instance(rng, n, mmses[k % 3], binding_rate=bool(k % 2))
        trace = solve(inst, options)
        orc = oracle_ee(inst)
        gap = abs(trace.final_ee - orc.objective) / orc.objective
        res = kkt_residuals(inst, trace.final)
        act_s = check_feasibility(inst, trace.final.powers, 1e-6).active
        act_o = check_feasibility(inst, orc.powers, 1e-6).active
        ok = (
            gap <= 1e-6
            and res["stationarity"] <= 1e-6
            and res["primal"] <= 1e-9
            and res["slackness"] <= 1e-8
            and act_s == act_o
        )
        row = {
            "instance": k,
            "n": n,
            "mmse": inst.channel.mmse,
            "rate_floor": inst.constraints.rate_floor,
            "ee_solver": trace.final_ee,
            "ee_oracle": orc.objective,
            "rel_gap": gap,
            "stationarity": res["stationarity"],
            "primal": res["primal"],
            "slackness": res["slackness"],
            "case_id": trace.final.case_id,
            "active_agree": int(act_s == act_o),
            "pass": int(ok),
        }
        rows.append(row)
        if not ok:
            failures.append(row)
    if failures:
        raise ValidationFailure(f"{len(failures)} of {instance_count} instances failed", failures, rows)
    return rows
