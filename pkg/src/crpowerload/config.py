"""Scenario configuration: defaults, ``key = value`` files and overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

__all__ = ["ScenarioConfig", "SweepSpec", "load_config", "parse_config_text", "SWEEP_VARIABLES"]

SWEEP_VARIABLES = ("cci_threshold", "rate_floor", "mmse")


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and run parameters of one experiment.

    ``mmse`` left unset means the estimation error follows from the pilot
    power through the closed-form LMMSE expression. ``interference`` left
    unset means the PU floor is computed per subcarrier from the band layout.
    """

    n_subcarriers: int = 128
    delta_f: float = 1.25e6 / 128
    d_su: float = 1000.0
    d_l: float = 1200.0
    d_m: float = 1500.0
    ref_distance: float = 100.0
    exponent: float = 4.0
    wavelength: float = 0.33
    n_ch: int = 5
    sigma_h2: float = 1.0 / 6.0
    noise: float = 4e-16
    pu_power: float = 4e-16
    pu_bandwidth: float = 1.25e6
    pu_guard: float = 0.0
    n_pu: int = 1
    p_c: float = 2.0
    p_th: float = 2.0
    kappa: float = 7.8
    delta: float = 1e-8
    psi_th_m: float = 0.9
    psi_th_l: float = 0.9
    p_th_m: float = 1e-13
    p_th_l: float = 1e-13
    nu_m: float = 1.0
    nu_l: float = 1.0
    r_th: float = 0.0
    mmse: float | None = None
    pilot_power: float = 0.1
    interference: float | None = None
    trials: int = 200
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.n_subcarriers >= 1, "n_subcarriers must be >= 1"),
            (self.delta_f > 0, "delta_f must be > 0"),
            (min(self.d_su, self.d_l, self.d_m) >= self.ref_distance, "distances must be >= ref_distance"),
            (self.ref_distance > 0 and self.wavelength > 0, "ref_distance and wavelength must be > 0"),
            (self.exponent >= 2, "exponent must be >= 2"),
            (self.n_ch >= 0, "n_ch must be >= 0"),
            (self.sigma_h2 > 0, "sigma_h2 must be > 0"),
            (self.noise > 0, "noise must be > 0"),
            (self.pu_power >= 0, "pu_power must be >= 0"),
            (self.pu_bandwidth > 0, "pu_bandwidth must be > 0"),
            (self.pu_guard >= 0, "pu_guard must be >= 0"),
            (self.n_pu >= 0, "n_pu must be >= 0"),
            (self.p_c > 0 and self.p_th > 0 and self.kappa > 0, "p_c, p_th, kappa must be > 0"),
            (self.delta > 0, "delta must be > 0"),
            (0 < self.psi_th_m < 1 and 0 < self.psi_th_l < 1, "psi_th must lie in (0, 1)"),
            (self.p_th_m > 0 and self.p_th_l > 0, "interference thresholds must be > 0"),
            (self.nu_m > 0 and self.nu_l > 0, "nu must be > 0"),
            (self.r_th >= 0, "r_th must be >= 0"),
            (self.mmse is None or self.mmse >= 0, "mmse must be >= 0"),
            (self.pilot_power >= 0, "pilot_power must be >= 0"),
            (self.interference is None or self.interference >= 0, "interference must be >= 0"),
            (self.trials >= 1, "trials must be >= 1"),
            (self.seed >= 0, "seed must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite")

    @property
    def ts(self) -> float:
        return 1.0 / self.delta_f

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: tuple

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ConfigError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)


_FIELD_TYPES = {
    "n_subcarriers": int, "n_ch": int, "n_pu": int, "trials": int, "seed": int,
    "mmse": "optional", "interference": "optional",
}


def _coerce(key, raw: str):
    kind = _FIELD_TYPES.get(key, float)
    text = raw.strip()
    try:
        if kind == "optional":
            return None if text.lower() in ("", "none") else float(text)
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    known = {f.name for f in fields(ScenarioConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | Path | None = None, **overrides) -> ScenarioConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
