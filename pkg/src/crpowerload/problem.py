"""Energy-efficiency problem instance: rate, EE ratio, parametric objective."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .errors import ZeroRate
from .spectral import PowerConstraintSet

__all__ = [
    "ProblemInstance",
    "Allocation",
    "Status",
    "FeasibilityReport",
    "capacity",
    "capacity_gradient",
    "energy_efficiency",
    "parametric_objective",
    "check_feasibility",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ProblemInstance:
    """Everything the power-loading solver needs for one realisation."""

    channel: ChannelRealization
    constraints: PowerConstraintSet
    kappa: float = 7.8
    p_c: float = 2.0
    delta_f: float = 1.25e6 / 128

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        if not self.p_c > 0:
            raise ValueError("p_c must be > 0")
        if not self.delta_f > 0:
            raise ValueError("delta_f must be > 0")
        leak = self.constraints.leakage
        if leak.shape[0] and leak.shape[1] != self.channel.n:
            raise ValueError("leakage rows must have one entry per subcarrier")

    @property
    def n(self) -> int:
        return self.channel.n

    @property
    def signal_gain(self) -> np.ndarray:
        """|H_hat|^2 * G."""
        return self.channel.est_gain * self.channel.path_loss

    @property
    def error_gain(self) -> float:
        """sigma_dH^2 * G, the power-proportional self-noise factor."""
        return self.channel.mmse * self.channel.path_loss

    @property
    def noise_floor(self) -> np.ndarray:
        """sigma_n^2 + J_i."""
        return self.channel.noise + self.channel.pu_interference

    def with_constraints(self, **changes) -> "ProblemInstance":
        c = self.constraints
        fields = dict(total_cap=c.total_cap, aci_caps=c.aci_caps, leakage=c.leakage, rate_floor=c.rate_floor)
        fields.update(changes)
        return ProblemInstance(self.channel, PowerConstraintSet(**fields), self.kappa, self.p_c, self.delta_f)


@dataclass
class Allocation:
    powers: np.ndarray
    lambda1: float = 0.0
    lambda2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambda3: float = 0.0
    case_id: int = 1
    feasible: bool = True
    q: float = 0.0

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers))


def _sinr(instance: ProblemInstance, powers):
    p = np.asarray(powers, dtype=float)
    return instance.signal_gain * p / (instance.error_gain * p + instance.noise_floor)


def capacity(instance: ProblemInstance, powers) -> float:
    """SU rate in bit/s under imperfect CSI."""
    return float(instance.delta_f * np.sum(np.log1p(_sinr(instance, powers))) / LN2)


def capacity_gradient(instance: ProblemInstance, powers) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    a, b, d = instance.signal_gain, instance.error_gain, instance.noise_floor
    return instance.delta_f / LN2 * a * d / (((a + b) * p + d) * (b * p + d))


def energy_efficiency(instance: ProblemInstance, powers) -> float:
    """Energy per delivered bit (J/bit); lower is better."""
    rate = capacity(instance, powers)
    if rate <= 0.0:
        raise ZeroRate("energy efficiency undefined at zero rate")
    return (instance.kappa * float(np.sum(powers)) + instance.p_c) / rate


def parametric_objective(instance: ProblemInstance, powers, q: float) -> float:
    """kappa * sum(p) + p_c - q * c(p)."""
    return instance.kappa * float(np.sum(powers)) + instance.p_c - q * capacity(instance, powers)


class Status(enum.Enum):
    SATISFIED = "satisfied"
    ACTIVE = "active"
    VIOLATED = "violated"


@dataclass(frozen=True)
class FeasibilityReport:
    c1: Status
    c2: tuple
    c3: Status

    @property
    def feasible(self) -> bool:
        return all(s is not Status.VIOLATED for s in (self.c1, self.c3, *self.c2))

    @property
    def active(self) -> tuple:
        """(C1 active, any C2 active, C3 active)."""
        return (
            self.c1 is Status.ACTIVE,
            any(s is Status.ACTIVE for s in self.c2),
            self.c3 is Status.ACTIVE,
        )


def _upper(value, cap, tol):
    if value > cap * (1.0 + tol):
        return Status.VIOLATED
    if value >= cap * (1.0 - tol):
        return Status.ACTIVE
    return Status.SATISFIED


def check_feasibility(instance: ProblemInstance, powers, tol: float = 1e-9) -> FeasibilityReport:
    """Classify each constraint as satisfied, active (within ``tol``) or violated."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    p = np.asarray(powers, dtype=float)
    cons = instance.constraints
    c1 = _upper(float(np.sum(p)), cons.total_cap, tol)
    c2 = tuple(_upper(float(row @ p), cap, tol) for row, cap in zip(cons.leakage, cons.aci_caps))
    rate = capacity(instance, p)
    floor = cons.rate_floor
    if floor <= 0.0:
        c3 = Status.SATISFIED
    elif rate < floor * (1.0 - tol):
        c3 = Status.VIOLATED
    elif rate <= floor * (1.0 + tol):
        c3 = Status.ACTIVE
    else:
        c3 = Status.SATISFIED
    return FeasibilityReport(c1, c2, c3)
