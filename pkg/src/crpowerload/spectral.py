"""Spectral leakage weights and the closed-form interference power caps.

The caps turn the probabilistic interference constraints into deterministic
linear constraints on the secondary user's powers: with an exponentially
distributed cross-link gain of mean ``1/nu``, requiring

    Pr(beta * |H|^2 * G * P <= P_th) >= Psi

is the same as ``P <= nu * P_th / (beta * G * -ln(1 - Psi))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .errors import ZeroPosterior

__all__ = [
    "PuBand",
    "PowerConstraintSet",
    "leakage_factor",
    "band_leakage",
    "sinc2_integral",
    "cci_power_cap",
    "aci_power_cap",
    "empirical_violation_rate",
]

QUAD_ABS_TOL = 1e-10
# Bands wider than this many main-lobe widths use the sine-integral antiderivative.
WIDE_BAND_LOBES = 16.0


@dataclass(frozen=True)
class PuBand:
    """A primary-user band as seen from the secondary transmitter.

    ``center_offsets`` holds the spectral distance (Hz) from every SU
    subcarrier to the band centre. ``power`` is the PU signal variance, used
    only for the PU-to-SU interference floor.
    """

    center_offsets: np.ndarray
    bandwidth: float
    threshold: float
    confidence: float
    fading_rate: float = 1.0
    path_loss: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center_offsets", np.asarray(self.center_offsets, dtype=float))
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if not self.fading_rate > 0:
            raise ValueError("fading_rate must be > 0")
        if not self.path_loss > 0:
            raise ValueError("path_loss must be > 0")
        if self.power < 0:
            raise ValueError("power must be >= 0")


@dataclass(frozen=True)
class PowerConstraintSet:
    """Deterministic constraint data for one optimisation instance.

    total_cap : right side of the total-power / CCI constraint (W)
    aci_caps : shape (L,), right sides of the ACI constraints (W)
    leakage : shape (L, N), leakage weight of every subcarrier into every PU band
    rate_floor : minimum rate (bit/s)
    """

    total_cap: float
    aci_caps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    leakage: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    rate_floor: float = 0.0

    def __post_init__(self):
        aci = np.atleast_1d(np.asarray(self.aci_caps, dtype=float))
        leak = np.asarray(self.leakage, dtype=float)
        if leak.ndim == 1:
            leak = leak[None, :]
        if aci.size == 0:
            leak = leak.reshape(0, leak.shape[-1] if leak.ndim == 2 else 0)
        object.__setattr__(self, "aci_caps", aci)
        object.__setattr__(self, "leakage", leak)
        if not self.total_cap > 0:
            raise ValueError("total_cap must be > 0")
        if aci.shape[0] != leak.shape[0]:
            raise ValueError("one leakage row per ACI cap required")
        if np.any(aci <= 0):
            raise ValueError("aci_caps must be > 0")
        if np.any(leak < 0) or np.any(leak > 1):
            raise ValueError("leakage weights must lie in [0, 1]")
        if self.rate_floor < 0:
            raise ValueError("rate_floor must be >= 0")

    @property
    def n_pu(self) -> int:
        return self.aci_caps.shape[0]


def _sinc2_antiderivative(x):
    # d/dx [Si(2 pi x)/pi - sin^2(pi x)/(pi^2 x)] = sinc^2(x); odd, zero at 0.
    x = np.asarray(x, dtype=float)
    si, _ = sici(2.0 * np.pi * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(x == 0.0, 0.0, np.sin(np.pi * x) ** 2 / (np.pi**2 * x))
    out = si / np.pi - tail
    return np.where(np.isinf(x), np.sign(x) * 0.5, out)


def _adaptive_simpson(f, a, b, tol):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    total = 0.0
    stack = [(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= 50 or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


def _sinc2(x):
    return float(np.sinc(x)) ** 2


def sinc2_integral(lo: float, hi: float, tol: float = QUAD_ABS_TOL) -> float:
    """Integral of sinc^2(x) over [lo, hi] in normalised frequency (x = Ts*f)."""
    if hi <= lo:
        return 0.0
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo > WIDE_BAND_LOBES:
        return float(_sinc2_antiderivative(hi) - _sinc2_antiderivative(lo))
    # Split at integer nulls so every Simpson panel sees a single lobe.
    cuts = [lo] + [float(k) for k in range(math.floor(lo) + 1, math.ceil(hi))] + [hi]
    tol_each = tol / max(len(cuts) - 1, 1)
    return sum(_adaptive_simpson(_sinc2, a, b, tol_each) for a, b in zip(cuts[:-1], cuts[1:]))


def leakage_factor(f_offset: float, bandwidth: float, ts: float) -> float:
    """Fraction of a subcarrier's power that falls into a band.

    Integrates ``ts * sinc^2(ts * f)`` over ``[f_offset - B/2, f_offset + B/2]``.
    """
    if ts <= 0:
        raise ValueError("ts must be > 0")
    if bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    if bandwidth == 0:
        return 0.0
    lo = ts * (f_offset - 0.5 * bandwidth)
    hi = ts * (f_offset + 0.5 * bandwidth)
    return min(max(sinc2_integral(lo, hi), 0.0), 1.0)


def band_leakage(band: PuBand, ts: float) -> np.ndarray:
    """Leakage weights of every subcarrier into ``band``."""
    return np.array([leakage_factor(f, band.bandwidth, ts) for f in band.center_offsets])


def _statistical_cap(beta, band: PuBand):
    return band.fading_rate * band.threshold / (beta * band.path_loss * -math.log1p(-band.confidence))


def cci_power_cap(beta_ov: float, band: PuBand, hardware_cap: float) -> float:
    """Total-power cap: min of the hardware limit and the statistical CCI cap.

    ``beta_ov == 0`` (no mis-detection risk) leaves the hardware limit.
    """
    if beta_ov < 0:
        raise ValueError("beta_ov must be >= 0")
    if not hardware_cap > 0:
        raise ValueError("hardware_cap must be > 0")
    if beta_ov == 0:
        return float(hardware_cap)
    return float(min(hardware_cap, _statistical_cap(beta_ov, band)))


def aci_power_cap(beta_oo: float, band: PuBand) -> float:
    """Cap on the leakage-weighted power sum into an occupied band."""
    if beta_oo < 0:
        raise ValueError("beta_oo must be >= 0")
    if beta_oo == 0:
        raise ZeroPosterior("beta_oo = 0 leaves the ACI constraint unbounded; drop it explicitly")
    return float(_statistical_cap(beta_oo, band))


def empirical_violation_rate(allocation_total, band: PuBand, beta: float, draws: int, rng_seed: int) -> float:
    """Monte Carlo estimate of Pr(beta * |H|^2 * G * P <= threshold).

    Despite the name this is the *compliance* fraction, the quantity the
    confidence level ``band.confidence`` lower-bounds. ``allocation_total``
    may be a scalar or an array of per-trial totals; each draw uses one
    fading sample per total.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    totals = np.atleast_1d(np.asarray(allocation_total, dtype=float))
    rng = np.random.Generator(np.random.Philox(rng_seed))
    gains = rng.exponential(1.0 / band.fading_rate, size=(draws, totals.size))
    interference = beta * gains * band.path_loss * totals[None, :]
    return float(np.mean(interference <= band.threshold))
