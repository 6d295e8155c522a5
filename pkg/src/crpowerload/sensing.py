"""Sensing error statistics and the posterior occupancy probabilities they imply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfile

__all__ = [
    "SensingProfile",
    "posterior_occupied_given_vacant",
    "posterior_occupied_given_occupied",
    "sample_profile",
    "PERFECT_SENSING",
]


@dataclass(frozen=True)
class SensingProfile:
    """Per-band sensing error model.

    Attributes
    ----------
    rho_md : float
        Mis-detection probability (occupied band reported vacant).
    rho_fa : float
        False-alarm probability (vacant band reported occupied).
    rho : float
        Prior probability that the primary user transmits in the band.
    """

    rho_md: float
    rho_fa: float
    rho: float

    def __post_init__(self):
        for name in ("rho_md", "rho_fa", "rho"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name}={value!r} outside [0, 1]")
        if self.rho_md * self.rho == 0.0 and (1.0 - self.rho_fa) * (1.0 - self.rho) == 0.0:
            raise DegenerateProfile(f"vacant-verdict posterior undefined for {self}")
        if (1.0 - self.rho_md) * self.rho == 0.0 and self.rho_fa * (1.0 - self.rho) == 0.0:
            raise DegenerateProfile(f"occupied-verdict posterior undefined for {self}")


# rho_fa = 0 and rho = 1/2 keeps both denominators non-zero.
PERFECT_SENSING = SensingProfile(rho_md=0.0, rho_fa=0.0, rho=0.5)


def posterior_occupied_given_vacant(profile: SensingProfile) -> float:
    """Probability the band is occupied although sensing declared it vacant."""
    num = profile.rho_md * profile.rho
    den = num + (1.0 - profile.rho_fa) * (1.0 - profile.rho)
    if den == 0.0:
        raise DegenerateProfile(str(profile))
    return num / den


def posterior_occupied_given_occupied(profile: SensingProfile) -> float:
    """Probability the band is occupied given an occupied verdict."""
    num = (1.0 - profile.rho_md) * profile.rho
    den = num + profile.rho_fa * (1.0 - profile.rho)
    if den == 0.0:
        raise DegenerateProfile(str(profile))
    return num / den


def sample_profile(rng_seed: int, band_count: int) -> list[SensingProfile]:
    """Draw independent sensing profiles for ``band_count`` bands.

    rho_md ~ U[0.01, 0.05], rho_fa ~ U[0.01, 0.1], rho ~ U[0, 1]. The draw is
    a pure function of ``rng_seed``.
    """
    if band_count < 1:
        raise ValueError("band_count must be >= 1")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    draws = rng.random((band_count, 3))
    md = 0.01 + 0.04 * draws[:, 0]
    fa = 0.01 + 0.09 * draws[:, 1]
    rho = draws[:, 2]
    return [SensingProfile(float(a), float(b), float(c)) for a, b, c in zip(md, fa, rho)]
