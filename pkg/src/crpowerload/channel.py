"""SU link fading, estimation error and the PU-to-SU interference floor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DistanceBelowReference
from .spectral import PuBand, leakage_factor

__all__ = [
    "PathLossModel",
    "ChannelRealization",
    "path_loss",
    "estimate_mmse",
    "draw_realization",
    "pu_interference",
]


@dataclass(frozen=True)
class PathLossModel:
    reference_distance: float = 100.0
    exponent: float = 4.0
    wavelength: float = 0.33

    def __post_init__(self):
        if not (self.reference_distance > 0 and self.wavelength > 0):
            raise ValueError("reference_distance and wavelength must be > 0")
        if not self.exponent >= 2:
            raise ValueError("path-loss exponent must be >= 2")


@dataclass(frozen=True)
class ChannelRealization:
    """One SU link realisation as the transmitter sees it.

    est_gain : |H_hat_i|^2 per subcarrier (before path loss)
    mmse : variance of the channel estimation error
    path_loss : SU link distance attenuation G
    noise : receiver noise power (W)
    pu_interference : J_i per subcarrier (W)
    """

    est_gain: np.ndarray
    mmse: float
    path_loss: float
    noise: float
    pu_interference: np.ndarray

    def __post_init__(self):
        gain = np.asarray(self.est_gain, dtype=float)
        interf = np.broadcast_to(np.asarray(self.pu_interference, dtype=float), gain.shape).copy()
        object.__setattr__(self, "est_gain", gain)
        object.__setattr__(self, "pu_interference", interf)
        if gain.ndim != 1 or gain.size == 0:
            raise ValueError("est_gain must be a non-empty vector")
        if not (np.all(np.isfinite(gain)) and np.all(gain >= 0)):
            raise ValueError("est_gain must be finite and >= 0")
        if not (np.all(np.isfinite(interf)) and np.all(interf >= 0)):
            raise ValueError("pu_interference must be finite and >= 0")
        if not (math.isfinite(self.mmse) and self.mmse >= 0):
            raise ValueError("mmse must be finite and >= 0")
        if not self.path_loss > 0:
            raise ValueError("path_loss must be > 0")
        if not self.noise > 0:
            raise ValueError("noise must be > 0")

    @property
    def n(self) -> int:
        return self.est_gain.size

    def with_mmse(self, mmse: float) -> "ChannelRealization":
        """Same estimate, different error variance (used by mmse sweeps)."""
        return ChannelRealization(self.est_gain, mmse, self.path_loss, self.noise, self.pu_interference)


def path_loss(model: PathLossModel, distance: float) -> float:
    """Log-distance path loss anchored at free space at the reference distance."""
    if distance < model.reference_distance:
        raise DistanceBelowReference(
            f"distance {distance} m below reference {model.reference_distance} m"
        )
    free_space = (model.wavelength / (4.0 * math.pi * model.reference_distance)) ** 2
    return free_space * (model.reference_distance / distance) ** model.exponent


def estimate_mmse(n_ch: int, sigma_h2: float, sigma_n2: float, G: float, p_pilots: float) -> float:
    """Closed-form MMSE of the LMMSE channel estimate."""
    if sigma_n2 <= 0:
        raise ValueError("sigma_n2 must be > 0")
    if min(n_ch, sigma_h2, G, p_pilots) < 0:
        raise ValueError("inputs must be non-negative")
    if math.isinf(p_pilots):
        return 0.0
    return (n_ch + 1) * sigma_h2 * sigma_n2 / (sigma_n2 + sigma_h2 * G * p_pilots)


def _complex_normal(rng, size, variance):
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def pu_interference(pu_bands: Sequence[PuBand], n: int, delta_f: float, ts: float) -> np.ndarray:
    """PU-to-SU interference power captured by every subcarrier's DFT window.

    The PU spectrum is flat over its band. A subcarrier's rectangular window
    has power response sinc^2(ts * (f - f_i)), so the captured share of the
    PU power is ``leakage_factor(offset, B, ts) / (B * ts)``.
    """
    del delta_f  # window width follows from ts; kept for signature symmetry
    out = np.zeros(n)
    for band in pu_bands:
        if band.power == 0.0:
            continue
        if band.center_offsets.size != n:
            raise ValueError("band offsets must have one entry per subcarrier")
        share = np.array([leakage_factor(f, band.bandwidth, ts) for f in band.center_offsets])
        out += band.power * share / (band.bandwidth * ts)
    return out


def draw_realization(
    rng_seed: int,
    n: int,
    n_ch: int,
    sigma_h2: float,
    mmse: float,
    path_loss: float,
    noise: float,
    pu_bands: Sequence[PuBand] = (),
    ts: float | None = None,
    interference=None,
) -> ChannelRealization:
    """Draw a Rayleigh multipath channel and its imperfect estimate.

    ``n_ch + 1`` complex Gaussian taps are mapped to ``n`` subcarriers by the
    unscaled DFT (sqrt(N) times the unitary one). The estimate is the true
    response plus independent complex Gaussian error of variance ``mmse``.
    The unit-variance error draw is taken even when ``mmse == 0`` so a seed
    yields the same taps and error direction for every ``mmse``.

    ``interference`` overrides the computed PU floor (scalar or per
    subcarrier); otherwise it is computed from ``pu_bands`` with ``ts``.
    """
    if n < 1 or n_ch < 0:
        raise ValueError("need n >= 1 and n_ch >= 0")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    taps = _complex_normal(rng, n_ch + 1, sigma_h2)
    unit_error = _complex_normal(rng, n, 1.0)
    k = np.arange(n)[:, None]
    dft = np.exp(-2j * np.pi * k * np.arange(n_ch + 1)[None, :] / n)
    true_response = dft @ taps
    estimate = true_response + math.sqrt(mmse) * unit_error
    if interference is None:
        if pu_bands and ts is None:
            raise ValueError("ts required to compute PU interference")
        interference = pu_interference(pu_bands, n, 1.0 / ts if ts else 0.0, ts) if pu_bands else 0.0
    return ChannelRealization(
        est_gain=np.abs(estimate) ** 2,
        mmse=float(mmse),
        path_loss=float(path_loss),
        noise=float(noise),
        pu_interference=interference,
    )
