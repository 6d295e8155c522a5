import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crpowerload.errors import ZeroPosterior
from crpowerload.spectral import (
    PowerConstraintSet,
    PuBand,
    aci_power_cap,
    cci_power_cap,
    empirical_violation_rate,
    leakage_factor,
    sinc2_integral,
)

TS = 128 / 1.25e6


def _band(beta_scale=1.0, threshold=1e-13, confidence=0.9, g=1e-8, nu=1.0):
    return PuBand(np.zeros(1), 1.25e6, threshold, confidence, nu, g)


def test_leakage_trivial():
    assert leakage_factor(1e5, 0.0, TS) == 0.0
    # Tail mass beyond |x| = X is about 1/(pi^2 X); X = 5.1e7 here.
    assert leakage_factor(0.0, 1e12, TS) == pytest.approx(1.0 - 1 / (math.pi**2 * 0.5e12 * TS), abs=1e-12)
    assert leakage_factor(0.0, math.inf, TS) == 1.0


def test_leakage_against_trapezoid():
    # Both values computed outside the package: 1e6-point trapezoid and mpmath.
    trapezoid = 0.07869827690543546
    mp_value = 0.078698276905305376025
    got = leakage_factor(1 / TS, 1 / TS, TS)
    assert got == pytest.approx(trapezoid, abs=1e-8)
    assert got == pytest.approx(mp_value, abs=1e-11)


def test_wide_band_formula_matches_quadrature():
    lo, hi = -3.3, 12.7
    assert sinc2_integral(lo, hi) == pytest.approx(
        float(sinc2_integral(lo, 4.0) + sinc2_integral(4.0, hi)), abs=1e-10
    )
    # Just above the switch-over width, against panel-wise quadrature.
    wide = sinc2_integral(0.25, 17.5)
    edges = np.linspace(0.25, 17.5, 36)
    pieces = sum(sinc2_integral(a, b) for a, b in zip(edges[:-1], edges[1:]))
    assert wide == pytest.approx(pieces, abs=1e-9)


def test_leakage_argument_validation():
    with pytest.raises(ValueError):
        leakage_factor(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        leakage_factor(0.0, -1.0, TS)


@given(st.floats(0.0, 40.0), st.integers(1, 20))
def test_leakage_symmetric(x, lobes):
    f = x / TS
    b = lobes / TS
    assert leakage_factor(f, b, TS) == pytest.approx(leakage_factor(-f, b, TS), abs=1e-12)


@pytest.mark.parametrize("lobes", [1, 2, 5, 10])
def test_leakage_monotone_in_offset(lobes):
    b = lobes / TS
    offsets = np.linspace(0.0, 60.0, 241) / TS
    values = np.array([leakage_factor(f, b, TS) for f in offsets])
    assert np.all(np.diff(values) <= 1e-12)
    assert np.all((values >= 0) & (values <= 1))


def test_cci_cap_examples():
    band = _band(threshold=1e-13, g=1e-8)
    assert cci_power_cap(0.0, band, 2.0) == 2.0
    assert cci_power_cap(0.05, band, 2.0) == pytest.approx(8.685889638065037e-5, rel=1e-12)
    assert cci_power_cap(0.05, band, 1e-6) == 1e-6
    near_one = _band(confidence=0.999999999)
    assert 0 < cci_power_cap(0.05, near_one, 2.0) < cci_power_cap(0.05, band, 2.0)


def test_aci_cap_examples():
    unit = PuBand(np.zeros(1), 1.0, 3e-13, 1 - math.exp(-1), 1.0, 1.0)
    assert aci_power_cap(1.0, unit) == pytest.approx(3e-13, rel=1e-14)
    assert aci_power_cap(0.5, unit) == pytest.approx(2 * aci_power_cap(1.0, unit), rel=1e-15)
    assert aci_power_cap(0.9065, _band()) == pytest.approx(4.790893346974648e-6, rel=1e-12)
    with pytest.raises(ZeroPosterior):
        aci_power_cap(0.0, unit)
    with pytest.raises(ValueError):
        cci_power_cap(-0.1, unit, 1.0)


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0), st.floats(0.05, 0.99), st.floats(0.05, 0.99),
       st.floats(1e-15, 1e-10))
def test_caps_decreasing_and_linear(b1, b2, psi1, psi2, thr):
    lo, hi = sorted((b1, b2))
    band = _band(threshold=thr)
    if hi > lo:
        assert aci_power_cap(hi, band) < aci_power_cap(lo, band)
        assert cci_power_cap(hi, band, math.inf) < cci_power_cap(lo, band, math.inf)
    plo, phi = sorted((psi1, psi2))
    if phi > plo:
        assert aci_power_cap(lo, _band(threshold=thr, confidence=phi)) < aci_power_cap(
            lo, _band(threshold=thr, confidence=plo))
    assert aci_power_cap(lo, _band(threshold=3 * thr)) == pytest.approx(3 * aci_power_cap(lo, band), rel=1e-13)


def test_empirical_compliance():
    band = _band()
    beta = 0.05
    cap = cci_power_cap(beta, band, math.inf)
    draws = 200_000
    assert empirical_violation_rate(0.0, band, beta, 10, 1) == 1.0
    rate = empirical_violation_rate(cap, band, beta, draws, 7)
    sigma = math.sqrt(0.9 * 0.1 / draws)
    assert abs(rate - 0.9) <= 3 * sigma
    assert empirical_violation_rate(2 * cap, band, beta, draws, 7) < 0.9
    with pytest.raises(ValueError):
        empirical_violation_rate(cap, band, beta, 0, 7)


def test_constraint_set_validation():
    ok = PowerConstraintSet(1.0, np.array([0.5]), np.array([[0.1, 0.2]]), 0.0)
    assert ok.n_pu == 1
    assert PowerConstraintSet(1.0).n_pu == 0
    with pytest.raises(ValueError):
        PowerConstraintSet(0.0)
    with pytest.raises(ValueError):
        PowerConstraintSet(1.0, np.array([0.5, 0.5]), np.array([[0.1, 0.2]]))
    with pytest.raises(ValueError):
        PowerConstraintSet(1.0, np.array([0.5]), np.array([[1.5, 0.2]]))
    with pytest.raises(ValueError):
        PowerConstraintSet(1.0, rate_floor=-1.0)
