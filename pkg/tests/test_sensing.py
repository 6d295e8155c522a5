import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crpowerload.errors import DegenerateProfile
from crpowerload.sensing import (
    PERFECT_SENSING,
    SensingProfile,
    posterior_occupied_given_occupied,
    posterior_occupied_given_vacant,
    sample_profile,
)

prob = st.floats(0.0, 1.0)


def _profile_or_none(md, fa, rho):
    try:
        return SensingProfile(md, fa, rho)
    except DegenerateProfile:
        return None


def test_vacant_posterior_examples():
    assert posterior_occupied_given_vacant(SensingProfile(0.0, 0.1, 0.5)) == 0.0
    assert posterior_occupied_given_vacant(SensingProfile(1.0, 1.0, 0.5)) == 1.0
    # 0.015 / 0.465
    assert posterior_occupied_given_vacant(SensingProfile(0.03, 0.10, 0.5)) == pytest.approx(
        0.03225806451612903, rel=1e-15
    )


def test_occupied_posterior_examples():
    assert posterior_occupied_given_occupied(SensingProfile(0.0, 0.0, 0.5)) == 1.0
    assert posterior_occupied_given_occupied(SensingProfile(0.3, 0.2, 1.0)) == 1.0
    # 0.485 / 0.535
    assert posterior_occupied_given_occupied(SensingProfile(0.03, 0.10, 0.5)) == pytest.approx(
        0.9065420560747663, rel=1e-15
    )


def test_perfect_sensing_constant():
    assert posterior_occupied_given_vacant(PERFECT_SENSING) == 0.0
    assert posterior_occupied_given_occupied(PERFECT_SENSING) == 1.0


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0), (1.0, 0.0, 0.0), (0.5, 0.0, 0.0), (0.0, 0.5, 1.0)])
def test_degenerate_profiles_rejected(args):
    with pytest.raises(DegenerateProfile):
        SensingProfile(*args)


@pytest.mark.parametrize("args", [(-0.1, 0.1, 0.5), (0.1, 1.1, 0.5), (0.1, 0.1, float("nan"))])
def test_out_of_range_rejected(args):
    with pytest.raises(ValueError):
        SensingProfile(*args)


@given(prob, prob, prob)
def test_posteriors_are_probabilities(md, fa, rho):
    p = _profile_or_none(md, fa, rho)
    if p is None:
        return
    assert 0.0 <= posterior_occupied_given_vacant(p) <= 1.0
    assert 0.0 <= posterior_occupied_given_occupied(p) <= 1.0


@given(prob, prob, prob, prob)
def test_posteriors_monotone_in_misdetection(md1, md2, fa, rho):
    lo, hi = sorted((md1, md2))
    a, b = _profile_or_none(lo, fa, rho), _profile_or_none(hi, fa, rho)
    if a is None or b is None:
        return
    assert posterior_occupied_given_vacant(a) <= posterior_occupied_given_vacant(b) + 1e-15
    assert posterior_occupied_given_occupied(a) >= posterior_occupied_given_occupied(b) - 1e-15


@given(prob, prob, prob)
def test_vacant_posterior_zero_iff_no_misdetection_mass(md, fa, rho):
    p = _profile_or_none(md, fa, rho)
    if p is None:
        return
    assert (posterior_occupied_given_vacant(p) == 0.0) == (md * rho == 0.0)


def test_sample_profile_deterministic_and_in_range():
    a = sample_profile(7, 2)
    assert a == sample_profile(7, 2)
    assert a != sample_profile(8, 2)
    for p in sample_profile(11, 500):
        assert 0.01 <= p.rho_md <= 0.05
        assert 0.01 <= p.rho_fa <= 0.1
        assert 0.0 <= p.rho <= 1.0


def test_sample_profile_mean_misdetection():
    n = 100_000
    md = np.array([p.rho_md for p in sample_profile(3, n)])
    sigma = 0.04 / np.sqrt(12.0) / np.sqrt(n)
    assert abs(md.mean() - 0.03) <= 3 * sigma


def test_sample_profile_rejects_zero_bands():
    with pytest.raises(ValueError):
        sample_profile(0, 0)
