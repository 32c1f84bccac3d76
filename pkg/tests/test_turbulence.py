import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson

from conftest import hv_numpy
from satqkd.atmosphere import HufnagelValleyProfile, SiteProfile, UniformCn2Profile, fried_parameter
from satqkd.errors import InputError
from satqkd.turbulence import (
    BeamGeometry,
    JitterVariant,
    beam_spread_factor,
    beam_wander_angle,
    beam_wander_loss_db,
    beam_wander_rms,
    beta_parameter,
    d_over_r0_from_transmittance,
    diagnose,
    effective_waist,
    horizontal_profile_from_site,
    jitter_variance,
    mean_fading,
    mean_onaxis_intensity,
    rytov_log_variance,
    sample_beta_fading,
    sample_lognormal,
    scintillation_index,
    strehl_loss_db,
    strehl_ratio,
    turbulence_loss_db,
    turbulence_transmittance,
    vacuum_beam_radius,
)

UPLINK = BeamGeometry(waist_w0=0.075, wavelength_nm=810.0, range_l=500e3)


def test_vacuum_radius_far_field():
    w = vacuum_beam_radius(UPLINK)
    far = 810e-9 * 500e3 / (math.pi * 0.075)
    assert w == pytest.approx(math.hypot(0.075, far), rel=1e-12)
    assert w > 0.075


def test_vacuum_radius_at_zero_range_is_waist():
    assert vacuum_beam_radius(BeamGeometry(0.05, 810.0, 0.0)) == 0.05


def test_spread_factor_matches_independent_integral():
    g = UPLINK
    s = np.linspace(0, 1, 20001)
    h = 30e3 * s * s
    integral = simpson(hv_numpy(h) * (1 - h / g.range_l) ** (5 / 3) * 60e3 * s, x=s)
    k = 2 * math.pi / 810e-9
    w = vacuum_beam_radius(g)
    chi = 2 * g.range_l / (k * w * w)
    oracle = 4.35 * chi ** (5 / 6) * k ** (7 / 6) * g.range_l ** (5 / 6) * integral
    assert beam_spread_factor(g, HufnagelValleyProfile()) == pytest.approx(oracle, rel=1e-6)


def test_spread_factor_zero_without_turbulence():
    calm = HufnagelValleyProfile(0.0, 0.0, 0.0, 0.0)
    assert beam_spread_factor(UPLINK, calm) == 0.0
    assert effective_waist(2.0, 0.0) == 2.0


@given(st.floats(min_value=0.0, max_value=1.3))
def test_spread_and_rytov_grow_off_zenith(z):
    tilted = BeamGeometry(0.075, 810.0, 500e3 / math.cos(z), zenith=z)
    p = HufnagelValleyProfile()
    assert rytov_log_variance(tilted, p) >= rytov_log_variance(UPLINK, p) * (1 - 1e-12)


def test_rytov_independent_oracle():
    s = np.linspace(0, 1, 20001)
    h = 30e3 * s * s
    integral = simpson(hv_numpy(h) * h ** (5 / 6) * 60e3 * s, x=s)
    k = 2 * math.pi / 810e-9
    assert rytov_log_variance(UPLINK, HufnagelValleyProfile()) == pytest.approx(2.24 * k ** (7 / 6) * integral, rel=1e-6)


def test_mean_intensity():
    w = vacuum_beam_radius(UPLINK)
    assert mean_onaxis_intensity(UPLINK, w) == pytest.approx(1.0)
    assert mean_onaxis_intensity(UPLINK, 2 * w) == pytest.approx(0.25)
    assert mean_onaxis_intensity(UPLINK, w, r=w) == pytest.approx(math.exp(-2))
    with pytest.raises(InputError):
        mean_onaxis_intensity(UPLINK, 0.5 * w)


def test_jitter_variants_differ_by_coefficient_ratio():
    a = jitter_variance(2.0, 810.0, 0.15, JitterVariant.MAIN_TEXT)
    b = jitter_variance(2.0, 810.0, 0.15, JitterVariant.APPENDIX)
    assert b / a == pytest.approx(0.36 / 0.182)
    assert a == pytest.approx(0.182 * 2 ** (5 / 3) * (810e-9 / 0.15) ** 2)


def test_beta_and_mean_fading():
    assert beta_parameter(10e-6, 1e-12) == pytest.approx(25.0)
    assert mean_fading(25.0) == pytest.approx(25 / 26)
    assert mean_fading(math.inf) == 1.0


@given(st.floats(min_value=0.0, max_value=50.0))
def test_strehl_inverse_round_trip(x):
    eta = strehl_ratio(x)
    assert 0.0 < eta <= 1.0
    if eta < 1.0 - 1e-9:
        assert d_over_r0_from_transmittance(eta) == pytest.approx(x, rel=1e-6)
    assert strehl_loss_db(x) == pytest.approx(-10 * math.log10(eta), abs=1e-9)


@given(st.floats(min_value=0.0, max_value=20.0), st.floats(min_value=0.0, max_value=20.0))
def test_strehl_monotone(a, b):
    lo, hi = sorted((a, b))
    assert strehl_ratio(hi) <= strehl_ratio(lo)


def test_beam_wander_rms_closed_form():
    r0 = 0.16
    rc = beam_wander_rms(UPLINK, r0)
    assert rc == pytest.approx(0.73 * 500e3 * (810e-9 / 0.15) * (0.15 / r0) ** (5 / 6))
    assert beam_wander_angle(UPLINK, r0) == pytest.approx(rc / 500e3)
    assert beam_wander_rms(UPLINK, math.inf) == 0.0


def test_beam_wander_uses_vertical_distance_times_secant():
    z = math.radians(50)
    tilted = BeamGeometry(0.075, 810.0, 500e3 / math.cos(z), zenith=z)
    assert beam_wander_rms(tilted, 0.16) == pytest.approx(beam_wander_rms(UPLINK, 0.16) / math.cos(z))


@given(st.floats(min_value=0.0, max_value=10.0), st.floats(min_value=1e-7, max_value=1e-3))
def test_beam_wander_loss_matches_gaussian_offset(ratio, div):
    theta = ratio * div
    assert beam_wander_loss_db(theta, div) == pytest.approx(-10 * math.log10(math.exp(-2 * theta**2 / div**2)), abs=1e-9)


def test_turbulence_transmittance_override_and_slant():
    site = SiteProfile("s", 0.0, turbulence_overrides={532.0: 0.64}, fried_reference=(0.1, 500.0))
    assert turbulence_transmittance(site, 532.0, 0.15) == 0.64
    off = turbulence_transmittance(site, 532.0, 0.15, math.radians(45))
    assert off < 0.64
    ratio0 = d_over_r0_from_transmittance(0.64)
    assert d_over_r0_from_transmittance(off) == pytest.approx(ratio0 / math.cos(math.radians(45)) ** 0.6)
    # no override at 810 nm: Strehl of D/r0
    r0 = site.fried_r0(810.0)
    assert turbulence_transmittance(site, 810.0, 0.15) == pytest.approx(strehl_ratio(0.15 / r0))
    assert turbulence_loss_db(site, 532.0, 0.15) == pytest.approx(-10 * math.log10(0.64))


def test_sampling_reproducible_and_validated():
    a = sample_beta_fading(5.0, 10, np.random.default_rng(3))
    b = sample_beta_fading(5.0, 10, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))
    assert np.all(sample_lognormal(0.0, 4, np.random.default_rng(0)) == 1.0)
    with pytest.raises(InputError):
        sample_beta_fading(0.0, 3, np.random.default_rng(0))
    with pytest.raises(InputError):
        sample_lognormal(-0.1, 3, np.random.default_rng(0))


def test_sampled_moments_within_three_sigma():
    rng = np.random.default_rng(20261014)
    n = 400_000
    beta = 4.0
    i = sample_beta_fading(beta, n, rng)
    var_i = beta / ((beta + 2) * (beta + 1) ** 2)
    assert abs(i.mean() - mean_fading(beta)) < 3 * math.sqrt(var_i / n)
    sl2 = 0.2
    s = sample_lognormal(sl2, n, rng)
    assert abs(s.mean() - 1.0) < 3 * math.sqrt(math.expm1(sl2) / n)


def test_diagnose_is_consistent():
    p = HufnagelValleyProfile()
    r0 = fried_parameter(p, 810.0)
    d = diagnose(UPLINK, p, r0, 0.15, 10e-6)
    assert d.effective_waist_we == pytest.approx(d.vacuum_radius_w * math.sqrt(1 + d.spread_t))
    assert d.scintillation_index_sigma_s2 == pytest.approx(scintillation_index(d.rytov_log_variance_sigma_l2))
    assert d.beta == pytest.approx(beta_parameter(10e-6, d.jitter_variance_sigma_j2))
    assert d.d_over_r0 == pytest.approx(0.15 / r0)


def test_horizontal_profile_reproduces_site_r0():
    site = SiteProfile("c", 2400.0, fried_reference=(0.05, 500.0))
    prof = horizontal_profile_from_site(site, 850.0, 143.6e3)
    assert isinstance(prof, UniformCn2Profile)
    k = 2 * math.pi / 850e-9
    assert (0.42 * k * k * prof.value * 143.6e3) ** (-0.6) == pytest.approx(site.fried_r0(850.0), rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(waist_w0=0.0, wavelength_nm=810.0, range_l=1.0),
        dict(waist_w0=0.1, wavelength_nm=810.0, range_l=-1.0),
        dict(waist_w0=0.1, wavelength_nm=810.0, range_l=1.0, zenith=math.pi / 2),
    ],
)
def test_beam_geometry_validation(kwargs):
    with pytest.raises(InputError):
        BeamGeometry(**kwargs)
