import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from satqkd.errors import InputError, NoSignalError
from satqkd.qkd_rates import (
    QBER_THRESHOLD,
    DecoyParams,
    EntangledParams,
    SinglePhotonBound,
    binary_entropy,
    channel_eta,
    decoy_error_emu,
    decoy_gain_qmu,
    entangled_gain,
    fit_detector_params,
    fit_entangled_efficiency,
    keyrate_bbm92,
    keyrate_decoy,
    keyrate_vs_source_rate,
    qber_decoy,
    security_delta,
    single_photon_estimates,
    threshold_check,
)
from satqkd.scenario_io import load_detector_defaults

DEFAULTS = load_detector_defaults()
PARAMS = DecoyParams(DEFAULTS.dark_count_y0, DEFAULTS.detector_error_e_det)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)
    with pytest.raises(InputError):
        binary_entropy(1.5)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_binary_entropy_symmetric(x):
    assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-15)


def test_threshold_is_strict():
    assert QBER_THRESHOLD == 0.11
    assert threshold_check(0.1099999)
    assert not threshold_check(0.11)
    with pytest.raises(InputError):
        threshold_check(0.6)


def test_gain_and_error_closed_forms():
    eta, mu, y0, ed = 1e-4, 0.5, 1e-6, 0.01
    q = decoy_gain_qmu(eta, mu, y0)
    assert q == pytest.approx(y0 + 1 - math.exp(-eta * mu), rel=1e-12)
    e = decoy_error_emu(eta, mu, y0, ed)
    assert e == pytest.approx((0.5 * y0 + ed * (1 - math.exp(-eta * mu))) / q, rel=1e-12)


def test_no_signal():
    with pytest.raises(NoSignalError):
        decoy_error_emu(0.0, 0.5, 0.0, 0.01)


def test_channel_eta():
    assert channel_eta(30.0) == pytest.approx(1e-3)
    assert channel_eta(10.0, 0.5) == pytest.approx(0.05)
    with pytest.raises(InputError):
        channel_eta(-1.0)


def test_security_delta_golden():
    assert security_delta(PARAMS) == pytest.approx(41097.35811484913, rel=1e-12)


def test_security_delta_reports_every_violation():
    bad = dataclasses.replace(PARAMS, security_eps=1e-12, eps_bar=1e-10, eps_bar_prime=1e-9)
    with pytest.raises(InputError) as info:
        security_delta(bad)
    msg = str(info.value)
    assert "eps_bar (" in msg and "must exceed eps_bar_prime" in msg and "must be positive" in msg


def test_finite_key_lowers_rate():
    asym = keyrate_decoy(PARAMS, 30.0).key_rate_bps
    fin = keyrate_decoy(dataclasses.replace(PARAMS, finite_key=True), 30.0).key_rate_bps
    assert fin < asym


def test_decoy_params_validation():
    with pytest.raises(InputError):
        DecoyParams(1e-6, 0.01, mean_photon_mu=0.1, decoy_nu=0.2)
    with pytest.raises(InputError):
        DecoyParams(-1e-6, 0.01)
    assert PARAMS.signal_fraction == 0.5


@given(st.floats(min_value=0.0, max_value=60.0), st.floats(min_value=0.0, max_value=60.0))
def test_decoy_rate_non_increasing_in_loss(a, b):
    lo, hi = sorted((a, b))
    assert keyrate_decoy(PARAMS, hi).key_rate_bps <= keyrate_decoy(PARAMS, lo).key_rate_bps * (1 + 1e-12)


@pytest.mark.parametrize("bound", list(SinglePhotonBound))
def test_decoy_clamps_beyond_entropy_boundary(bound):
    params = dataclasses.replace(PARAMS, single_photon_bound=bound)
    k = lambda l: (
        params.basis_factor_q
        * params.signal_fraction
        * (
            -decoy_gain_qmu(channel_eta(l), 0.5, params.dark_count_y0)
            * params.ec_efficiency_f
            * binary_entropy(min(qber_decoy(params, l), 0.5))
            + single_photon_estimates(params, channel_eta(l))[0]
            * (1 - binary_entropy(single_photon_estimates(params, channel_eta(l))[1]))
        )
    )
    edge = brentq(k, 30.0, 70.0, xtol=1e-10)
    assert keyrate_decoy(params, edge - 0.5).key_rate_per_pulse > 0
    beyond = keyrate_decoy(params, edge + 0.5)
    assert beyond.key_rate_per_pulse == 0.0 and beyond.key_rate_bps == 0.0
    assert not beyond.secure


@given(st.floats(min_value=1e-7, max_value=0.5))
def test_vacuum_weak_bounds_are_conservative(eta):
    vw = dataclasses.replace(PARAMS, single_photon_bound=SinglePhotonBound.VACUUM_WEAK)
    q1_vw, e1_vw = single_photon_estimates(vw, eta)
    q1, e1 = single_photon_estimates(PARAMS, eta)
    assert q1_vw <= q1 * (1 + 1e-9)
    assert e1_vw >= e1 * (1 - 1e-9) or e1_vw == 0.5


def test_bbm92_closed_form_and_clamp():
    p = EntangledParams(10e6, 1e-5, 0.05, 1.22)
    h = binary_entropy(0.05)
    r = keyrate_bbm92(p, 30.0)
    assert r.key_rate_per_pulse == pytest.approx(0.5 * 1e-5 * (1 - 2.22 * h))
    assert r.key_rate_bps == pytest.approx(r.key_rate_per_pulse * 10e6)
    edge = brentq(lambda e: 1 - 2.22 * binary_entropy(e), 0.01, 0.2)
    assert keyrate_bbm92(dataclasses.replace(p, qber_e=edge + 1e-6)).key_rate_bps == 0.0
    assert keyrate_bbm92(dataclasses.replace(p, qber_e=edge - 1e-4)).key_rate_bps > 0.0


@given(st.floats(min_value=0.0, max_value=0.5))
def test_bbm92_secure_only_below_threshold(e):
    r = keyrate_bbm92(EntangledParams(1e6, 1e-4, e))
    if e >= QBER_THRESHOLD:
        assert not r.secure


def test_entangled_gain():
    assert entangled_gain(30.0, 0.25, 0.5) == pytest.approx(0.25 * 0.5 * 1e-3)
    with pytest.raises(InputError):
        entangled_gain(30.0, 0.0, 0.5)


def test_fit_recovers_synthetic_parameters():
    truth = DecoyParams(2e-6, 0.015)
    losses = [30.0, 34.0, 38.0, 42.0]
    points = [(l, qber_decoy(truth, l)) for l in losses]
    fit = fit_detector_params(points)
    assert fit.dark_count_y0 == pytest.approx(2e-6, rel=1e-8)
    assert fit.detector_error_e_det == pytest.approx(0.015, rel=1e-8)
    assert fit.max_abs_residual < 1e-12


def test_fit_rejects_degenerate_and_bad_inputs():
    with pytest.raises(InputError, match="at least 2"):
        fit_detector_params([(30.0, 0.02)])
    with pytest.raises(InputError, match="degenerate"):
        fit_detector_params([(30.0, 0.02), (30.0, 0.02)])
    with pytest.raises(InputError, match="QBER"):
        fit_detector_params([(30.0, 0.02), (31.0, 0.7)])


def test_shipped_defaults_match_a_refit():
    fit = fit_detector_params(DEFAULTS.fit_points, DEFAULTS.mean_photon_mu, DEFAULTS.detector_efficiency)
    assert fit.dark_count_y0 == pytest.approx(DEFAULTS.dark_count_y0, rel=1e-9)
    assert fit.detector_error_e_det == pytest.approx(DEFAULTS.detector_error_e_det, rel=1e-9)
    for got, stored in zip(fit.residuals, DEFAULTS.fit_residuals):
        assert got == pytest.approx(stored, abs=1e-12)


def test_entangled_fit_matches_defaults():
    fit = fit_entangled_efficiency(DEFAULTS.entangled_fit_points, 10e6, DEFAULTS.entangled_alice_efficiency)
    assert fit.bob_efficiency == pytest.approx(DEFAULTS.entangled_bob_efficiency, rel=1e-9)
    assert max(abs(r) for r in fit.relative_residuals) < 0.01


def test_keyrate_scales_linearly_with_source_rate():
    rows = keyrate_vs_source_rate(PARAMS, 36.0, [1e6, 10e6, 50e6])
    assert rows[2].key_rate_bps == pytest.approx(50 * rows[0].key_rate_bps)
    ent = keyrate_vs_source_rate(EntangledParams(1e6, 1e-5, 0.05), 36.0, [1e6, 2e6])
    assert ent[1].key_rate_bps == pytest.approx(2 * ent[0].key_rate_bps)
