import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnchip.analysis import (
    DegenerateDataError, FitError, NoDipError, fit_fringe, fit_hom_dip, subtract_accidentals,
    visibility,
)
from lnchip.chip import half_wave_voltage, offset_for_voltage
from lnchip.config import DetectorModel, ElectrodeGeometry
from lnchip.detection import CountRecord, hom_curve, rates_from_probabilities, simulate_counts
from lnchip.experiments import config_spectrum, fringe_scan

from conftest import ideal_with


def cos_model(u, b, v, vpi, u0):
    return b * (1 + v * np.cos(np.pi * (np.asarray(u) - u0) / vpi))


U = np.linspace(-10, 20, 61)
VPI = half_wave_voltage(ElectrodeGeometry())


@pytest.fixture(scope="module")
def spectrum():
    from lnchip.config import builtin_config
    return config_spectrum(builtin_config("ideal"))


def test_visibility_examples():
    assert visibility(7.0, 0.0) == 1.0
    assert visibility(3.0, 3.0) == 0.0
    assert visibility(200, 50) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        visibility(1.0, 2.0)
    with pytest.raises(ValueError):
        visibility(0.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0, 1e6), b=st.floats(0, 1e6))
def test_visibility_bounded(a, b):
    hi, lo = max(a, b), min(a, b)
    if hi + lo > 0:
        assert 0.0 <= visibility(hi, lo) <= 1.0


def _record(coinc, acc):
    keys = ("r1r4", "r1r1", "r4r4")
    return CountRecord(1.0, {"r1": 0, "r4": 0}, {k: coinc for k in keys}, {k: acc for k in keys}, 0)


def test_subtract_accidentals_examples():
    c = subtract_accidentals(_record(120, 0.0))["r1r4"]
    assert c.value == 120 and c.sigma == pytest.approx(math.sqrt(120)) and not c.floored
    c = subtract_accidentals(_record(5, 9.0))["r1r4"]
    assert c.value == 0.0 and c.floored
    assert c.sigma == pytest.approx(math.sqrt(14))


def test_accidental_injection_recovers_true_mean():
    det = DetectorModel(efficiency=(0.5, 0.5), dark_rate=2e5, coincidence_window=200.0)
    r = rates_from_probabilities(1.0, 0.0, 0.0, 1.0, 2e5, det)
    assert r.accidentals["r1r4"] > 0.2 * r.coincidences["r1r4"]
    corrected = np.array([subtract_accidentals(simulate_counts(r, 0.1, 99, i, 200.0))["r1r4"].value
                          for i in range(500)])
    truth = r.coincidences["r1r4"] * 0.1
    sigma = math.sqrt(r.total_coincidences()["r1r4"] * 0.1 + r.accidentals["r1r4"] * 0.1) / math.sqrt(500)
    assert abs(corrected.mean() - truth) < 3 * sigma


@pytest.mark.parametrize("params", [
    (1000.0, 0.95, 4.9, 2.3), (50.0, 0.4, 3.0, -1.0), (1e5, 1.0, 6.5, 0.0), (300.0, 0.7, 4.0, -3.9),
])
def test_fringe_round_trip(params):
    y = cos_model(U, *params)
    fit = fit_fringe(U, y, np.sqrt(np.maximum(y, 1.0)))
    b, v, vpi, u0 = params
    assert fit.baseline == pytest.approx(b, rel=1e-6)
    assert fit.visibility == pytest.approx(v, rel=1e-6, abs=1e-9)
    assert fit.v_pi == pytest.approx(vpi, rel=1e-6)
    assert fit.period == pytest.approx(2 * vpi, rel=1e-6)
    assert fit.u_offset == pytest.approx(u0, abs=1e-6 * vpi)
    assert -fit.v_pi <= fit.u_offset < fit.v_pi
    assert fit.chi2 < 1e-12
    assert fit.ndf == len(U) - 4


def test_fringe_coverage_small():
    truth = (1e4, 0.9, VPI, 2.3)
    mean = cos_model(U, *truth)
    hits = 0
    for seed in range(100):
        y = np.random.default_rng(seed).poisson(mean).astype(float)
        fit = fit_fringe(U, y, np.sqrt(np.maximum(y, 1.0)))
        hits += abs(fit.visibility - 0.9) <= 3 * fit.errors["visibility"]
    assert hits >= 95


def test_fit_u_offset_from_ideal_chip():
    cfg = ideal_with(phase_offset=offset_for_voltage(ElectrodeGeometry(), 2.3))
    res = fringe_scan(cfg, U, noiseless=True)
    fit = res.fits["r1r4"]
    assert fit.u_offset == pytest.approx(2.3, abs=max(fit.errors["u_offset"], 1e-6))
    assert fit.period == pytest.approx(2 * VPI, rel=1e-6)


def test_fringe_errors():
    with pytest.raises(DegenerateDataError):
        fit_fringe(U, np.full_like(U, 10.0))
    with pytest.raises(ValueError):
        fit_fringe(U[:5], cos_model(U[:5], 10, 0.5, 5, 0))
    with pytest.raises(ValueError):
        fit_fringe(U, cos_model(U, 10, 0.5, 5, 0), np.zeros_like(U))


def test_scaling_invariance():
    y = np.random.default_rng(1).poisson(cos_model(U, 500, 0.8, VPI, 1.0)).astype(float)
    s = np.sqrt(np.maximum(y, 1.0))
    a = fit_fringe(U, y, s)
    b = fit_fringe(U, 7.0 * y, 7.0 * s)
    assert b.visibility == pytest.approx(a.visibility, rel=1e-7)
    assert b.v_pi == pytest.approx(a.v_pi, rel=1e-7)
    assert b.u_offset == pytest.approx(a.u_offset, abs=1e-7)
    assert b.baseline == pytest.approx(7 * a.baseline, rel=1e-7)
    assert b.amplitude == pytest.approx(7 * a.amplitude, rel=1e-7)


def test_shift_by_full_period():
    y = np.random.default_rng(2).poisson(cos_model(U, 800, 0.85, VPI, -1.2)).astype(float)
    s = np.sqrt(np.maximum(y, 1.0))
    a = fit_fringe(U, y, s)
    b = fit_fringe(U + 2 * a.v_pi, y, s)
    # wrapped into [-V_pi, V_pi): a full-period shift maps back onto itself
    assert b.u_offset == pytest.approx(a.u_offset, abs=1e-6)
    assert b.visibility == pytest.approx(a.visibility, rel=1e-8)
    c = fit_fringe(U + 1.5, y, s)
    shift = (c.u_offset - a.u_offset - 1.5 + c.v_pi) % (2 * c.v_pi) - c.v_pi
    assert abs(shift) < 1e-6


def test_estimator_consistency():
    truth = (1.0, 0.9, VPI, 0.7)
    medians = []
    for scale in (1e3, 1e4, 1e5):
        mean = cos_model(U, scale, *truth[1:])
        errs = []
        for seed in range(30):
            y = np.random.default_rng(seed).poisson(mean).astype(float)
            errs.append(abs(fit_fringe(U, y, np.sqrt(np.maximum(y, 1))).visibility - 0.9))
        medians.append(np.median(errs))
    assert medians[0] > medians[1] > medians[2]


def test_accidental_subtraction_raises_visibility():
    raw = cos_model(U, 1000, 0.8, VPI, 0)
    acc = np.full_like(U, 150.0)
    a = fit_fringe(U, raw + acc)
    b = fit_fringe(U, raw)
    assert b.visibility >= a.visibility
    assert visibility(raw.max() + 150, raw.min() + 150) <= visibility(raw.max(), raw.min())


def test_fringe_report_shape():
    fit = fit_fringe(U, cos_model(U, 100, 0.5, VPI, 0))
    rep = fit.report()
    assert set(rep) == {"model", "params", "errors", "chi2", "ndf", "convention_flags"}
    assert rep["params"]["period"] == pytest.approx(2 * VPI, rel=1e-6)


TAU = np.linspace(-3, 3, 61)


def test_pure_state_dip(spectrum):
    y = 1e4 * hom_curve(1.0, 0.0, spectrum, TAU) / 0.5
    fit = fit_hom_dip(TAU, y, np.sqrt(np.maximum(y, 1.0)), spectrum=spectrum)
    assert fit.visibility == pytest.approx(1.0, abs=1e-6)
    assert fit.center == pytest.approx(0.0, abs=1e-6)
    assert fit.width > 0


@pytest.mark.parametrize("s", [0.0, 0.02, 0.037, 0.1])
def test_dip_visibility_matches_bunching(spectrum, s):
    y = 2e4 * hom_curve(1 - s, s, spectrum, TAU)
    fit = fit_hom_dip(TAU, y, np.sqrt(np.maximum(y, 1.0)), spectrum=spectrum)
    assert fit.visibility == pytest.approx((1 - s) / (1 + s), abs=5e-3)
    if s == 0.037:
        assert fit.visibility == pytest.approx(0.929, abs=5e-3)
    assert fit.visibility_depth >= fit.visibility


def test_dip_gaussian_fallback(spectrum):
    y = 1e4 * hom_curve(0.95, 0.05, spectrum, TAU)
    fit = fit_hom_dip(TAU, y)
    assert fit.kernel == "gaussian"
    assert fit.visibility == pytest.approx(0.95 / 1.05, abs=0.02)


def test_wings_only_raise_no_dip(spectrum):
    wings = np.concatenate([np.linspace(-30, -20, 10), np.linspace(20, 30, 10)])
    y = np.random.default_rng(0).poisson(1e4 * hom_curve(1.0, 0.0, spectrum, wings) / 0.5).astype(float)
    with pytest.raises(NoDipError):
        fit_hom_dip(wings, y, spectrum=spectrum)
    flat = np.random.default_rng(1).poisson(np.full_like(TAU, 5000.0)).astype(float)
    with pytest.raises(FitError):
        fit_hom_dip(TAU, flat, spectrum=spectrum)
