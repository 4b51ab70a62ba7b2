import math
import warnings

import numpy as np
import pytest

from resloss.errors import FitError, IdentifiabilityWarning, ValidationError
from resloss.physmodels import TwoToneParams, dressed_frequency, thermal_tls_shift, two_tone_extrema
from resloss.physmodels.constants import TWO_PI
from resloss.pipelines import (
    ComplexTrace,
    DeviceInfo,
    SweepEntry,
    SweepManifest,
    TraceBackground,
    bare_frequency,
    estimate_trace_init,
    fit_power_sweep,
    fit_pump_sweep,
    fit_temperature_sweep,
    fit_trace,
    pump_photon_numbers,
    pump_shift_model,
    synth_sweep,
    synth_trace,
    trace_model,
    trace_noise_sigma,
)

from scenarios import (
    DEVICE,
    F_R,
    KAPPA_TOT,
    POWER_GRID,
    POWER_TRUTH,
    PUMP_GRID,
    PUMP_TRUTH,
    TEMP_GRID,
    power_trial,
    pump_trial,
    temp_trial,
    temp_truth,
    trace_cavity,
    within,
)

TRACE_TRUTH = {"f_r_hz": F_R, "kappa_tot_hz": KAPPA_TOT}


# ---- traces -------------------------------------------------------------------------

def test_synth_trace_infinite_snr_is_exact_model():
    cav = trace_cavity()
    tr = synth_trace(cav, noise_snr_db=math.inf, n_points=101)
    from resloss.physmodels import s21_approx
    assert np.array_equal(tr.s21, s21_approx(cav, TWO_PI * tr.frequencies))
    assert tr.reference_frequency == pytest.approx(dressed_frequency(cav), rel=1e-15)


def test_synth_trace_is_seeded():
    cav = trace_cavity()
    assert synth_trace(cav, seed=5) == synth_trace(cav, seed=5)
    assert synth_trace(cav, seed=5) != synth_trace(cav, seed=6)


def test_synth_trace_snr_calibration():
    cav = trace_cavity()
    clean = synth_trace(cav, noise_snr_db=math.inf)
    s_off = 0.5 * (abs(clean.s21[0]) + abs(clean.s21[-1]))
    for seed in range(16):
        noisy = synth_trace(cav, noise_snr_db=40.0, seed=seed)
        rms = np.sqrt(np.mean(np.abs(noisy.s21 - clean.s21) ** 2))
        assert abs(20 * np.log10(s_off / rms) - 40.0) < 1.0


def test_synth_trace_span_validation():
    cav = trace_cavity()
    with pytest.raises(ValidationError, match="linewidths"):
        synth_trace(cav, span=5 * KAPPA_TOT)


def test_trace_noise_sigma_infinite():
    assert trace_noise_sigma(np.ones(4, complex), math.inf) == 0.0


def test_trace_round_trip_100_trials():
    cav = trace_cavity()
    hits = 0
    for seed in range(100):
        res = fit_trace(synth_trace(cav, noise_snr_db=40.0, seed=seed))
        assert res.converged
        assert res.err("f_r_hz") < KAPPA_TOT / 10
        hits += within(res, TRACE_TRUTH)
    assert hits >= 95


def test_trace_noiseless_exact():
    res = fit_trace(synth_trace(trace_cavity(), noise_snr_db=math.inf))
    assert res["f_r_hz"] == pytest.approx(F_R, rel=1e-6)
    assert res["kappa_tot_hz"] == pytest.approx(KAPPA_TOT, rel=1e-6)


def test_trace_with_background():
    bg = TraceBackground(amplitude_scale=0.3, phase_offset=1.1, electrical_delay=10e-9)
    res = fit_trace(synth_trace(trace_cavity(), bg, noise_snr_db=40.0, seed=3))
    assert within(res, TRACE_TRUTH)
    assert res["electrical_delay_s"] == pytest.approx(10e-9, rel=0.05)


def test_trace_q_i_arithmetic():
    res = fit_trace(synth_trace(trace_cavity(), seed=2))
    assert res.extras["q_i"] == pytest.approx(res["f_r_hz"] / res["kappa_tot_hz"], rel=1e-9)
    assert res.extras["q_i_stderr"] > 0
    tr = synth_trace(trace_cavity(), seed=2)
    assert np.allclose(res.extras["residual"],
                       trace_model(tr.frequencies, *res.params, res.extras["f_c"], res.extras["f_ref"]) - tr.s21)


def test_trace_init_guess():
    cav = trace_cavity()
    g = estimate_trace_init(synth_trace(cav, noise_snr_db=math.inf))
    assert abs(g.f_r - F_R) < 2 * KAPPA_TOT
    assert 0.5 * KAPPA_TOT < g.kappa_tot < 2 * KAPPA_TOT


def test_trace_init_delay():
    bg = TraceBackground(electrical_delay=10e-9)
    g = estimate_trace_init(synth_trace(trace_cavity(), bg, noise_snr_db=40.0, seed=0))
    assert g.background.electrical_delay == pytest.approx(10e-9, rel=0.2)


def test_flat_trace_has_no_resonance():
    rng = np.random.default_rng(0)
    f = np.linspace(4.79e9, 4.81e9, 201)
    s = 0.1 * np.exp(-1j * TWO_PI * f * 5e-9) + 1e-4 * (rng.standard_normal(201) + 1j * rng.standard_normal(201))
    with pytest.raises(FitError, match="no resonance found"):
        estimate_trace_init(ComplexTrace(f, s))
    with pytest.raises(FitError, match="no resonance found"):
        fit_trace(ComplexTrace(f, np.full(201, 0.1 + 0j)))


def test_trace_needs_enough_points():
    tr = synth_trace(trace_cavity(), n_points=31)
    with pytest.raises(ValidationError, match="32"):
        fit_trace(tr)


def test_fitted_model_has_peak_and_dip():
    tr = synth_trace(trace_cavity(), noise_snr_db=40.0, seed=4)
    res = fit_trace(tr)
    f = np.linspace(tr.frequencies[0], tr.frequencies[-1], 8001)
    mag = np.abs(trace_model(f, *res.params, res.extras["f_c"], res.extras["f_ref"]))
    inner = mag[1:-1]
    assert np.count_nonzero((inner > mag[:-2]) & (inner > mag[2:])) == 1
    assert np.count_nonzero((inner < mag[:-2]) & (inner < mag[2:])) == 1


def test_trace_container_validation():
    with pytest.raises(ValidationError):
        ComplexTrace([1.0, 1.0], [0j, 0j])
    with pytest.raises(ValidationError):
        ComplexTrace([1.0, 2.0], [0j, complex(np.nan, 0)])
    with pytest.raises(ValidationError):
        ComplexTrace([1.0, 2.0], [0j])


# ---- synthetic sweeps ---------------------------------------------------------------

def test_synth_power_sweep_monotone():
    m = synth_sweep("power", POWER_TRUTH, np.logspace(-1, 5, 25), 0.0)
    res = fit_power_sweep(m)
    inv_q = res.extras["inv_q_i"][np.argsort(res.extras["n_bar"])]
    assert np.all(np.diff(inv_q) < 0)
    assert res.extras["n_bar"] == pytest.approx(np.logspace(-1, 5, 25), rel=1e-6)


def test_synth_pump_sweep_antisymmetric():
    m = synth_sweep("pump", PUMP_TRUTH, PUMP_GRID, 0.0)
    shift = np.array([e.f_r_hz for e in m.entries]) - m.reference_f_r_hz
    assert np.allclose(shift, -shift[::-1], rtol=0, atol=1e-9 * np.max(np.abs(shift)))
    assert m.truth == {"inv_q_tls": 2e-5, "omega0_over_2pi": 16.2e3, "heating_eta": 0.0}


def test_synth_temperature_alpha_zero_is_pure_tls():
    m = synth_sweep("temperature", temp_truth(alpha=0.0), TEMP_GRID, 0.0)
    shift = np.array([e.f_r_hz for e in m.entries]) - F_R
    assert np.allclose(shift, thermal_tls_shift(F_R, 2e-5, TEMP_GRID), rtol=1e-9, atol=1e-6)


def test_synth_sweep_validation():
    with pytest.raises(ValidationError):
        synth_sweep("power", PUMP_TRUTH, POWER_GRID, 0.0)
    with pytest.raises(ValidationError):
        synth_sweep("bogus", POWER_TRUTH, POWER_GRID, 0.0)
    with pytest.raises(ValidationError):
        synth_sweep("power", POWER_TRUTH, POWER_GRID, -0.1)


def test_synth_sweep_seeded():
    a = synth_sweep("power", POWER_TRUTH, POWER_GRID, 0.02, seed=3)
    b = synth_sweep("power", POWER_TRUTH, POWER_GRID, 0.02, seed=3)
    assert [e.kappa_tot_hz for e in a.entries] == [e.kappa_tot_hz for e in b.entries]


# ---- power sweep ------------------------------------------------------------------------

def test_power_round_trip_100_trials():
    hits = sum(within(*power_trial(seed)) for seed in range(100))
    assert hits >= 95


def test_power_noiseless_chi2():
    res, truth = power_trial(0, noise=0.0)
    assert res.reduced_chi2 < 1e-10
    for k, v in truth.items():
        assert res[k] == pytest.approx(v, rel=1e-6)


def test_power_saturated_regime_flagged():
    m = synth_sweep("power", POWER_TRUTH, np.logspace(4, 8, 20), 0.02, seed=1)
    with pytest.warns(IdentifiabilityWarning):
        res = fit_power_sweep(m)
    assert res.warnings


def test_power_requires_range_and_points():
    with pytest.raises(ValidationError, match="decades"):
        fit_power_sweep(synth_sweep("power", POWER_TRUTH, np.logspace(0, 2, 10), 0.02))
    with pytest.raises(ValidationError, match="at least 6"):
        fit_power_sweep(synth_sweep("power", POWER_TRUTH, np.logspace(0, 6, 5), 0.02))


def test_power_from_traces():
    m = synth_sweep("power", POWER_TRUTH, np.logspace(-2, 8, 21), 0.02, seed=2, traces=True)
    assert all(e.trace is not None and e.f_r_hz is None for e in m.entries)
    res = fit_power_sweep(m)
    assert res["phi"] == pytest.approx(0.44, abs=0.15)
    assert res["inv_q_tls"] == pytest.approx(2e-5, rel=0.3)


def test_power_weights_from_stderr():
    res, _ = power_trial(5)
    assert np.all(res.extras["inv_q_i_stderr"] > 0)
    assert 0.3 < res.reduced_chi2 < 3


# ---- pump sweep -------------------------------------------------------------------------

def test_pump_round_trip_100_trials():
    hits = 0
    for seed in range(100):
        res, truth = pump_trial(seed)
        truth.pop("heating_eta")
        hits += within(res, truth)
    assert hits >= 95


def test_pump_heating_disabled_pins_eta():
    res, truth = pump_trial(1)
    assert res["heating_eta"] == 0.0 and res.err("heating_eta") == 0.0
    assert within(res, {k: truth[k] for k in ("inv_q_tls", "omega0_over_2pi")})


def test_pump_heating_recovery():
    truth = TwoToneParams(F_R, 2e-5, 16.2e3, 0.01, heating_eta=5e-7)
    hits = {False: 0, True: 0}
    for seed in range(20):
        m = synth_sweep("pump", truth, PUMP_GRID, 0.02, seed=seed)
        for two_stage in (False, True):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = fit_pump_sweep(m, heating=True, two_stage=two_stage)
            hits[two_stage] += within(res, m.truth)
    assert hits[False] >= 18 and hits[True] >= 18


def test_pump_extrema_consistent_with_closed_form():
    res, _ = pump_trial(2)
    p = TwoToneParams(F_R, res["inv_q_tls"], res["omega0_over_2pi"], 0.01)
    d = np.linspace(1e3, 1.5e6, 150001)
    n = pump_photon_numbers(DEVICE, pump_cal(), -30.0, F_R, KAPPA_TOT, d)
    y = pump_shift_model(F_R, 0.01, d, n, res["inv_q_tls"], res["omega0_over_2pi"])
    i = int(np.argmax(y))
    # the pump photon number itself depends on detuning; the extremum sits
    # where the detuning equals the closed-form location at that photon number
    assert two_tone_extrema(p, n[i])[1] == pytest.approx(d[i], rel=5e-3)


def pump_cal():
    from resloss.physmodels import PUMP_LINE_GAIN_DB, CalibrationParams
    return CalibrationParams(gain_in_db=PUMP_LINE_GAIN_DB)


def test_pump_and_power_agree_on_tls_loss():
    agree = 0
    for seed in range(20):
        pw, _ = power_trial(seed)
        pm, _ = pump_trial(seed + 500)
        comb = math.hypot(pw.err("inv_q_tls"), pm.err("inv_q_tls"))
        agree += abs(pw["inv_q_tls"] - pm["inv_q_tls"]) <= 3 * comb
    assert agree >= 19


def test_pump_flat_data_flagged():
    m = synth_sweep("pump", PUMP_TRUTH, PUMP_GRID, 0.0)
    for e in m.entries:
        e.f_r_hz = m.reference_f_r_hz
    with pytest.warns(IdentifiabilityWarning):
        res = fit_pump_sweep(m)
    assert any("not identifiable" in w for w in res.warnings)


def test_pump_asymmetric_grid_warns():
    m = synth_sweep("pump", PUMP_TRUTH, np.linspace(-1e6, 1.5e6, 41), 0.02)
    with pytest.warns(UserWarning, match="symmetric"):
        fit_pump_sweep(m)


def test_pump_needs_reference():
    m = synth_sweep("pump", PUMP_TRUTH, PUMP_GRID, 0.02)
    m.reference_f_r_hz = None
    with pytest.raises(ValidationError, match="reference"):
        fit_pump_sweep(m)


# ---- temperature sweep ------------------------------------------------------------------

def test_temperature_round_trip_100_trials():
    hits = sum(within(*temp_trial(seed)) for seed in range(100))
    assert hits >= 95


def test_temperature_alpha_zero_consistent():
    # nested model: alpha within 2 stderr of 0 at the rate a Gaussian allows
    inside = 0
    for seed in range(100):
        res, _ = temp_trial(seed, alpha=0.0)
        inside += abs(res["alpha"]) <= 2 * res.err("alpha")
    assert inside >= 90


def test_temperature_low_t_limb_inflates_alpha_error():
    full, _ = temp_trial(0)
    cut = TEMP_GRID[TEMP_GRID <= 0.5]
    with pytest.warns(IdentifiabilityWarning):
        m = synth_sweep("temperature", temp_truth(), cut, 0.01, seed=0)
        res = fit_temperature_sweep(m)
    assert (not res.covariance_available) or res.err("alpha") > 2 * full.err("alpha")


def test_temperature_relative_to_coldest_point():
    m = synth_sweep("temperature", temp_truth(), TEMP_GRID, 0.0)
    m.reference_f_r_hz = None
    res = fit_temperature_sweep(m)
    assert res["inv_q_tls"] == pytest.approx(2e-5, rel=1e-3)
    assert res["alpha"] == pytest.approx(0.05, rel=1e-3)


def test_temperature_narrow_span_flagged():
    m = synth_sweep("temperature", temp_truth(), np.linspace(0.05, 1.0, 20), 0.01)
    with pytest.warns(IdentifiabilityWarning, match="narrower"):
        fit_temperature_sweep(m)


def test_all_pipelines_report_stderr():
    for trial in (power_trial, pump_trial, temp_trial):
        res, _ = trial(7)
        assert res.covariance_available
        free = res.stderr[res.stderr > 0]
        assert free.size >= 2 and np.all(np.isfinite(free))


# ---- manifests ---------------------------------------------------------------------------

def test_manifest_validation():
    e = [SweepEntry(control=c, f_r_hz=F_R, kappa_tot_hz=5e4) for c in (1.0, 3.0, 2.0)]
    with pytest.raises(ValidationError, match="monotone"):
        SweepManifest("power", e)
    with pytest.raises(ValidationError, match="duplicate"):
        SweepManifest("power", [SweepEntry(control=1.0, f_r_hz=F_R), SweepEntry(control=1.0, f_r_hz=F_R)])
    with pytest.raises(ValidationError, match="unknown sweep kind"):
        SweepManifest("noise", e[:1])
    with pytest.raises(ValidationError):
        SweepEntry(control=1.0)


def test_device_requires_known_resonator_or_g():
    with pytest.raises(ValidationError, match="unknown resonator"):
        DeviceInfo(resonator="Res 9")
    assert DeviceInfo(resonator="Res 9", g_over_2pi=20e6).g_over_2pi == 20e6


def test_bare_frequency_inverts_pull():
    f_bare = bare_frequency(DEVICE, F_R)
    assert f_bare + DEVICE.g_over_2pi**2 / (f_bare - DEVICE.f_c) == pytest.approx(F_R, abs=1e-5)
