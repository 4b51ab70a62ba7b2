import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resloss.errors import ValidationError
from resloss.physmodels.constants import H, K_B
from resloss.tlsbath import (
    DriveSpec,
    EnsembleConfig,
    TlsDefect,
    TlsEnsemble,
    ensemble_power_curve,
    ensemble_pump_sweep,
    ensemble_shift,
    fit_saturation_curve,
    pump_extremum_location,
    sample_ensemble,
    steady_state_sigma_z,
)

F_R = 5e9
T = 0.01
G2 = 1e3
OM = 20e3
FIXED = dict(omega0_dist=OM, gamma2_dist=(G2, G2), gamma1_rule=("fraction_fixed", 1.0), temperature=T)


def thermal(f):
    return math.tanh(H * f / (2 * K_B * T))


# ---- sampling -------------------------------------------------------------------

def test_empty_ensemble():
    ens = sample_ensemble(EnsembleConfig(n_defects=0, band_center=F_R, band_halfwidth=1e6))
    assert len(ens) == 0
    assert ensemble_shift(ens, F_R, DriveSpec(F_R, 1.0), T) == 0


def test_sampling_is_deterministic():
    cfg = EnsembleConfig(n_defects=1000, band_center=F_R, band_halfwidth=1e6, seed=42)
    a, b = sample_ensemble(cfg), sample_ensemble(cfg)
    for x, y in zip(a._arrays(), b._arrays()):
        assert np.array_equal(x, y)
    c = sample_ensemble(replace(cfg, seed=43))
    assert not np.array_equal(a.f_j, c.f_j)


def test_frequencies_uniform_ks():
    cfg = EnsembleConfig(n_defects=100_000, band_center=F_R, band_halfwidth=1e6, seed=3)
    f = np.sort(sample_ensemble(cfg).f_j)
    u = (f - (F_R - 1e6)) / 2e6
    n = u.size
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = max(np.max(ecdf_hi - u), np.max(u - ecdf_lo))
    assert d < 1.628 / math.sqrt(n)  # 1% critical value


def test_default_distributions_respect_bloch_limit():
    ens = sample_ensemble(EnsembleConfig(n_defects=5000, band_center=F_R, band_halfwidth=1e6, seed=1))
    assert np.all(ens.gamma1 > 0) and np.all(ens.gamma2 >= ens.gamma1 / 2)
    assert ens.gamma2.min() >= 1e3 and ens.gamma2.max() <= 1e7
    log_ens = sample_ensemble(EnsembleConfig(n_defects=2000, band_center=F_R, band_halfwidth=1e6,
                                             gamma1_rule=("loguniform", (1e2, 1e8))))
    assert np.all(log_ens.gamma1 <= 2 * log_ens.gamma2)


@pytest.mark.parametrize("kw", [dict(band_halfwidth=0.0), dict(n_defects=-1), dict(band_halfwidth=6e9),
                                dict(gamma2_dist=(0.0, 1.0)), dict(gamma1_rule=("bogus", 1))])
def test_config_validation(kw):
    base = dict(n_defects=10, band_center=F_R, band_halfwidth=1e6)
    base.update(kw)
    with pytest.raises(ValidationError):
        EnsembleConfig(**base)


def test_defect_validation():
    with pytest.raises(ValidationError):
        TlsDefect(F_R, gamma1=3e3, gamma2=1e3, omega0j_over_2pi=OM)
    with pytest.raises(ValidationError):
        TlsDefect(-1.0, 1e3, 1e3, OM)


def test_config_dict_round_trip():
    cfg = EnsembleConfig(n_defects=7, band_center=F_R, band_halfwidth=1e6, omega0_dist=(1e3, 5e4),
                         gamma1_rule=("loguniform", (1e2, 1e4)), seed=9)
    assert EnsembleConfig.from_dict(cfg.to_dict()) == cfg


# ---- steady state -------------------------------------------------------------------

def test_sigma_z_limits():
    d = TlsDefect(F_R + 2e3, gamma1=1e3, gamma2=1e3, omega0j_over_2pi=OM)
    th = -thermal(d.f_j)
    assert steady_state_sigma_z(d, DriveSpec(F_R, 0.0), T) == th
    assert abs(steady_state_sigma_z(d, DriveSpec(d.f_j, 1e12), T)) < 1e-12
    assert steady_state_sigma_z(d, DriveSpec(d.f_j + 1e12, 10.0), T) == pytest.approx(th, rel=1e-12)


@given(st.floats(1e6, 2e10), st.floats(1.0, 1e7), st.floats(0.01, 1.0), st.floats(-1e7, 1e7),
       st.floats(0.0, 1e8), st.floats(1e-3, 2.0))
def test_sigma_z_range(f, g2, frac, det, n, temp):
    d = TlsDefect(f, gamma1=2 * g2 * frac, gamma2=g2, omega0j_over_2pi=OM)
    sz = steady_state_sigma_z(d, DriveSpec(max(f + det, 1.0), n), temp)
    assert -1.0 <= sz <= 0.0


# ---- complex shift ---------------------------------------------------------------------

def test_saturated_defect_adds_nothing():
    d = TlsDefect(F_R + 500.0, gamma1=1e3, gamma2=1e3, omega0j_over_2pi=OM)
    free = ensemble_shift([d], F_R, DriveSpec(d.f_j, 0.0), T)
    sat = ensemble_shift([d], F_R, DriveSpec(d.f_j, 1e30), T)
    assert abs(sat) < 1e-20 * abs(free)


def test_single_thermal_defect_closed_form():
    d = TlsDefect(F_R + 700.0, gamma1=500.0, gamma2=1.2e3, omega0j_over_2pi=OM)
    x = d.f_j - F_R
    expect = (OM**2 / 4) * (-thermal(d.f_j)) * (x - 1j * d.gamma2) / (x**2 + d.gamma2**2)
    got = ensemble_shift([d], F_R, DriveSpec(F_R, 0.0), T)
    assert got == pytest.approx(expect, rel=1e-12)
    assert got.imag > 0  # adds loss


def test_shift_is_additive():
    a = sample_ensemble(EnsembleConfig(n_defects=300, band_center=F_R, band_halfwidth=1e6, seed=1))
    b = sample_ensemble(EnsembleConfig(n_defects=200, band_center=F_R, band_halfwidth=1e6, seed=2))
    drive = DriveSpec(F_R + 1e4, 5.0)
    whole = ensemble_shift(a.concat(b), F_R, drive, T)
    parts = ensemble_shift(a, F_R, drive, T) + ensemble_shift(b, F_R, drive, T)
    assert whole == pytest.approx(parts, rel=1e-12)


def test_list_and_array_forms_agree():
    ens = sample_ensemble(EnsembleConfig(n_defects=50, band_center=F_R, band_halfwidth=1e6, seed=5))
    drive = DriveSpec(F_R, 2.0)
    assert ensemble_shift(list(ens), F_R, drive, T) == ensemble_shift(TlsEnsemble.from_defects(ens), F_R, drive, T)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1e6), st.floats(-1e6, 1e6))
def test_loss_non_negative(seed, n, det):
    ens = sample_ensemble(EnsembleConfig(n_defects=50, band_center=F_R, band_halfwidth=1e6, seed=seed))
    assert ensemble_shift(ens, F_R, DriveSpec(F_R + det, n), T).imag >= 0


# ---- power curve -------------------------------------------------------------------------

def power_cfg(seed=1, n=100_000):
    return EnsembleConfig(n_defects=n, band_center=F_R, band_halfwidth=2000 * G2, seed=seed, **FIXED)


def test_power_curve_monotone_and_positive():
    ens = sample_ensemble(power_cfg(n=20_000))
    n_c = 2 * G2**2 / OM**2
    _, loss = ensemble_power_curve(ens, F_R, np.logspace(-3, 5, 40) * n_c, T)
    assert np.all(loss >= 0)
    assert np.all(np.diff(loss) <= 0)


def test_power_curve_zero_drive_matches_density():
    # continuum estimate: 1/Q = (pi/2) g**2 rho tanh / f_r, rho = N / (2 B),
    # times the Lorentzian weight inside the finite band
    losses = []
    for seed in range(8):
        cfg = power_cfg(seed=seed, n=20_000)
        _, loss = ensemble_power_curve(sample_ensemble(cfg), F_R, [0.0], T)
        losses.append(loss[0])
    losses = np.array(losses)
    rho = cfg.n_defects / (2 * cfg.band_halfwidth)
    inside = 2 / math.pi * math.atan(cfg.band_halfwidth / G2)
    expect = math.pi / 2 * OM**2 * rho * thermal(F_R) / F_R * inside
    se = losses.std(ddof=1) / math.sqrt(losses.size)
    assert abs(losses.mean() - expect) < 3 * se + 1e-3 * expect


def test_power_curve_fits_unit_exponent():
    ens = sample_ensemble(power_cfg())
    n_c = 2 * G2**2 / OM**2
    n = np.logspace(-3, 4, 30) * n_c
    _, loss = ensemble_power_curve(ens, F_R, n, T)
    res = fit_saturation_curve(n, loss, F_R, T)
    assert res.converged
    assert res["phi"] == pytest.approx(1.0, abs=0.1)
    assert res["n_c"] == pytest.approx(n_c, rel=0.2)


def test_saturation_fit_validation():
    with pytest.raises(ValidationError):
        fit_saturation_curve([1, 2, 3], [1, 1, 1], F_R, T)
    with pytest.raises(ValidationError):
        fit_saturation_curve([1, 2, 3, 4], [0, 0, 0, 0], F_R, T)


# ---- pump sweep ---------------------------------------------------------------------------

def pump_cfg(seed=0, n=100_000):
    return EnsembleConfig(n_defects=n, band_center=F_R, band_halfwidth=7.5e5, seed=seed, **FIXED)


def test_pump_sweep_antisymmetric_within_mc_error():
    n_bar = 10.0
    w = OM * math.sqrt(n_bar)
    d = np.linspace(w / 10, 3 * w, 12)
    grid = np.concatenate([-d[::-1], d])
    sums = []
    for seed in range(8):
        _, y = ensemble_pump_sweep(sample_ensemble(pump_cfg(seed)), F_R, grid, n_bar, T)
        sums.append(y[d.size:] + y[:d.size][::-1])
    sums = np.array(sums)
    se = sums.std(axis=0, ddof=1) / math.sqrt(len(sums))
    assert np.all(np.abs(sums.mean(axis=0)) < 3 * se)


def test_pump_sweep_sign_and_zero_drive():
    ens = sample_ensemble(pump_cfg(n=20_000))
    grid = np.linspace(-2e5, 2e5, 9)
    _, flat = ensemble_pump_sweep(ens, F_R, grid, 0.0, T)
    assert np.all(flat == 0.0)
    _, y = ensemble_pump_sweep(ens, F_R, [-5e4, 5e4], 10.0, T)
    assert y[1] > 0 > y[0]  # same sign convention as the closed form


def test_pump_sweep_band_coverage():
    ens = sample_ensemble(pump_cfg(n=1000))
    with pytest.raises(ValidationError, match="does not cover"):
        ensemble_pump_sweep(ens, F_R, [-7e5, 7e5], 10.0, T)


def test_extremum_location_near_closed_form():
    # the prefactor is not asserted, but the location should be of the same order
    loc = pump_extremum_location(pump_cfg(n=50_000), F_R, 10.0, seeds=range(4))
    closed = OM * math.sqrt(10.0) / math.sqrt(6)
    assert 0.3 * closed < loc < 3 * closed
