"""Synthetic traces and sweeps with known truth, for fit-recovery checks."""
from __future__ import annotations

from dataclasses import asdict
from typing import Optional

import numpy as np

from ..errors import ValidationError
from ..physmodels.cavity import (
    PUMP_LINE_GAIN_DB,
    CalibrationParams,
    CavitySystemParams,
    dressed_frequency,
    kappa_eff,
    loaded_linewidth,
    s21_approx,
)
from ..physmodels.constants import HBAR, TWO_PI
from ..physmodels.tls import TlsLossParams, TwoToneParams, tls_power_loss
from .sweeps import (
    TemperatureTruth,
    bare_frequency,
    pump_photon_numbers,
    pump_shift_model,
    temperature_shift_model,
)
from .types import ComplexTrace, DeviceInfo, SweepEntry, SweepManifest, TraceBackground

__all__ = ["synth_trace", "synth_sweep", "trace_noise_sigma"]


def trace_noise_sigma(model: np.ndarray, noise_snr_db: float) -> float:
    """Per-quadrature noise sigma for a requested SNR.

    The reference level is the mean off-resonance magnitude, taken at the two
    ends of the grid; the complex noise then has rms ``|S_off| 10**(-snr/20)``.
    """
    if np.isinf(noise_snr_db) and noise_snr_db > 0:
        return 0.0
    s_off = 0.5 * (abs(model[0]) + abs(model[-1]))
    return float(s_off * 10.0 ** (-noise_snr_db / 20.0) / np.sqrt(2.0))


def synth_trace(cav: CavitySystemParams, background: TraceBackground = TraceBackground(),
                noise_snr_db: float = 40.0, n_points: int = 401, span: Optional[float] = None,
                seed: int = 0, metadata: Optional[dict] = None) -> ComplexTrace:
    """Noisy samples of ``background * s21_approx`` around the dressed resonance.

    Parameters
    ----------
    cav : CavitySystemParams
        System in the dispersive regime.
    background : TraceBackground
        Line background; its phase refers to the grid centre.
    noise_snr_db : float
        Off-resonance SNR; ``inf`` gives exact model samples.
    n_points : int
    span : float, optional
        Grid span [Hz]; defaults to 20 loaded linewidths. Must cover at least 10.
    seed : int
    """
    cav.require_dispersive()
    kt = loaded_linewidth(cav) / TWO_PI
    if span is None:
        span = 20.0 * kt
    if not span >= 10.0 * kt * (1 - 1e-12):
        raise ValidationError(f"span {span:.4g} Hz covers fewer than 10 linewidths ({kt:.4g} Hz each)")
    if n_points < 2:
        raise ValidationError("n_points must be >= 2")
    f0 = dressed_frequency(cav)
    f = f0 + np.linspace(-0.5 * span, 0.5 * span, n_points)
    f_ref = 0.5 * (f[0] + f[-1])
    model = background.factor(f, f_ref) * s21_approx(cav, TWO_PI * f)
    sigma = trace_noise_sigma(model, noise_snr_db)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        model = model + sigma * (rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points))
    return ComplexTrace(f, model, dict(metadata or {}))


def _entry_traces(entries, kind, device: DeviceInfo, ref, temperature, snr_db, n_points, seed):
    # replace extracted values by traces generated from them
    out = []
    for i, e in enumerate(entries):
        md = {"resonator": device.resonator}
        if kind == "pump":
            md.update(pump_freq_hz=float(ref + e.control), pump_power_dbm=float(e.pump_power_dbm),
                      temperature_k=float(temperature))
        elif kind == "power":
            md.update(power_dbm=float(e.control), temperature_k=float(temperature))
        else:
            md.update(temperature_k=float(e.control))
        f_bare = bare_frequency(device, e.f_r_hz)
        cav0 = device.cavity(f_bare)
        gamma_r = e.kappa_tot_hz - 2 * kappa_eff(cav0) / TWO_PI
        if not gamma_r > 0:
            raise ValidationError(f"entry {i}: kappa_tot below 2 kappa_eff, cannot build a trace")
        tr = synth_trace(device.cavity(f_bare, gamma_r), TraceBackground(), snr_db, n_points,
                         seed=seed + 1000 + i, metadata=md)
        out.append(SweepEntry(control=e.control, trace=tr, pump_power_dbm=e.pump_power_dbm))
    return out


def _power_sweep(truth: TlsLossParams, n_grid, noise, rng, device, cal):
    n_grid = np.asarray(n_grid, dtype=float)
    if np.any(~(n_grid > 0)):
        raise ValidationError("photon-number grid must be > 0")
    f_bare = bare_frequency(device, truth.f_r)
    cav0 = device.cavity(f_bare)
    ke = kappa_eff(cav0)  # rad/s
    inv_q = tls_power_loss(truth, n_grid)
    gamma_r = inv_q * truth.f_r
    kt = 2 * ke / TWO_PI + gamma_r
    # source power that yields n at resonance given the true linewidth
    p_in = n_grid * HBAR * TWO_PI * f_bare * (TWO_PI * kt) ** 2 / (4 * ke)
    p_dbm = 10 * np.log10(p_in) + 30 - cal.gain_in_db
    sig = noise * gamma_r
    kt_meas = kt + sig * rng.standard_normal(n_grid.size)
    order = np.argsort(p_dbm)
    entries = [
        SweepEntry(control=float(p_dbm[i]), f_r_hz=float(truth.f_r), kappa_tot_hz=float(kt_meas[i]),
                   f_r_stderr_hz=0.0, kappa_tot_stderr_hz=float(sig[i]) if noise > 0 else None)
        for i in order
    ]
    truth_d = {"inv_q_tls": truth.inv_q_tls, "n_c": truth.n_c, "phi": truth.phi, "inv_q_r": truth.inv_q_r}
    return entries, truth_d, truth.temperature, None


def _pump_sweep(truth: TwoToneParams, deltas, noise, rng, device, cal, pump_power_dbm, kappa_tot_hz):
    deltas = np.sort(np.asarray(deltas, dtype=float))
    ref = truth.f_r
    n_bar = pump_photon_numbers(device, cal, pump_power_dbm, ref, kappa_tot_hz, deltas)
    model = pump_shift_model(truth.f_r, truth.temperature, deltas, n_bar,
                             truth.inv_q_tls, truth.omega0_over_2pi, truth.heating_eta)
    sig = noise * float(np.max(np.abs(model)))
    f_meas = ref + model + sig * rng.standard_normal(deltas.size)
    entries = [
        SweepEntry(control=float(d), f_r_hz=float(f), kappa_tot_hz=float(kappa_tot_hz),
                   pump_power_dbm=float(pump_power_dbm))
        for d, f in zip(deltas, f_meas)
    ]
    truth_d = {"inv_q_tls": truth.inv_q_tls, "omega0_over_2pi": truth.omega0_over_2pi,
               "heating_eta": truth.heating_eta}
    return entries, truth_d, truth.temperature, ref


def _temperature_sweep(truth: TemperatureTruth, temps, noise, rng, kappa_tot_hz):
    temps = np.sort(np.asarray(temps, dtype=float))
    model = temperature_shift_model(truth.f_r, truth.superconductor, temps, truth.inv_q_tls,
                                    truth.superconductor.alpha)
    sig = noise * float(np.max(np.abs(model)))
    f_meas = truth.f_r + model + sig * rng.standard_normal(temps.size)
    entries = [SweepEntry(control=float(t), f_r_hz=float(f), kappa_tot_hz=float(kappa_tot_hz))
               for t, f in zip(temps, f_meas)]
    truth_d = {"inv_q_tls": truth.inv_q_tls, "alpha": truth.superconductor.alpha}
    return entries, truth_d, float(temps[0]), truth.f_r


def synth_sweep(kind: str, truth, grid, noise: float, seed: int = 0,
                device: Optional[DeviceInfo] = None, calibration: Optional[CalibrationParams] = None,
                pump_power_dbm: float = -30.0, kappa_tot_hz: float = 50e3,
                traces: bool = False, trace_snr_db: float = 60.0, trace_points: int = 201) -> SweepManifest:
    """Forward model of a sweep pipeline plus Gaussian noise.

    ========== ===================== ====================== ==========================
    kind       truth                 grid                   noise
    ========== ===================== ====================== ==========================
    power      TlsLossParams         photon numbers n       fraction of gamma_r per point
    pump       TwoToneParams         pump detunings [Hz]    fraction of max |shift|
    temperature TemperatureTruth     temperatures [K]       fraction of max |shift|
    ========== ===================== ====================== ==========================

    The truth values are embedded in ``manifest.truth`` under the names the
    matching fit reports. With ``traces=True`` every entry carries a
    synthetic trace built from its (noisy) f_r and kappa_tot instead of the
    extracted values.
    """
    if not noise >= 0:
        raise ValidationError("noise must be >= 0")
    device = device or DeviceInfo()
    rng = np.random.default_rng(seed)
    sc = None
    pump = None
    if kind == "power":
        if not isinstance(truth, TlsLossParams):
            raise ValidationError("power sweeps need TlsLossParams truth")
        cal = calibration or CalibrationParams()
        entries, truth_d, temp, ref = _power_sweep(truth, grid, noise, rng, device, cal)
    elif kind == "pump":
        if not isinstance(truth, TwoToneParams):
            raise ValidationError("pump sweeps need TwoToneParams truth")
        cal = calibration or CalibrationParams(gain_in_db=PUMP_LINE_GAIN_DB)
        entries, truth_d, temp, ref = _pump_sweep(truth, grid, noise, rng, device, cal,
                                                  pump_power_dbm, kappa_tot_hz)
        pump = pump_power_dbm
    elif kind == "temperature":
        if not isinstance(truth, TemperatureTruth):
            raise ValidationError("temperature sweeps need TemperatureTruth truth")
        cal = calibration or CalibrationParams()
        entries, truth_d, temp, ref = _temperature_sweep(truth, grid, noise, rng, kappa_tot_hz)
        sc = {k: v for k, v in asdict(truth.superconductor).items() if v is not None}
    else:
        raise ValidationError(f"unknown sweep kind {kind!r}")
    if traces:
        entries = _entry_traces(entries, kind, device, ref, temp, trace_snr_db, trace_points, seed)
    truth_d = {k: float(v) for k, v in truth_d.items()}
    return SweepManifest(kind=kind, entries=entries, device=device, calibration=cal, temperature_k=temp,
                         reference_f_r_hz=ref, pump_power_dbm=pump, superconductor=sc, truth=truth_d)
