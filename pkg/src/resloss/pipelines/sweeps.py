"""Global fits over power, pump-detuning and temperature sweeps."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import IdentifiabilityWarning, ValidationError
from ..fitcore import FitProblem, FitResult, lm_fit
from ..physmodels.cavity import CalibrationParams, kappa_eff, photon_number
from ..physmodels.constants import H, K_B, TWO_PI
from ..physmodels.superconductor import SuperconductorParams, kinetic_fraction_response, niobium_reference
from ..physmodels.tls import TwoToneParams, thermal_tls_shift, two_tone_shift
from .trace import fit_trace
from .types import DeviceInfo, SweepManifest

__all__ = [
    "TemperatureTruth",
    "bare_frequency",
    "extract_resonances",
    "pump_photon_numbers",
    "pump_shift_model",
    "temperature_shift_model",
    "fit_power_sweep",
    "fit_pump_sweep",
    "fit_temperature_sweep",
    "POWER_PARAMS",
    "PUMP_PARAMS",
    "TEMPERATURE_PARAMS",
]

log = logging.getLogger(__name__)

POWER_PARAMS = ("inv_q_tls", "n_c", "phi", "inv_q_r")
PUMP_PARAMS = ("inv_q_tls", "omega0_over_2pi", "heating_eta")
TEMPERATURE_PARAMS = ("inv_q_tls", "alpha")

MIN_POWER_POINTS = 6
MIN_POWER_DECADES = 3.0


@dataclass(frozen=True)
class TemperatureTruth:
    """Ground truth of a temperature sweep; ``superconductor.alpha`` is the kinetic fraction."""

    f_r: float
    inv_q_tls: float
    superconductor: SuperconductorParams


def bare_frequency(device: DeviceInfo, f_measured: float) -> float:
    """Undo the dispersive pull: solve ``f + g**2/(f - f_c) = f_measured``."""
    g2 = device.g_over_2pi**2
    f = f_measured
    for _ in range(50):
        f_new = f_measured - g2 / (f - device.f_c)
        if abs(f_new - f) <= 1e-6:
            return f_new
        f = f_new
    return f


def _flag(result: FitResult, msg: str):
    warnings.warn(msg, IdentifiabilityWarning, stacklevel=3)
    result.warnings.append(msg)


def _check_identifiable(result: FitResult, names, max_rel: float = 1.0):
    if not result.covariance_available:
        _flag(result, "covariance unavailable; parameters " + ", ".join(names) + " are not identifiable")
        return
    for name in names:
        v, e = result[name], result.err(name)
        if not e <= max_rel * abs(v):
            _flag(result, f"{name} is poorly constrained: stderr {e:.3g} exceeds {max_rel:g} x |value| {abs(v):.3g}")


def extract_resonances(manifest: SweepManifest):
    """Per-entry (f_r, f_r stderr, kappa_tot, kappa_tot stderr), fitting traces where needed.

    Missing stderr values come back as NaN.
    """
    rows = []
    for i, e in enumerate(manifest.entries):
        if e.f_r_hz is not None:
            rows.append((e.f_r_hz, e.f_r_stderr_hz, e.kappa_tot_hz, e.kappa_tot_stderr_hz))
            continue
        res = fit_trace(e.trace, f_c=manifest.device.f_c)
        if not res.converged:
            log.warning("entry %d: trace fit did not converge", i)
        rows.append((res["f_r_hz"], res.err("f_r_hz"), res["kappa_tot_hz"], res.err("kappa_tot_hz")))
    arr = np.array([[np.nan if v is None else float(v) for v in row] for row in rows], dtype=float)
    if arr.size == 0:
        raise ValidationError("sweep has no entries")
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


# ---------------------------------------------------------------- power


def fit_power_sweep(manifest: SweepManifest) -> FitResult:
    """Fit TLS saturation to internal loss versus photon number.

    Each point's loss is ``gamma_r / f_r`` with ``gamma_r = kappa_tot - 2 kappa_eff``
    and its photon number follows from the source power (the control value)
    through :func:`photon_number` at the bare resonance. Points are weighted by
    inverse variance when every entry has a kappa_tot stderr.
    """
    if manifest.kind != "power":
        raise ValidationError(f"expected a power sweep, got {manifest.kind!r}")
    if len(manifest.entries) < MIN_POWER_POINTS:
        raise ValidationError(f"power sweep needs at least {MIN_POWER_POINTS} points, got {len(manifest.entries)}")
    dev, cal = manifest.device, manifest.calibration
    f_r, _, kt, kt_err = extract_resonances(manifest)
    f_ref = float(np.median(f_r))
    f_bare = bare_frequency(dev, f_ref)
    ke = kappa_eff(dev.cavity(f_bare)) / TWO_PI
    gamma_r = kt - 2 * ke
    bad = np.flatnonzero(~(gamma_r > 0))
    if bad.size:
        raise ValidationError(f"entry {bad[0]}: kappa_tot {kt[bad[0]]:.6g} Hz is not above 2 kappa_eff = {2 * ke:.6g} Hz")
    n_bar = np.array([
        photon_number(dev.cavity(f_bare, g), cal, p, TWO_PI * f_bare)
        for p, g in zip(manifest.controls, gamma_r)
    ])
    decades = math.log10(n_bar.max() / n_bar.min())
    if decades < MIN_POWER_DECADES:
        raise ValidationError(f"photon numbers span {decades:.2f} decades; at least {MIN_POWER_DECADES:g} are needed")
    y = gamma_r / f_r
    y_err = kt_err / f_r
    weights = 1.0 / y_err**2 if np.all(y_err > 0) else None
    thermal = math.tanh(H * f_ref / (2 * K_B * manifest.temperature_k))

    order = np.argsort(n_bar)
    ys = y[order]
    ns = n_bar[order]
    q_r0 = max(0.5 * ys.min(), 1e-3 * ys.max())
    q_tls0 = max(ys.max() - q_r0, 1e-3 * ys.max()) / thermal
    # n at which the TLS part has dropped by 1/sqrt(2)
    excess = (ys - q_r0) / (q_tls0 * thermal)
    below = np.flatnonzero(excess <= 1 / math.sqrt(2))
    n_c0 = float(ns[below[0]]) if below.size else float(ns[-1])

    def residual(p, _):
        q_tls, n_c, phi, q_r = p
        return q_tls * thermal / np.sqrt(1.0 + (n_bar / n_c) ** phi) + q_r - y

    problem = FitProblem(
        residual=residual,
        initial_params=[q_tls0, n_c0, 0.7, q_r0],
        lower_bounds=[0.0, 0.0, 0.0, 0.0],
        upper_bounds=[np.inf, np.inf, 2.0, np.inf],
        weights=weights,
        param_names=list(POWER_PARAMS),
        max_iterations=500,
    )
    res = lm_fit(problem)
    if n_bar.min() > res["n_c"]:
        _flag(res, f"sweep starts above the fitted critical photon number ({res['n_c']:.3g}); "
                   "inv_q_tls and n_c are degenerate in the saturated regime")
    elif n_bar.max() < res["n_c"]:
        _flag(res, f"sweep ends below the fitted critical photon number ({res['n_c']:.3g}); "
                   "n_c and phi are not constrained")
    _check_identifiable(res, ("inv_q_tls", "n_c"), max_rel=0.5)
    res.extras.update(
        kind="power",
        control=manifest.controls,
        n_bar=n_bar,
        inv_q_i=y,
        inv_q_i_stderr=y_err,
        model=residual(res.params, None) + y,
        f_r_hz=f_ref,
    )
    return res


# ---------------------------------------------------------------- pump


def pump_photon_numbers(device: DeviceInfo, cal: CalibrationParams, pump_power_dbm: float,
                        f_r_measured: float, kappa_tot_hz: float, deltas):
    """Intra-resonator photons from a pump detuned by `deltas` [Hz] from resonance."""
    f_bare = bare_frequency(device, f_r_measured)
    ke = kappa_eff(device.cavity(f_bare)) / TWO_PI
    gamma_r = kappa_tot_hz - 2 * ke
    if not gamma_r > 0:
        raise ValidationError(f"kappa_tot {kappa_tot_hz:.6g} Hz is not above 2 kappa_eff = {2 * ke:.6g} Hz")
    cav = device.cavity(f_bare, gamma_r)
    return np.asarray(photon_number(cav, cal, pump_power_dbm, TWO_PI * (f_bare + np.asarray(deltas, dtype=float))))


def pump_shift_model(f_r, temperature, deltas, n_bar, inv_q_tls, omega0_over_2pi, heating_eta=0.0):
    """Hole-burning shift plus the optional heating term [Hz].

    Heating raises the TLS temperature to ``T0 + eta n`` and adds
    ``thermal_tls_shift(T0 + eta n) - thermal_tls_shift(T0)``.
    """
    p = TwoToneParams(f_r=f_r, inv_q_tls=1.0, omega0_over_2pi=max(omega0_over_2pi, 1e-300),
                      temperature=temperature)
    out = inv_q_tls * two_tone_shift(p, deltas, n_bar)
    if heating_eta > 0:
        t_eff = temperature + heating_eta * np.asarray(n_bar, dtype=float)
        out = out + thermal_tls_shift(f_r, inv_q_tls, t_eff) - thermal_tls_shift(f_r, inv_q_tls, temperature)
    return out


def _symmetric(c):
    c = np.sort(c)
    return np.allclose(c, -c[::-1], rtol=0, atol=1e-9 * max(np.max(np.abs(c)), 1.0))


def fit_pump_sweep(manifest: SweepManifest, heating: bool = False, two_stage: bool = False) -> FitResult:
    """Fit the hole-burning shift versus pump detuning.

    Parameters
    ----------
    manifest : SweepManifest
        Pump sweep; controls are detunings [Hz] from the unpumped resonance
        ``reference_f_r_hz`` and ``pump_power_dbm`` is the source power.
    heating : bool
        Fit the heating coefficient jointly. Otherwise it is held at 0.
    two_stage : bool
        With ``heating``, fit the hole-burning parameters first with no
        heating and then only the heating coefficient on top of them.
    """
    if manifest.kind != "pump":
        raise ValidationError(f"expected a pump sweep, got {manifest.kind!r}")
    dev, cal = manifest.device, manifest.calibration
    f_r, _, kt, _ = extract_resonances(manifest)
    deltas = manifest.controls
    if len(deltas) < 4:
        raise ValidationError("pump sweep needs at least 4 points")
    if not _symmetric(deltas):
        warnings.warn("pump detuning grid is not symmetric about resonance", UserWarning, stacklevel=2)
    ref = manifest.reference_f_r_hz
    if ref is None:
        raise ValidationError("pump sweep manifest needs reference_f_r_hz (unpumped resonance)")
    p_pump = manifest.pump_power_dbm
    if p_pump is None:
        p_pump = manifest.entries[0].pump_power_dbm
    if p_pump is None:
        raise ValidationError("pump sweep manifest needs pump_power_dbm")
    kt_ref = float(np.nanmedian(kt))
    n_bar = pump_photon_numbers(dev, cal, p_pump, ref, kt_ref, deltas)
    y = f_r - ref
    t0 = manifest.temperature_k
    tanh_f = math.tanh(H * ref / (K_B * t0))

    odd = 0.5 * (y - y[::-1]) if _symmetric(deltas) and np.all(np.diff(deltas) > 0) else y
    i_ext = int(np.argmax(np.abs(odd)))
    mag = abs(odd[i_ext])
    flat = not mag > 0
    q0 = max(mag, 1e-12 * ref) * 8 * math.sqrt(3) / (ref * tanh_f)
    d_ext = max(abs(deltas[i_ext]), np.min(np.abs(np.diff(deltas))))
    om0 = math.sqrt(6) * d_ext / math.sqrt(max(n_bar[i_ext], 1e-300))
    eta0 = 0.01 / float(np.max(n_bar))

    def residual(p, _):
        return pump_shift_model(ref, t0, deltas, n_bar, p[0], p[1], p[2]) - y

    def problem(p0, fixed):
        return FitProblem(
            residual=residual,
            initial_params=p0,
            lower_bounds=[0.0, 0.0, 0.0],
            upper_bounds=[np.inf] * 3,
            x_scale=[q0, om0, eta0],
            fixed=fixed,
            param_names=list(PUMP_PARAMS),
            max_iterations=400,
        )

    if heating and two_stage:
        first = lm_fit(problem([q0, om0, 0.0], [False, False, True]))
        res = lm_fit(problem([first.params[0], first.params[1], eta0], [True, True, False]))
        cov = res.covariance.copy()
        cov[:2, :2] = first.covariance[:2, :2]
        res.covariance = cov
        res.stderr = np.where(np.arange(3) < 2, first.stderr, res.stderr)
        res.covariance_available = first.covariance_available and res.covariance_available
        res.warnings = first.warnings + res.warnings
        res.converged = first.converged and res.converged
        res.n_iterations += first.n_iterations
        res.extras["stage1_chi2"] = first.chi2
    elif heating:
        res = lm_fit(problem([q0, om0, eta0], [False, False, False]))
    else:
        res = lm_fit(problem([q0, om0, 0.0], [False, False, True]))
    if flat:
        _flag(res, "pump sweep data are flat; omega0_over_2pi is not identifiable")
    else:
        _check_identifiable(res, ("omega0_over_2pi",))
    res.extras.update(
        kind="pump",
        control=deltas,
        n_bar=n_bar,
        shift=y,
        model=residual(res.params, None) + y,
        f_r_hz=ref,
    )
    return res


# ---------------------------------------------------------------- temperature


def temperature_shift_model(f_r, sc: SuperconductorParams, temps, inv_q_tls, alpha):
    """TLS plus quasiparticle shift [Hz] relative to the T -> 0 resonance."""
    temps = np.asarray(temps, dtype=float)
    return inv_q_tls * thermal_tls_shift(f_r, 1.0, temps) + alpha * kinetic_fraction_response(sc, f_r, temps)


def _superconductor_from(manifest: SweepManifest, sc: Optional[SuperconductorParams]):
    if sc is not None:
        return sc
    if manifest.superconductor:
        d = dict(manifest.superconductor)
        d.pop("alpha", None)
        return SuperconductorParams(**d)
    return niobium_reference()


def fit_temperature_sweep(manifest: SweepManifest, sc: Optional[SuperconductorParams] = None) -> FitResult:
    """Fit TLS loss and kinetic-inductance fraction to the resonance shift versus T.

    With ``reference_f_r_hz`` set, shifts are taken against it as the T -> 0
    frequency; otherwise against the coldest entry, and the model is
    referenced to that temperature as well. The gap and other film
    parameters come from `sc` (or the manifest, or a Nb reference film).
    ``alpha`` is bounded to (-1, 1) so that a vanishing fraction is not a
    boundary value.
    """
    if manifest.kind != "temperature":
        raise ValidationError(f"expected a temperature sweep, got {manifest.kind!r}")
    sc = _superconductor_from(manifest, sc)
    f_r, _, _, _ = extract_resonances(manifest)
    temps = manifest.controls
    order = np.argsort(temps)
    if len(temps) < 3:
        raise ValidationError("temperature sweep needs at least 3 points")
    ref = manifest.reference_f_r_hz
    if ref is None:
        i0 = order[0]
        f_model = f_r[i0]
        y = f_r - f_r[i0]
    else:
        i0 = None
        f_model = ref
        y = f_r - ref
    a = thermal_tls_shift(f_model, 1.0, temps)
    b = kinetic_fraction_response(sc, f_model, temps)
    if i0 is not None:
        a = a - a[i0]
        b = b - b[i0]

    # linear in both parameters: seed with the unconstrained solution
    sol = np.linalg.lstsq(np.column_stack([a, b]), y, rcond=None)[0]
    q0 = float(sol[0]) if sol[0] > 0 else 1e-6
    al0 = float(np.clip(sol[1], -0.9, 0.9))
    if al0 == 0.0:
        al0 = 1e-6

    def residual(p, _):
        return p[0] * a + p[1] * b - y

    res = lm_fit(FitProblem(
        residual=residual,
        initial_params=[q0, al0],
        lower_bounds=[0.0, -1.0],
        upper_bounds=[np.inf, 1.0],
        x_scale=[q0, 1.0],
        param_names=list(TEMPERATURE_PARAMS),
    ))
    t_lo, t_hi = float(temps.min()), float(temps.max())
    if t_lo > 0.0105 or t_hi < 1.5:
        _flag(res, f"temperature span [{t_lo:.3g}, {t_hi:.3g}] K is narrower than [0.01, 1.5] K; "
                   "TLS and quasiparticle terms may not separate")
    _check_identifiable(res, ("inv_q_tls",))
    res.extras.update(
        kind="temperature",
        control=temps,
        shift=y,
        model=residual(res.params, None) + y,
        f_r_hz=f_model,
    )
    return res
