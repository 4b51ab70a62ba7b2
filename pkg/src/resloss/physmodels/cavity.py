"""Cavity-coupled resonator transmission and photon-number calibration.

A lumped resonator (frequency f_r, internal loss gamma_r) couples with rate g
to a two-port cavity mode (f_c, symmetric port coupling kappa). Public rates
are cyclic (Hz); formulas are evaluated in angular units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .constants import HBAR, TWO_PI

__all__ = [
    "CavitySystemParams",
    "CalibrationParams",
    "RESONATOR_COUPLINGS",
    "VNA_LINE_GAIN_DB",
    "PUMP_LINE_GAIN_DB",
    "coupling_for",
    "s21_full",
    "s21_approx",
    "s21_approx_as_printed",
    "kappa_eff",
    "dressed_frequency",
    "loaded_linewidth",
    "photon_number",
    "photons_from_input_power",
    "dbm_to_watts",
]

# cavity-resonator couplings g/2pi [Hz] per resonator design
RESONATOR_COUPLINGS = {
    "Res 1": 55e6,
    "Res 2": 30e6,
    "Res 3": 25e6,
    "Res 4": 45e6,
    "Res 5": 35e6,
    "Res 6": 40e6,
}
VNA_LINE_GAIN_DB = -94.0
PUMP_LINE_GAIN_DB = -44.0


def coupling_for(resonator: str) -> float:
    """g/2pi [Hz] for a named resonator design."""
    try:
        return RESONATOR_COUPLINGS[resonator]
    except KeyError:
        raise ValidationError(
            f"unknown resonator {resonator!r}; give g_over_2pi explicitly"
        ) from None


@dataclass(frozen=True)
class CavitySystemParams:
    f_c: float
    f_r: float
    g_over_2pi: float
    kappa_over_2pi: float
    gamma_r_over_2pi: float
    gamma_c_over_2pi: float = 0.0

    def __post_init__(self):
        if not (self.f_c > 0 and self.f_r > 0):
            raise ValidationError("f_c and f_r must be > 0")
        if self.f_c == self.f_r:
            raise ValidationError("f_c must differ from f_r")
        for name in ("g_over_2pi", "kappa_over_2pi", "gamma_r_over_2pi", "gamma_c_over_2pi"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def dispersive(self) -> bool:
        return abs(self.f_r - self.f_c) >= 10 * self.g_over_2pi

    def require_dispersive(self):
        if not self.dispersive:
            raise ValidationError(
                f"dispersive approximation needs |f_r - f_c| >= 10 g; got "
                f"|{self.f_r - self.f_c:.4g}| Hz with g/2pi = {self.g_over_2pi:.4g} Hz"
            )


@dataclass(frozen=True)
class CalibrationParams:
    """Input-line gain [dB, <= 0] and the field magnitude at one photon [V/m]."""

    gain_in_db: float = VNA_LINE_GAIN_DB
    field_at_one_photon: float = 0.1

    def __post_init__(self):
        if not self.gain_in_db <= 0:
            raise ValidationError("gain_in_db must be <= 0")
        if not self.field_at_one_photon > 0:
            raise ValidationError("field_at_one_photon must be > 0")


def _angular(cav: CavitySystemParams):
    return (
        TWO_PI * cav.f_c,
        TWO_PI * cav.f_r,
        TWO_PI * cav.g_over_2pi,
        TWO_PI * cav.kappa_over_2pi,
        TWO_PI * cav.gamma_r_over_2pi,
    )


def s21_full(cav: CavitySystemParams, omega):
    """Exact two-mode transmission for symmetric ports and a lossless cavity.

    ``S21 = k/(k - i Dc) * (1 + g**2 / ((k - i Dc)(gamma_r/2 - i Dr) + g**2))``
    """
    if not cav.kappa_over_2pi > 0:
        raise ValidationError("kappa must be > 0")
    w_c, w_r, g, k, gr = _angular(cav)
    w = np.asarray(omega, dtype=float)
    dc = w - w_c
    dr = w - w_r
    cav_term = k / (k - 1j * dc)
    out = cav_term * (1 + g**2 / ((k - 1j * dc) * (gr / 2 - 1j * dr) + g**2))
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def kappa_eff(cav: CavitySystemParams) -> float:
    """Effective resonator-port coupling ``g**2 kappa / (w_r - w_c)**2`` [rad/s]."""
    cav.require_dispersive()
    w_c, w_r, g, k, _ = _angular(cav)
    return g**2 * k / (w_r - w_c) ** 2


def dressed_frequency(cav: CavitySystemParams) -> float:
    """Dispersively shifted resonator frequency ``f_r + g**2/(f_r - f_c)`` [Hz]."""
    cav.require_dispersive()
    return cav.f_r + cav.g_over_2pi**2 / (cav.f_r - cav.f_c)


def loaded_linewidth(cav: CavitySystemParams) -> float:
    """kappa_tot = 2 kappa_eff + gamma_r [rad/s]."""
    return 2 * kappa_eff(cav) + TWO_PI * cav.gamma_r_over_2pi


def s21_approx(cav: CavitySystemParams, omega):
    """Dispersive-limit transmission near the dressed resonance.

    ``S21 ~ i k/Dc - i k_eff / (w - w~_r + i (2 k_eff + gamma_r)/2)``.

    This is the leading term of :func:`s21_full` for ``|Dc| >> g, k``. It is
    the negative of :func:`s21_approx_as_printed`; the two differ only by a
    global phase of pi, which a fitted phase offset absorbs.
    """
    return -s21_approx_as_printed(cav, omega)


def s21_approx_as_printed(cav: CavitySystemParams, omega):
    """``-i k/Dc + i k_eff / (w - w~_r + i (2 k_eff + gamma_r)/2)``."""
    cav.require_dispersive()
    w_c, w_r, g, k, gr = _angular(cav)
    ke = kappa_eff(cav)
    w_t = TWO_PI * dressed_frequency(cav)
    w = np.asarray(omega, dtype=float)
    out = -1j * k / (w - w_c) + 1j * ke / (w - w_t + 0.5j * (2 * ke + gr))
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def photons_from_input_power(cav: CavitySystemParams, p_in_w, omega):
    """Intra-resonator photon number for power `p_in_w` [W] at the cavity port.

    ``n = P_in/(hbar w_r) * 4 k_eff / ((2 k_eff + gamma_r)**2 + 4 (w - w_r)**2)``

    Absolute values carry the uncertainty of the line attenuation and of
    kappa_eff; ratios between points of one sweep do not.
    """
    _, w_r, _, _, gr = _angular(cav)
    ke = kappa_eff(cav)
    w = np.asarray(omega, dtype=float)
    p = np.asarray(p_in_w, dtype=float)
    out = p / (HBAR * w_r) * 4 * ke / ((2 * ke + gr) ** 2 + 4 * (w - w_r) ** 2)
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def photon_number(cav: CavitySystemParams, cal: CalibrationParams, p_source_dbm, omega):
    """Photon number for source power `p_source_dbm` attenuated by ``cal.gain_in_db``."""
    p_in = dbm_to_watts(np.asarray(p_source_dbm, dtype=float) + cal.gain_in_db)
    return photons_from_input_power(cav, p_in, omega)
