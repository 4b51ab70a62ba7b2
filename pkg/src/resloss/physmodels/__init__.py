"""Closed-form forward models for TLS-limited superconducting resonators."""
from .constants import CONST, Constants
from .tls import (
    TlsLossParams,
    TwoToneParams,
    dipole_moment,
    relative_tls_density,
    thermal_tls_shift,
    tls_power_loss,
    two_tone_extrema,
    two_tone_extremum_magnitude,
    two_tone_shift,
)
from .superconductor import (
    SuperconductorParams,
    kinetic_fraction_response,
    mb_sigma1,
    mb_sigma2,
    niobium_reference,
    surface_impedance,
    total_thermal_shift,
)
from .cavity import (
    PUMP_LINE_GAIN_DB,
    RESONATOR_COUPLINGS,
    VNA_LINE_GAIN_DB,
    CalibrationParams,
    CavitySystemParams,
    coupling_for,
    dbm_to_watts,
    dressed_frequency,
    kappa_eff,
    loaded_linewidth,
    photon_number,
    photons_from_input_power,
    s21_approx,
    s21_approx_as_printed,
    s21_full,
)

__all__ = [
    "CONST",
    "CalibrationParams",
    "CavitySystemParams",
    "Constants",
    "PUMP_LINE_GAIN_DB",
    "RESONATOR_COUPLINGS",
    "SuperconductorParams",
    "TlsLossParams",
    "TwoToneParams",
    "VNA_LINE_GAIN_DB",
    "coupling_for",
    "dbm_to_watts",
    "dipole_moment",
    "dressed_frequency",
    "kappa_eff",
    "kinetic_fraction_response",
    "loaded_linewidth",
    "mb_sigma1",
    "mb_sigma2",
    "niobium_reference",
    "photon_number",
    "photons_from_input_power",
    "relative_tls_density",
    "s21_approx",
    "s21_approx_as_printed",
    "s21_full",
    "surface_impedance",
    "thermal_tls_shift",
    "tls_power_loss",
    "total_thermal_shift",
    "two_tone_extrema",
    "two_tone_extremum_magnitude",
    "two_tone_shift",
]
