"""Two-level-system closed forms: power saturation, two-tone shift, thermal shift.

Conventions: public frequencies and rates are cyclic (Hz). The single-photon
Rabi frequency is stored as ``omega0_over_2pi``; inside formulas it enters as
the angular rate ``2*pi*omega0_over_2pi`` next to the angular detuning
``2*pi*delta``, so the dimensionless ratio of the two is unit-independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ValidationError
from ..specfun import digamma
from .constants import E_CHARGE, H, HBAR, K_B, TWO_PI

__all__ = [
    "TlsLossParams",
    "TwoToneParams",
    "tls_power_loss",
    "two_tone_shift",
    "two_tone_extrema",
    "two_tone_extremum_magnitude",
    "thermal_tls_shift",
    "dipole_moment",
    "relative_tls_density",
]


@dataclass(frozen=True)
class TlsLossParams:
    """State of the TLS power-saturation loss model.

    Attributes
    ----------
    inv_q_tls : float
        TLS loss 1/Q_TLS.
    n_c : float
        Critical photon number.
    phi : float
        Saturation exponent (1 for non-interacting TLS in uniform fields).
    inv_q_r : float
        Residual, power-independent loss 1/Q_r.
    f_r : float
        Resonance frequency [Hz].
    temperature : float
        Bath temperature [K].
    """

    inv_q_tls: float
    n_c: float
    phi: float
    inv_q_r: float
    f_r: float
    temperature: float = 0.01

    def __post_init__(self):
        if not (self.inv_q_tls >= 0 and self.inv_q_r >= 0):
            raise ValidationError("inv_q_tls and inv_q_r must be >= 0")
        if not self.n_c > 0:
            raise ValidationError(f"n_c must be > 0, got {self.n_c}")
        if not 0 < self.phi <= 2:
            raise ValidationError(f"phi must lie in (0, 2], got {self.phi}")
        if not (self.f_r > 0 and self.temperature > 0):
            raise ValidationError("f_r and temperature must be > 0")


@dataclass(frozen=True)
class TwoToneParams:
    """State of the pump-detuned (hole-burning) shift model.

    ``heating_eta`` is the effective heating coefficient in K per pump
    photon; it is only used by the pump-sweep pipeline.
    """

    f_r: float
    inv_q_tls: float
    omega0_over_2pi: float
    temperature: float = 0.01
    heating_eta: float = 0.0

    def __post_init__(self):
        if not (self.f_r > 0 and self.temperature > 0):
            raise ValidationError("f_r and temperature must be > 0")
        if not self.omega0_over_2pi > 0:
            raise ValidationError("omega0_over_2pi must be > 0")
        if not (self.heating_eta >= 0 and self.inv_q_tls >= 0):
            raise ValidationError("heating_eta and inv_q_tls must be >= 0")


def tls_power_loss(p: TlsLossParams, n_bar):
    """Internal loss 1/Q_i versus average photon number.

    ``1/Q_i = (1/Q_TLS) tanh(h f_r / 2 k_B T) / sqrt(1 + (n/n_c)**phi) + 1/Q_r``
    """
    n = np.asarray(n_bar, dtype=float)
    if np.any(n < 0) or not np.all(np.isfinite(n)):
        raise ValidationError("n_bar must be finite and >= 0")
    thermal = math.tanh(H * p.f_r / (2 * K_B * p.temperature))
    out = p.inv_q_tls * thermal / np.sqrt(1.0 + (n / p.n_c) ** p.phi) + p.inv_q_r
    return out[()] if out.ndim == 0 else out


def _two_tone_prefactor(p: TwoToneParams) -> float:
    return 3 * math.sqrt(2) * p.f_r * math.tanh(H * p.f_r / (K_B * p.temperature)) * p.inv_q_tls / 8


def two_tone_shift(p: TwoToneParams, delta, n_bar):
    """Resonance shift [Hz] under a strong pump detuned by `delta` [Hz].

    With ``x = Delta / (Omega0 sqrt(n))`` and ``s = sqrt(1 + 1/(2 x**2))`` the
    shift is ``A x (s - 1)/(s + 1)``, ``A = 3 sqrt(2) f_r tanh(h f_r/k_B T) / (8 Q_TLS)``.
    It is evaluated in the algebraically equivalent form
    ``A D a / (2 (sqrt(D**2 + a**2/2) + |D|)**2)`` with ``D = 2 pi delta`` and
    ``a = Omega0 sqrt(n)``, which is finite at ``delta = 0`` and free of
    cancellation at large detuning. The heating contribution is not included.
    """
    d = np.asarray(delta, dtype=float)
    n = np.asarray(n_bar, dtype=float)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(n))):
        raise DomainError("two_tone_shift inputs must be finite")
    if np.any(n < 0):
        raise DomainError("pump photon number must be >= 0")
    big_d = TWO_PI * d
    a = TWO_PI * p.omega0_over_2pi * np.sqrt(n)
    denom = 2.0 * (np.sqrt(big_d**2 + 0.5 * a**2) + np.abs(big_d)) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(denom > 0, big_d * a / np.where(denom > 0, denom, 1.0), 0.0)
    out = _two_tone_prefactor(p) * ratio
    return out[()] if out.ndim == 0 else out


def two_tone_extrema(p: TwoToneParams, n_bar):
    """Detunings [Hz] of the minimum and maximum of :func:`two_tone_shift`."""
    if not np.all(np.asarray(n_bar) > 0):
        raise ValidationError("n_bar must be > 0")
    loc = p.omega0_over_2pi * np.sqrt(n_bar) / math.sqrt(6.0)
    return -loc, loc


def two_tone_extremum_magnitude(p: TwoToneParams) -> float:
    """|shift| at the extrema: ``f_r tanh(h f_r / k_B T) / (8 sqrt(3) Q_TLS)``.

    Substituting ``x = 1/sqrt(6)`` gives ``s = 2`` and ``x (s-1)/(s+1) = 1/(3 sqrt 6)``,
    so the magnitude is ``3 sqrt(2)/(8 * 3 sqrt(6)) = 1/(8 sqrt 3)`` times
    ``f_r tanh(...) / Q_TLS``. Independent of Omega0 and n.
    """
    return p.f_r * math.tanh(H * p.f_r / (K_B * p.temperature)) * p.inv_q_tls / (8 * math.sqrt(3))


def thermal_tls_shift(f_r, inv_q_tls, t):
    """Temperature-dependent TLS frequency shift [Hz].

    ``(f_r / (pi Q_TLS)) Re[Psi(1/2 - h f/(j 2 pi k_B T)) - ln(h f / (2 pi k_B T))]``

    ``1/j = -j``, so the digamma argument is ``1/2 + j y`` with
    ``y = h f / (2 pi k_B T)``; Re Psi(1/2 + jy) is even in y, so the result
    does not depend on the sign convention for j.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("temperature must be > 0")
    y = H * f_r / (TWO_PI * K_B * t)
    arg = 0.5 - (H * f_r) / (1j * TWO_PI * K_B * t)
    out = f_r * inv_q_tls / math.pi * (np.real(digamma(arg)) - np.log(y))
    return out[()] if np.ndim(out) == 0 else out


def dipole_moment(omega0_over_2pi, field):
    """TLS dipole over the elementary charge, d/e [m], from ``d = hbar Omega0 / E``."""
    field = np.asarray(field, dtype=float)
    if np.any(~(field > 0)):
        raise DomainError("field must be > 0")
    out = HBAR * TWO_PI * np.asarray(omega0_over_2pi, dtype=float) / (field * E_CHARGE)
    return out[()] if out.ndim == 0 else out


def relative_tls_density(ref, sample) -> float:
    """TLS density of `sample` relative to `ref`.

    Both arguments are ``(inv_q_tls, omega0_over_2pi)`` pairs. Since
    ``1/Q_TLS`` scales as ``d**2 N0`` and ``Omega0`` as ``d``, the ratio is
    ``(invQ_s / invQ_ref) * (Omega0_ref / Omega0_s)**2``.
    """
    inv_ref, om_ref = ref
    inv_s, om_s = sample
    for v in (inv_ref, om_ref, inv_s, om_s):
        if not v > 0:
            raise DomainError("relative_tls_density inputs must be > 0")
    return (inv_s / inv_ref) * (om_ref / om_s) ** 2
