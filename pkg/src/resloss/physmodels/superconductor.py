"""Large-gap Mattis-Bardeen conductivities, surface impedance and the
combined TLS + quasiparticle temperature shift."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DomainError, RegimeWarning, ValidationError
from ..specfun import bessel_i0, bessel_k0
from .constants import HBAR, K_B, MU_0, TWO_PI
from .tls import thermal_tls_shift

__all__ = [
    "SuperconductorParams",
    "niobium_reference",
    "mb_sigma1",
    "mb_sigma2",
    "surface_impedance",
    "total_thermal_shift",
    "kinetic_fraction_response",
    "REFERENCE_TEMPERATURE",
]

BCS_RATIO = 1.764
# X_S(0) is evaluated at the measurement base temperature
REFERENCE_TEMPERATURE = 0.010
# beyond this argument the scaled Bessel products use their asymptotic series
_BESSEL_ASYMPTOTIC = 500.0


@dataclass(frozen=True)
class SuperconductorParams:
    """Film parameters entering the surface impedance.

    ``delta0`` [J] defaults to ``1.764 k_B t_c``. Only ``delta0`` and ``alpha``
    influence normalized shifts; ``l_el``, ``v_f``, ``lambda0`` and ``sigma_n``
    set the absolute impedance scale.
    """

    t_c: float
    alpha: float = 0.0
    l_el: float = 4.84e-9
    v_f: float = 2.73e5
    lambda0: float = 39e-9
    sigma_n: float = 1.0 / 1.5e-7
    delta0: Optional[float] = field(default=None)
    xi_gl: Optional[float] = None
    xi_bcs: Optional[float] = None

    def __post_init__(self):
        if not self.t_c > 0:
            raise ValidationError("t_c must be > 0")
        if self.delta0 is None:
            object.__setattr__(self, "delta0", BCS_RATIO * K_B * self.t_c)
        if not self.delta0 > 0:
            raise ValidationError("delta0 must be > 0")
        if not 0 <= self.alpha <= 1:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("l_el", "v_f", "lambda0", "sigma_n"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")

    def with_alpha(self, alpha: float) -> "SuperconductorParams":
        return SuperconductorParams(
            t_c=self.t_c, alpha=alpha, l_el=self.l_el, v_f=self.v_f,
            lambda0=self.lambda0, sigma_n=self.sigma_n, delta0=self.delta0,
            xi_gl=self.xi_gl, xi_bcs=self.xi_bcs,
        )


def niobium_reference(alpha: float = 0.0) -> SuperconductorParams:
    """Reference Nb film: T_c = 9.04 K, xi(0) = 11.6 nm, l_el = 4.84 nm, xi_0 = 38 nm.

    Fermi velocity, London depth and normal conductivity are typical
    literature values for Nb films; they only fix the absolute scale of Z_S.
    """
    return SuperconductorParams(t_c=9.04, alpha=alpha, l_el=4.84e-9, xi_gl=11.6e-9, xi_bcs=38e-9)


def _check(sc: SuperconductorParams, omega, t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("temperature must be > 0")
    if not omega > 0:
        raise DomainError("omega must be > 0")
    if sc.delta0 <= 5 * max(HBAR * omega, K_B * float(np.max(t))):
        warnings.warn(
            f"large-gap forms used with delta0/k_B = {sc.delta0 / K_B:.3g} K at "
            f"T = {float(np.max(t)):.3g} K, f = {omega / TWO_PI:.3g} Hz",
            RegimeWarning,
            stacklevel=3,
        )
    return t


def _sinh_k0(y):
    # sinh(y) K0(y) without overflow
    y = np.atleast_1d(y)
    out = np.empty_like(y)
    small = y <= _BESSEL_ASYMPTOTIC
    if np.any(small):
        out[small] = np.sinh(y[small]) * bessel_k0(y[small])
    big = ~small
    if np.any(big):
        yb = y[big]
        u = 1.0 / (8.0 * yb)
        out[big] = 0.5 * np.sqrt(np.pi / (2 * yb)) * (1 - u + 4.5 * u**2 - 37.5 * u**3)
    return out


def _exp_i0(y):
    # exp(-y) I0(y) without overflow
    y = np.atleast_1d(y)
    out = np.empty_like(y)
    small = y <= _BESSEL_ASYMPTOTIC
    if np.any(small):
        out[small] = np.exp(-y[small]) * bessel_i0(y[small])
    big = ~small
    if np.any(big):
        yb = y[big]
        u = 1.0 / (8.0 * yb)
        out[big] = (1 + u + 4.5 * u**2 + 37.5 * u**3) / np.sqrt(2 * np.pi * yb)
    return out


def _shape(out, t):
    return out[0] if np.ndim(t) == 0 else out.reshape(np.shape(t))


def mb_sigma1(sc: SuperconductorParams, omega: float, t):
    """sigma_1/sigma_n = (4 D0/hbar w) exp(-D0/k_B T) sinh(hbar w/2k_B T) K0(hbar w/2k_B T)."""
    tt = _check(sc, omega, t)
    tt1 = np.atleast_1d(tt)
    y = HBAR * omega / (2 * K_B * tt1)
    out = 4 * sc.delta0 / (HBAR * omega) * np.exp(-sc.delta0 / (K_B * tt1)) * _sinh_k0(y)
    return _shape(out, t)


def mb_sigma2(sc: SuperconductorParams, omega: float, t):
    """sigma_2/sigma_n in the large-gap limit.

    ``(pi D0/hbar w)(1 - sqrt(2 pi k_B T/D0) e^{-D0/k_B T} - 2 e^{-D0/k_B T} e^{-y} I0(y))``,
    ``y = hbar w / 2 k_B T``.
    """
    tt = _check(sc, omega, t)
    tt1 = np.atleast_1d(tt)
    kt = K_B * tt1
    y = HBAR * omega / (2 * kt)
    boltz = np.exp(-sc.delta0 / kt)
    bracket = 1.0 - np.sqrt(2 * np.pi * kt / sc.delta0) * boltz - 2.0 * boltz * _exp_i0(y)
    out = np.pi * sc.delta0 / (HBAR * omega) * bracket
    return _shape(out, t)


def surface_impedance(sc: SuperconductorParams, omega: float, t):
    """Local (dirty-limit) surface impedance Z_S = R_S + j X_S [Ohm].

    ``Z_S = j mu0 w / sqrt((w l_el / (sigma_n v_F lambda0**2)) (sigma_2 + j sigma_1))``
    with the principal square root, which gives R_S >= 0 for sigma_1, sigma_2 >= 0.
    """
    s1 = np.atleast_1d(mb_sigma1(sc, omega, t))
    s2 = np.atleast_1d(mb_sigma2(sc, omega, t))
    scale = omega * sc.l_el / (sc.sigma_n * sc.v_f * sc.lambda0**2)
    root = np.sqrt(scale * sc.sigma_n * (s2 + 1j * s1))
    z = 1j * MU_0 * omega / root
    if np.any(z.real < 0):
        raise ArithmeticError("surface impedance branch gave R_S < 0")
    return _shape(z, t)


def total_thermal_shift(f_r, inv_q_tls, sc: SuperconductorParams, t, t_ref: float = REFERENCE_TEMPERATURE):
    """TLS plus quasiparticle frequency shift [Hz].

    ``thermal_tls_shift - (alpha f_r / 2) (X_S(T) - X_S(0)) / X_S(0)``, with
    X_S(0) taken at `t_ref`.
    """
    tls = thermal_tls_shift(f_r, inv_q_tls, t)
    if sc.alpha == 0:
        return tls
    return tls + sc.alpha * kinetic_fraction_response(sc, f_r, t, t_ref)


def kinetic_fraction_response(sc: SuperconductorParams, f_r, t, t_ref: float = REFERENCE_TEMPERATURE):
    """``-(f_r/2) (X_S(T) - X_S(0)) / X_S(0)``: the quasiparticle shift per unit alpha [Hz]."""
    omega = TWO_PI * f_r
    x_t = np.imag(surface_impedance(sc, omega, t))
    x_0 = float(np.imag(surface_impedance(sc, omega, t_ref)))
    return -0.5 * f_r * (x_t - x_0) / x_0

