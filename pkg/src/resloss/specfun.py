"""Special-function kernels: complex digamma, modified Bessel I0 and K0.

These are small, dependency-free implementations used by the thermal TLS
shift and the Mattis-Bardeen conductivities.

Error budget for :func:`digamma`: the argument is shifted upward until
``Re(z) >= 16`` and the asymptotic series is truncated after the B14 term.
The first omitted term is ``B16 / (16 z**16)``, which for ``|z| >= 16`` is
below 3e-20 in absolute value, so the truncation error is far below the
1e-10 relative target; the remaining error is rounding in the recurrence sum
(at most 16 terms).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = ["DomainError", "digamma", "bessel_i0", "bessel_k0", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061

# B_2, B_4, ..., B_14
_BERNOULLI_EVEN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)
_SHIFT_THRESHOLD = 16.0

# I0 power series is used below this argument, the asymptotic series above.
# The smallest asymptotic term at x = 15 is ~exp(-2x) ~ 1e-13.
_I0_CROSSOVER = 15.0
# K0 power series below, Steed/Temme continued fraction above.
_K0_CROSSOVER = 2.0


def _digamma_asymptotic(z):
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    power = inv2
    for k, b in enumerate(_BERNOULLI_EVEN, start=1):
        series = series + b / (2 * k) * power
        power = power * inv2
    return np.log(z) - 0.5 / z - series


def digamma(z):
    """Digamma function for complex (or real) argument.

    Parameters
    ----------
    z : complex or array_like
        Argument. Must not be a non-positive integer.

    Returns
    -------
    complex or ndarray of complex
        Psi(z). Real input yields an exactly zero imaginary part.

    Raises
    ------
    DomainError
        If any element of `z` is a pole (0, -1, -2, ...) or non-finite.
    OverflowError
        If `z` is so close to a pole that Psi(z) is not representable.
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    zz = np.atleast_1d(arr).astype(complex, copy=True)

    if not np.all(np.isfinite(zz)):
        raise DomainError("digamma argument must be finite")
    pole = (zz.imag == 0) & (zz.real <= 0) & (zz.real == np.round(zz.real))
    if np.any(pole):
        raise DomainError(f"digamma has a pole at z = {zz[pole][0].real:g}")

    # reflection for Re(z) < 0 keeps the upward shift short
    reflect = zz.real < 0
    w = np.where(reflect, 1.0 - zz, zz)

    acc = np.zeros_like(w)
    low = w.real < _SHIFT_THRESHOLD
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        while np.any(low):
            acc[low] -= 1.0 / w[low]
            w[low] += 1.0
            low = w.real < _SHIFT_THRESHOLD

        out = _digamma_asymptotic(w) + acc
        if np.any(reflect):
            zr = zz[reflect]
            out[reflect] -= np.pi / np.tan(np.pi * zr)
    if not np.all(np.isfinite(out)):
        bad = zz[~np.isfinite(out)][0]
        raise OverflowError(f"digamma overflows at z = {bad!r} (too close to a pole)")
    real_in = zz.imag == 0
    out[real_in] = out[real_in].real + 0j

    return complex(out[0]) if scalar else out.reshape(arr.shape)


def _i0_scalar(x: float) -> float:
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"bessel_i0 requires finite x >= 0, got {x!r}")
    if x <= _I0_CROSSOVER:
        q = 0.25 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total
    # e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    t = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = t * (2 * k - 1) ** 2 / (k * 8.0 * x)
        if nxt > t or nxt < 1e-17:
            break
        t = nxt
        total += t
    log_pref = x - 0.5 * math.log(2.0 * math.pi * x)
    if log_pref + math.log(total) > 709.78:
        raise OverflowError(f"bessel_i0({x}) exceeds the float64 range")
    return math.exp(log_pref) * total


def _k0_series(x: float) -> float:
    # K0 = -(ln(x/2) + gamma) I0(x) + sum (x^2/4)^k / (k!)^2 H_k
    q = 0.25 * x * x
    term = 1.0
    i0 = 1.0
    hsum = 0.0
    harmonic = 0.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        hsum += term * harmonic
        if term * harmonic < 1e-18 * abs(hsum) and term < 1e-18 * i0:
            break
    return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + hsum


def _k0_continued_fraction(x: float) -> float:
    # Steed's algorithm (CF2) for K_nu with nu = 0
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 10000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-16:
            break
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s


def _k0_scalar(x: float) -> float:
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"bessel_k0 requires finite x > 0, got {x!r}")
    if x <= _K0_CROSSOVER:
        return _k0_series(x)
    return _k0_continued_fraction(x)


def _vectorize(fn, x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    return np.array([fn(float(v)) for v in arr.ravel()]).reshape(arr.shape)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero, for x >= 0."""
    return _vectorize(_i0_scalar, x)


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero, for x > 0."""
    return _vectorize(_k0_scalar, x)
