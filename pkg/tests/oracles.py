"""High-precision reference oracles, independent of the library code paths.

Run as a script to regenerate ``data/specfun_oracle.json``.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40

DATA = Path(__file__).parent / "data" / "specfun_oracle.json"


def digamma_series(z):
    """Psi(z) = -gamma + sum_k (1/(k+1) - 1/(k+z)), summed with extrapolation."""
    z = mp.mpc(z)
    return -mp.euler + mp.nsum(lambda k: 1 / (k + 1) - 1 / (k + z), [0, mp.inf])


def i0_series(x):
    x = mp.mpf(x)
    q = x * x / 4
    term = mp.mpf(1)
    total = mp.mpf(1)
    k = 0
    while term > total * mp.mpf(10) ** (-35):
        k += 1
        term *= q / (k * k)
        total += term
    return total


def k0_integral(x):
    """K0(x) = int_0^inf exp(-x cosh t) dt."""
    x = mp.mpf(x)
    # exp(-x) * int exp(-x (cosh t - 1)) dt; breakpoints on the natural width
    upper = mp.acosh(1 + 120 / x)
    width = min(upper, 1 / mp.sqrt(x))
    pts = sorted(set([mp.mpf(0), width, 2 * width, 4 * width, upper / 2, upper]))
    return mp.exp(-x) * mp.quad(lambda t: mp.exp(-x * (mp.cosh(t) - 1)), pts)


def log_grid(lo, hi, n):
    return [float(mp.mpf(lo) * (mp.mpf(hi) / lo) ** (mp.mpf(i) / (n - 1))) for i in range(n)]


def build():
    xs = log_grid(1e-3, 700, 100)
    return {
        "grid": xs,
        "i0": [mp.nstr(i0_series(x), 25) for x in xs],
        "k0": [mp.nstr(k0_integral(x), 25) for x in xs],
        "digamma": {
            "0.5+1j": [mp.nstr(v, 25) for v in (lambda c: (c.real, c.imag))(digamma_series(mp.mpc(0.5, 1.0)))],
        },
    }


if __name__ == "__main__":
    DATA.write_text(json.dumps(build(), indent=1))
