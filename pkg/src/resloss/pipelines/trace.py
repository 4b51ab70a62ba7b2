"""Single-trace resonance fitting with the dispersive cavity-coupled model."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import FitError, ValidationError
from ..fitcore import FitProblem, FitResult, lm_fit
from .types import MIN_FIT_POINTS, ComplexTrace, TraceBackground

__all__ = ["TraceGuess", "trace_model", "estimate_trace_init", "fit_trace", "TRACE_PARAMS"]

log = logging.getLogger(__name__)

TRACE_PARAMS = (
    "f_r_hz",
    "kappa_tot_hz",
    "kappa_eff_apparent_hz",
    "cavity_term_kappa_hz",
    "phase_offset_rad",
    "electrical_delay_s",
)

# second-moment width of a Lorentzian**2 truncated at 10 % of its peak,
# in units of its half width: sqrt(2 (3 - atan 3) / (2 atan 3))
_WIDTH_FACTOR = np.sqrt((3 - np.arctan(3)) / np.arctan(3))
_EDGE_FRACTION = 0.15


@dataclass
class TraceGuess:
    f_r: float
    kappa_tot: float
    kappa_eff: float
    background: TraceBackground
    noise: float


def trace_model(freqs, f_r, kappa_tot, kappa_eff, kappa_c, phase, delay, f_c, f_ref):
    """Background times the dispersive resonator response, cyclic units.

    ``e^{i(phase - 2 pi (f - f_ref) delay)} [-i kappa_c/(f - f_c) + i kappa_eff/(f - f_r + i kappa_tot/2)]``

    The line gain is absorbed into ``kappa_c`` and ``kappa_eff``, so these are
    apparent values; f_r and kappa_tot are unaffected.
    """
    f = np.asarray(freqs, dtype=float)
    resp = -1j * kappa_c / (f - f_c) + 1j * kappa_eff / (f - f_r + 0.5j * kappa_tot)
    return np.exp(1j * (phase - 2 * np.pi * (f - f_ref) * delay)) * resp


def _edge_mask(n):
    k = max(3, int(round(_EDGE_FRACTION * n)))
    m = np.zeros(n, bool)
    m[:k] = True
    m[-k:] = True
    return m


def estimate_trace_init(trace: ComplexTrace, f_c: float = 8e9) -> TraceGuess:
    """Initial guess for :func:`fit_trace`.

    Electrical delay from the unwrapped phase slope over the outer 15 % of
    the grid on each side; f_r at the largest deviation of the de-rotated
    S21 from its median; kappa_tot from the second moment of the squared
    deviation above 10 % of its peak.

    Raises
    ------
    FitError
        "no resonance found" when the peak deviation is below five times the
        point-to-point noise floor.
    """
    f = trace.frequencies
    s = trace.s21
    f_ref = trace.reference_frequency
    edge = _edge_mask(f.size)
    phase = np.unwrap(np.angle(s))
    slope = np.polyfit(f[edge] - f_ref, phase[edge], 1)[0]
    delay = -slope / (2 * np.pi)
    s0 = s * np.exp(2j * np.pi * (f - f_ref) * delay)

    bg = np.median(s0.real[edge]) + 1j * np.median(s0.imag[edge])
    dev = np.abs(s0 - bg)
    noise = np.std(np.diff(s0[edge])) / np.sqrt(2)
    i_pk = int(np.argmax(dev))
    peak = dev[i_pk]
    if not peak > 5 * noise or peak <= 1e-12 * max(abs(bg), 1e-300):
        raise FitError("no resonance found")

    p = dev**2
    keep = p >= 0.1 * p[i_pk]
    # contiguous region around the peak only
    lo = i_pk
    while lo > 0 and keep[lo - 1]:
        lo -= 1
    hi = i_pk
    while hi < f.size - 1 and keep[hi + 1]:
        hi += 1
    sl = slice(lo, hi + 1)
    w = p[sl] - 0.1 * p[i_pk]
    f0 = f[i_pk]
    if hi > lo and w.sum() > 0:
        sigma = np.sqrt(np.sum(p[sl] * (f[sl] - f0) ** 2) / np.sum(p[sl]))
        kappa_tot = 2 * sigma / _WIDTH_FACTOR
    else:
        kappa_tot = 2 * (f[1] - f[0])
    kappa_tot = max(kappa_tot, 2 * (f[1] - f[0]))

    kappa_eff = 0.5 * peak * kappa_tot
    phase0 = float(np.angle(s0[i_pk] - bg))
    kappa_c = float(np.real(bg * np.exp(-1j * phase0) * (f0 - f_c) / (-1j)))
    kappa_c, phase0, delay = _refine_background(f, s, edge, f0, kappa_tot, kappa_eff, kappa_c, phase0, delay, f_c, f_ref)
    back = TraceBackground(
        amplitude_scale=1.0,
        phase_offset=phase0,
        electrical_delay=delay,
        cavity_term_kappa=kappa_c,
        cavity_detuning_ref=float(f0 - f_c),
    )
    return TraceGuess(float(f0), float(kappa_tot), float(kappa_eff), back, float(noise))


def _refine_background(f, s, edge, f0, kt, ke, kc, phase, delay, f_c, f_ref):
    # the resonance tail still bends the edge phase; fit the background on the
    # edges with the resonance held at its rough estimate
    fe, se = f[edge], s[edge]

    def residual(p, _):
        return trace_model(fe, f0, kt, ke, p[0], p[1], p[2], f_c, f_ref) - se

    span = f[-1] - f[0]
    try:
        res = lm_fit(FitProblem(
            residual=residual,
            initial_params=[kc, phase, delay],
            x_scale=[max(abs(kc), 1e-30), 1.0, 1.0 / span],
            max_iterations=50,
        ))
    except (FitError, ValidationError):
        return float(kc), float(phase), float(delay)
    if res.chi2 > np.sum(np.abs(residual([kc, phase, delay], None)) ** 2):
        return float(kc), float(phase), float(delay)
    return float(res.params[0]), float(res.params[1]), float(res.params[2])


def fit_trace(trace: ComplexTrace, f_c: float = 8e9, guess: TraceGuess = None) -> FitResult:
    """Complex fit of background times the dispersive model to one trace.

    Returns a :class:`FitResult` over :data:`TRACE_PARAMS`; ``extras`` holds
    ``q_i = f_r / kappa_tot`` with its standard error and the final residual.
    """
    if len(trace) < MIN_FIT_POINTS:
        raise ValidationError(f"trace has {len(trace)} points; at least {MIN_FIT_POINTS} are needed")
    if guess is None:
        guess = estimate_trace_init(trace, f_c)
    f = trace.frequencies
    s = trace.s21
    f_ref = trace.reference_frequency
    f0 = guess.f_r
    kt0 = guess.kappa_tot
    span = f[-1] - f[0]

    def residual(p, _):
        return trace_model(f, f0 + p[0], p[1], p[2], p[3], p[4], p[5], f_c, f_ref) - s

    b = guess.background
    kc0 = b.cavity_term_kappa
    p0 = [0.0, kt0, guess.kappa_eff, kc0, b.phase_offset, b.electrical_delay]
    problem = FitProblem(
        residual=residual,
        initial_params=p0,
        lower_bounds=[-np.inf, 0.0, 0.0, -np.inf, -np.inf, -np.inf],
        upper_bounds=[np.inf] * 6,
        x_scale=[kt0, kt0, guess.kappa_eff, max(abs(kc0), 1e-3 * guess.kappa_eff * abs(f0 - f_c) / kt0, 1e-30), 1.0, 1.0 / span],
        param_names=list(TRACE_PARAMS),
        max_iterations=300,
    )
    res = lm_fit(problem)
    res.params[0] += f0
    fr, kt = res.params[0], res.params[1]
    q_i = fr / kt
    if res.covariance_available:
        c = res.covariance
        # first-order error of f_r / kappa_tot
        var = q_i**2 * (c[0, 0] / fr**2 + c[1, 1] / kt**2 - 2 * c[0, 1] / (fr * kt))
        q_err = float(np.sqrt(max(var, 0.0)))
    else:
        q_err = float("nan")
    res.extras.update(
        q_i=float(q_i),
        q_i_stderr=q_err,
        f_c=f_c,
        f_ref=f_ref,
        residual=residual(res.params - np.r_[f0, 0, 0, 0, 0, 0], None),
    )
    if not res.converged:
        log.warning("trace fit did not converge (%s)", res.convergence_reason.value)
    return res
