"""Microscopic TLS-ensemble oracle.

Samples an ensemble of defects, computes driven steady-state populations and
sums the complex resonator frequency shift

    delta_f = sum_j (g_j**2 / 4) <sigma_z^(j)> / (f_j - f_r + i gamma2_j)

with every rate cyclic: g_j = Omega_0,j / 2pi and gamma2_j = Gamma_2 / 2pi.
Writing the same sum with angular rates and dividing the result by 2pi gives
identical numbers, so the cyclic form is used throughout.

The imaginary part maps to loss as ``1/Q = 2 Im(delta_f) / f_r`` (a complex
frequency ``f + i kappa/2`` with kappa the full linewidth); it is >= 0 for
thermal or partially saturated populations.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple, Union

import numpy as np

from .errors import ValidationError
from .fitcore import FitProblem, FitResult, lm_fit
from .physmodels.constants import H, K_B

__all__ = [
    "TlsDefect",
    "TlsEnsemble",
    "EnsembleConfig",
    "DriveSpec",
    "sample_ensemble",
    "steady_state_sigma_z",
    "ensemble_shift",
    "ensemble_power_curve",
    "ensemble_pump_sweep",
    "fit_saturation_curve",
    "pump_extremum_location",
    "extremum_power_law",
]


@dataclass(frozen=True)
class TlsDefect:
    f_j: float
    gamma1: float
    gamma2: float
    omega0j_over_2pi: float

    def __post_init__(self):
        if not self.f_j > 0:
            raise ValidationError("f_j must be > 0")
        if not (self.gamma1 > 0 and self.gamma2 >= self.gamma1 / 2):
            raise ValidationError("need gamma2 >= gamma1/2 > 0")


@dataclass
class TlsEnsemble:
    """Structure-of-arrays view of many defects (all rates in Hz)."""

    f_j: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    omega0j_over_2pi: np.ndarray

    def __len__(self):
        return len(self.f_j)

    def __getitem__(self, i) -> TlsDefect:
        return TlsDefect(float(self.f_j[i]), float(self.gamma1[i]), float(self.gamma2[i]),
                         float(self.omega0j_over_2pi[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_defects(cls, defects) -> "TlsEnsemble":
        defects = list(defects)
        return cls(
            np.array([d.f_j for d in defects], dtype=float),
            np.array([d.gamma1 for d in defects], dtype=float),
            np.array([d.gamma2 for d in defects], dtype=float),
            np.array([d.omega0j_over_2pi for d in defects], dtype=float),
        )

    def concat(self, other: "TlsEnsemble") -> "TlsEnsemble":
        return TlsEnsemble(*(np.concatenate([a, b]) for a, b in zip(self._arrays(), other._arrays())))

    def _arrays(self):
        return self.f_j, self.gamma1, self.gamma2, self.omega0j_over_2pi


Range = Union[float, Tuple[float, float]]


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble sampling recipe.

    ``omega0_dist`` and ``gamma2_dist`` are either a fixed value or a
    ``(lo, hi)`` range sampled log-uniformly. ``gamma1_rule`` is either
    ``("fraction", u_max)`` -- ``gamma1 = 2 gamma2 u`` with ``u`` uniform in
    ``(0, u_max]`` (``u_max = 1`` with a degenerate draw when given as
    ``("fraction_fixed", u)``) -- or ``("loguniform", (lo, hi))`` clipped to the
    Bloch limit ``gamma1 <= 2 gamma2``.
    """

    n_defects: int
    band_center: float
    band_halfwidth: float
    omega0_dist: Range = 20e3
    gamma2_dist: Range = (1e3, 1e7)
    gamma1_rule: tuple = ("fraction", 1.0)
    seed: int = 0
    temperature: float = 0.01

    def __post_init__(self):
        if self.n_defects < 0:
            raise ValidationError("n_defects must be >= 0")
        if not self.band_halfwidth > 0:
            raise ValidationError("band_halfwidth must be > 0")
        if not self.band_center - self.band_halfwidth > 0:
            raise ValidationError("band must cover strictly positive frequencies")
        for dist in (self.omega0_dist, self.gamma2_dist):
            vals = dist if isinstance(dist, (tuple, list)) else (dist,)
            if not all(v > 0 for v in vals):
                raise ValidationError("distributions must cover strictly positive values")
        if self.gamma1_rule[0] not in ("fraction", "fraction_fixed", "loguniform"):
            raise ValidationError(f"unknown gamma1_rule {self.gamma1_rule[0]!r}")

    def to_dict(self) -> dict:
        return {
            "n_defects": self.n_defects,
            "band_center_hz": self.band_center,
            "band_halfwidth_hz": self.band_halfwidth,
            "omega0_dist_hz": list(self.omega0_dist) if isinstance(self.omega0_dist, (tuple, list)) else self.omega0_dist,
            "gamma2_dist_hz": list(self.gamma2_dist) if isinstance(self.gamma2_dist, (tuple, list)) else self.gamma2_dist,
            "gamma1_rule": [self.gamma1_rule[0], list(self.gamma1_rule[1]) if isinstance(self.gamma1_rule[1], (tuple, list)) else self.gamma1_rule[1]],
            "seed": self.seed,
            "temperature_k": self.temperature,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleConfig":
        def rng(v):
            return tuple(v) if isinstance(v, list) else v

        rule = d.get("gamma1_rule", ["fraction", 1.0])
        return cls(
            n_defects=int(d["n_defects"]),
            band_center=float(d["band_center_hz"]),
            band_halfwidth=float(d["band_halfwidth_hz"]),
            omega0_dist=rng(d.get("omega0_dist_hz", 20e3)),
            gamma2_dist=rng(d.get("gamma2_dist_hz", [1e3, 1e7])),
            gamma1_rule=(rule[0], rng(rule[1])),
            seed=int(d.get("seed", 0)),
            temperature=float(d.get("temperature_k", 0.01)),
        )


@dataclass(frozen=True)
class DriveSpec:
    pump_frequency: float
    pump_photons: float = 0.0
    probe_weak: bool = True

    def __post_init__(self):
        if not self.pump_photons >= 0:
            raise ValidationError("pump_photons must be >= 0")


def _draw(rng: np.random.Generator, dist: Range, n: int) -> np.ndarray:
    if isinstance(dist, (tuple, list)):
        lo, hi = dist
        if lo == hi:
            return np.full(n, float(lo))
        return np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    return np.full(n, float(dist))


def sample_ensemble(cfg: EnsembleConfig) -> TlsEnsemble:
    """Draw `cfg.n_defects` defects with f_j uniform over the band.

    Draw order is fixed (f_j, gamma2, gamma1, coupling), so a given seed and
    config always produce the same ensemble.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_defects
    f = rng.uniform(cfg.band_center - cfg.band_halfwidth, cfg.band_center + cfg.band_halfwidth, n)
    g2 = _draw(rng, cfg.gamma2_dist, n)
    kind, arg = cfg.gamma1_rule
    if kind == "fraction":
        u = 1.0 - rng.uniform(0.0, 1.0, n)  # (0, 1]
        g1 = 2.0 * g2 * u * float(arg)
    elif kind == "fraction_fixed":
        g1 = 2.0 * g2 * float(arg)
    else:
        g1 = np.minimum(_draw(rng, tuple(arg), n), 2.0 * g2)
    om = _draw(rng, cfg.omega0_dist, n)
    return TlsEnsemble(f, g1, g2, om)


def _sigma_z(f_j, gamma1, gamma2, om, drive: DriveSpec, temperature: float):
    # Bloch steady state with thermal polarization
    thermal = -np.tanh(H * f_j / (2 * K_B * temperature))
    if drive.pump_photons == 0:
        return thermal
    det2 = ((f_j - drive.pump_frequency) / gamma2) ** 2
    sat = om**2 * drive.pump_photons / (gamma1 * gamma2)
    return thermal * (1.0 + det2) / (1.0 + det2 + sat)


def steady_state_sigma_z(d: TlsDefect, drive: DriveSpec, temperature: float) -> float:
    """<sigma_z> in [-1, 0] of a defect under a (possibly detuned) pump.

    ``-tanh(h f_j / 2 k_B T) (1 + d**2/G2**2) / (1 + d**2/G2**2 + W**2/(G1 G2))``
    with detuning ``d = f_j - f_pump`` and Rabi rate ``W = g_j sqrt(n)``.
    """
    if not temperature > 0:
        raise ValidationError("temperature must be > 0")
    return float(_sigma_z(d.f_j, d.gamma1, d.gamma2, d.omega0j_over_2pi, drive, temperature))


def _as_ensemble(ensemble) -> TlsEnsemble:
    if isinstance(ensemble, TlsEnsemble):
        return ensemble
    return TlsEnsemble.from_defects(ensemble)


def ensemble_shift(ensemble, f_r: float, drive: DriveSpec, temperature: float) -> complex:
    """Complex resonator frequency shift [Hz] summed over the ensemble.

    Summation order is the ensemble order (``np.sum`` pairwise reduction on a
    single thread), so results are bit-reproducible.
    """
    ens = _as_ensemble(ensemble)
    if len(ens) == 0:
        return 0j
    sz = _sigma_z(ens.f_j, ens.gamma1, ens.gamma2, ens.omega0j_over_2pi, drive, temperature)
    terms = 0.25 * ens.omega0j_over_2pi**2 * sz / (ens.f_j - f_r + 1j * ens.gamma2)
    return complex(np.sum(terms))


def ensemble_power_curve(ensemble, f_r: float, n_bar_grid, temperature: float):
    """Added loss 1/Q = 2 Im(shift)/f_r for an on-resonance pump at each n."""
    n_grid = np.asarray(n_bar_grid, dtype=float)
    loss = np.array([
        2.0 * ensemble_shift(ensemble, f_r, DriveSpec(f_r, n), temperature).imag / f_r
        for n in n_grid
    ])
    return n_grid, loss


def ensemble_pump_sweep(ensemble, f_r: float, delta_grid, n_bar: float, temperature: float,
                        rabi_margin: float = 5.0):
    """Real frequency shift [Hz] versus pump detuning, relative to no pump.

    The ensemble band must cover ``f_r +- (max|delta| + rabi_margin * W)`` with
    W the largest Rabi rate ``g_j sqrt(n)``, otherwise edge truncation biases
    the sweep.
    """
    ens = _as_ensemble(ensemble)
    deltas = np.asarray(delta_grid, dtype=float)
    if len(ens) == 0:
        return deltas, np.zeros_like(deltas)
    reach = np.max(np.abs(deltas)) + rabi_margin * float(np.max(ens.omega0j_over_2pi)) * np.sqrt(n_bar)
    if ens.f_j.min() > f_r - reach or ens.f_j.max() < f_r + reach:
        raise ValidationError(
            f"ensemble band [{ens.f_j.min():.6g}, {ens.f_j.max():.6g}] Hz does not cover "
            f"f_r +- {reach:.4g} Hz"
        )
    base = ensemble_shift(ens, f_r, DriveSpec(f_r, 0.0), temperature).real
    shifts = np.array([
        ensemble_shift(ens, f_r, DriveSpec(f_r + d, n_bar), temperature).real - base
        for d in deltas
    ])
    return deltas, shifts


def fit_saturation_curve(n_bar, loss, f_r: float, temperature: float) -> FitResult:
    """Fit ``A tanh(h f/2 k_B T) / sqrt(1 + (n/n_c)**phi)`` to an ensemble loss curve.

    Returns a result over ``(inv_q_tls, n_c, phi)``; the residual loss is
    zero for an ensemble, so it is not fitted.
    """
    n = np.asarray(n_bar, dtype=float)
    y = np.asarray(loss, dtype=float)
    if n.size < 4 or n.shape != y.shape:
        raise ValidationError("need at least 4 matching (n, loss) points")
    thermal = np.tanh(H * f_r / (2 * K_B * temperature))
    a0 = float(np.max(y)) / thermal
    if not a0 > 0:
        raise ValidationError("loss curve has no positive values")
    below = np.flatnonzero(y <= y.max() / np.sqrt(2))
    nc0 = float(n[below[0]]) if below.size else float(n[-1])

    def residual(p, _):
        return p[0] * thermal / np.sqrt(1.0 + (n / p[1]) ** p[2]) - y

    return lm_fit(FitProblem(
        residual=residual,
        initial_params=[a0, nc0, 0.8],
        lower_bounds=[0.0, 0.0, 0.0],
        upper_bounds=[np.inf, np.inf, 2.0],
        param_names=["inv_q_tls", "n_c", "phi"],
        max_iterations=300,
    ))


def pump_extremum_location(cfg: EnsembleConfig, f_r: float, n_bar: float, seeds=range(8),
                           n_points: int = 91) -> float:
    """Positive pump detuning [Hz] of the largest shift, averaged over ensembles.

    The sweep covers ``[0.2 W, 2 W]`` with ``W`` the Rabi rate of the
    configured (fixed) coupling; the seed-averaged curve's peak is refined
    by a parabola through the three highest samples.
    """
    om = cfg.omega0_dist if not isinstance(cfg.omega0_dist, (tuple, list)) else max(cfg.omega0_dist)
    w = float(om) * np.sqrt(n_bar)
    d = np.linspace(0.2 * w, 2.0 * w, n_points)
    curves = []
    for seed in seeds:
        ens = sample_ensemble(replace(cfg, seed=int(seed)))
        curves.append(ensemble_pump_sweep(ens, f_r, d, n_bar, cfg.temperature)[1])
    mean = np.mean(curves, axis=0)
    i = int(np.argmax(np.abs(mean)))
    if 0 < i < n_points - 1:
        y0, y1, y2 = np.abs(mean[i - 1:i + 2])
        den = y0 - 2 * y1 + y2
        if den < 0:
            return float(d[i] + 0.5 * (d[1] - d[0]) * (y0 - y2) / den)
    return float(d[i])


def extremum_power_law(cfg: EnsembleConfig, f_r: float, n_values, seeds=range(8)):
    """Exponent of ``location ~ n**p`` for the pump-sweep extremum, and the locations."""
    n_values = np.asarray(n_values, dtype=float)
    locs = np.array([pump_extremum_location(cfg, f_r, n, seeds) for n in n_values])
    slope = np.polyfit(np.log(n_values), np.log(locs), 1)[0]
    return float(slope), locs
