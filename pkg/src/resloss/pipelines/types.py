"""Data containers shared by the fit pipelines and the file formats."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import ValidationError
from ..physmodels.cavity import CalibrationParams, CavitySystemParams, coupling_for

__all__ = [
    "ComplexTrace",
    "TraceBackground",
    "DeviceInfo",
    "SweepEntry",
    "SweepManifest",
    "SWEEP_KINDS",
    "MIN_FIT_POINTS",
]

SWEEP_KINDS = ("power", "pump", "temperature")
MIN_FIT_POINTS = 32


@dataclass
class ComplexTrace:
    """Complex S21 samples on a strictly increasing frequency grid [Hz].

    ``metadata`` keys: ``power_dbm``, ``temperature_k``, ``pump_freq_hz``,
    ``pump_power_dbm``, ``resonator``.
    """

    frequencies: np.ndarray
    s21: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.s21.shape:
            raise ValidationError("frequencies and s21 must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(self.frequencies)) and np.all(np.isfinite(self.s21))):
            raise ValidationError("trace contains non-finite values")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValidationError("frequency grid must be strictly increasing")

    def __len__(self):
        return self.frequencies.size

    @property
    def reference_frequency(self) -> float:
        """Grid centre; the phase offset of the background refers to it."""
        return 0.5 * (self.frequencies[0] + self.frequencies[-1])

    def __eq__(self, other):
        if not isinstance(other, ComplexTrace):
            return NotImplemented
        return (
            np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.s21, other.s21)
            and self.metadata == other.metadata
        )


@dataclass(frozen=True)
class TraceBackground:
    """Line background multiplying the resonator response.

    ``amplitude_scale * exp(i (phase_offset - 2 pi (f - f_ref) electrical_delay))``
    with ``f_ref`` the trace's grid centre. ``cavity_term_kappa`` [Hz] and
    ``cavity_detuning_ref`` [Hz, f_r - f_c] describe the direct cavity term
    ``-i kappa_c / (f - f_c)`` as seen by the fit.
    """

    amplitude_scale: float = 1.0
    phase_offset: float = 0.0
    electrical_delay: float = 0.0
    cavity_term_kappa: float = 0.0
    cavity_detuning_ref: float = 0.0

    def __post_init__(self):
        if not self.amplitude_scale > 0:
            raise ValidationError("amplitude_scale must be > 0")

    def factor(self, frequencies, f_ref: float):
        f = np.asarray(frequencies, dtype=float)
        return self.amplitude_scale * np.exp(1j * (self.phase_offset - 2 * np.pi * (f - f_ref) * self.electrical_delay))


@dataclass(frozen=True)
class DeviceInfo:
    """Resonator identity and the cavity it sits in.

    ``g_over_2pi`` defaults to the tabulated coupling of ``resonator``.
    ``kappa_over_2pi`` is the cavity port coupling.
    """

    resonator: str = "Res 2"
    g_over_2pi: Optional[float] = None
    f_c: float = 8e9
    kappa_over_2pi: float = 1e6

    def __post_init__(self):
        if self.g_over_2pi is None:
            object.__setattr__(self, "g_over_2pi", coupling_for(self.resonator))
        if not (self.g_over_2pi > 0 and self.kappa_over_2pi > 0 and self.f_c > 0):
            raise ValidationError("g_over_2pi, kappa_over_2pi and f_c must be > 0")

    def cavity(self, f_r: float, gamma_r_over_2pi: float = 0.0) -> CavitySystemParams:
        return CavitySystemParams(
            f_c=self.f_c, f_r=f_r, g_over_2pi=self.g_over_2pi,
            kappa_over_2pi=self.kappa_over_2pi, gamma_r_over_2pi=max(gamma_r_over_2pi, 0.0),
        )


@dataclass
class SweepEntry:
    """One sweep point: a control value and either a trace or extracted values.

    Control meaning by sweep kind: source power [dBm] (power), pump detuning
    f_pump - f_r [Hz] (pump), bath temperature [K] (temperature).
    """

    control: float
    trace: Optional[ComplexTrace] = None
    trace_path: Optional[str] = None
    f_r_hz: Optional[float] = None
    kappa_tot_hz: Optional[float] = None
    f_r_stderr_hz: Optional[float] = None
    kappa_tot_stderr_hz: Optional[float] = None
    pump_power_dbm: Optional[float] = None

    def __post_init__(self):
        if self.trace is None and self.f_r_hz is None:
            raise ValidationError(f"entry at control {self.control}: needs a trace or f_r_hz")


@dataclass
class SweepManifest:
    kind: str
    entries: List[SweepEntry]
    device: DeviceInfo = field(default_factory=DeviceInfo)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    temperature_k: float = 0.01
    reference_f_r_hz: Optional[float] = None
    pump_power_dbm: Optional[float] = None
    superconductor: Optional[dict] = None
    truth: Optional[dict] = None
    input_digest: Optional[str] = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValidationError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        controls = np.array([e.control for e in self.entries], dtype=float)
        if len(set(controls.tolist())) != controls.size:
            raise ValidationError("duplicate control values in sweep")
        d = np.diff(controls)
        if controls.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValidationError("control values must be strictly monotone")
        if not self.temperature_k > 0:
            raise ValidationError("temperature_k must be > 0")

    @property
    def controls(self) -> np.ndarray:
        return np.array([e.control for e in self.entries], dtype=float)
