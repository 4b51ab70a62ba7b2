"""Fit drivers for single traces and for power, pump and temperature sweeps."""
from .types import (
    MIN_FIT_POINTS,
    SWEEP_KINDS,
    ComplexTrace,
    DeviceInfo,
    SweepEntry,
    SweepManifest,
    TraceBackground,
)
from .trace import TRACE_PARAMS, TraceGuess, estimate_trace_init, fit_trace, trace_model
from .sweeps import (
    POWER_PARAMS,
    PUMP_PARAMS,
    TEMPERATURE_PARAMS,
    TemperatureTruth,
    bare_frequency,
    extract_resonances,
    fit_power_sweep,
    fit_pump_sweep,
    fit_temperature_sweep,
    pump_photon_numbers,
    pump_shift_model,
    temperature_shift_model,
)
from .synth import synth_sweep, synth_trace, trace_noise_sigma

__all__ = [
    "MIN_FIT_POINTS",
    "SWEEP_KINDS",
    "ComplexTrace",
    "DeviceInfo",
    "SweepEntry",
    "SweepManifest",
    "TraceBackground",
    "TRACE_PARAMS",
    "TraceGuess",
    "estimate_trace_init",
    "fit_trace",
    "trace_model",
    "POWER_PARAMS",
    "PUMP_PARAMS",
    "TEMPERATURE_PARAMS",
    "TemperatureTruth",
    "bare_frequency",
    "extract_resonances",
    "fit_power_sweep",
    "fit_pump_sweep",
    "fit_temperature_sweep",
    "pump_photon_numbers",
    "pump_shift_model",
    "temperature_shift_model",
    "synth_sweep",
    "synth_trace",
    "trace_noise_sigma",
]
