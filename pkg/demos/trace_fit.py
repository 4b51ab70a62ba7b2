"""Fit one synthetic transmission trace and read off the internal quality factor.

The trace includes a line phase and a 10 ns electrical delay, both of which
the fit removes along with the resonance.

    python demos/trace_fit.py [out_dir]
"""
import numpy as np

from _common import out_dir, show
from resloss.pipelines import DeviceInfo, TraceBackground, bare_frequency, fit_trace, synth_trace
from resloss.physmodels import kappa_eff
from resloss.physmodels.constants import TWO_PI
from resloss.svgplot import render_fit_svg

device = DeviceInfo()
f_bare = bare_frequency(device, 4.8e9)
ke = kappa_eff(device.cavity(f_bare)) / TWO_PI
cav = device.cavity(f_bare, 50e3 - 2 * ke)  # loaded linewidth of 50 kHz

trace = synth_trace(cav, TraceBackground(phase_offset=0.7, electrical_delay=10e-9), noise_snr_db=35, seed=4)
res = fit_trace(trace)
print(f"converged: {res.converged} ({res.convergence_reason.value})")
show(res, ["f_r_hz", "kappa_tot_hz", "electrical_delay_s"])
print(f"  Q_i = {res.extras['q_i']:.4g} +- {res.extras['q_i_stderr']:.2g}")

model = trace.s21 - res.extras["residual"]
path = out_dir() / "trace_fit.svg"
render_fit_svg((trace.frequencies - res["f_r_hz"]) / 1e3, np.abs(trace.s21), np.abs(model),
               np.abs(trace.s21) - np.abs(model), path, title="trace fit",
               xlabel="f - f_r [kHz]", ylabel="|S21|")
print(f"wrote {path}")
