"""Two-tone spectroscopy: dispersive shift against pump detuning.

The shift is odd in the detuning and peaks where the pump's Rabi rate is
a fixed multiple of the detuning. The fit recovers the TLS loss and the
single-photon Rabi frequency, which converts to a dipole moment.

    python demos/pump_sweep.py [out_dir]
"""
import numpy as np

from _common import out_dir, show
from resloss.physmodels import TwoToneParams, dipole_moment
from resloss.pipelines import fit_pump_sweep, synth_sweep
from resloss.svgplot import render_fit_svg

truth = TwoToneParams(f_r=4.8e9, inv_q_tls=2e-5, omega0_over_2pi=16.2e3, temperature=0.01)
manifest = synth_sweep("pump", truth, np.linspace(-1.5e6, 1.5e6, 61), noise=0.02, seed=6)
res = fit_pump_sweep(manifest)
show(res, ["inv_q_tls", "omega0_over_2pi"])

d = dipole_moment(res["omega0_over_2pi"], 0.1)
print(f"  dipole d/e at 0.1 V/m: {d * 1e9:.3g} nm")

ex = res.extras
path = out_dir() / "pump_sweep.svg"
render_fit_svg(ex["control"] / 1e3, ex["shift"], ex["model"], ex["shift"] - ex["model"], path,
               title="pump sweep", xlabel="pump detuning [kHz]", ylabel="shift [Hz]")
print(f"wrote {path}")
