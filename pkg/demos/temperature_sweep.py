"""Separate TLS and quasiparticle contributions to the thermal frequency shift.

Below roughly 0.5 K the shift is set by the TLS bath alone; the kinetic
inductance fraction only shows up once quasiparticles are thermally
excited, so a sweep to 2.5 K is needed to pin it down.

    python demos/temperature_sweep.py [out_dir]
"""
import numpy as np

from _common import out_dir, show
from resloss.physmodels import SuperconductorParams
from resloss.pipelines import TemperatureTruth, fit_temperature_sweep, synth_sweep
from resloss.svgplot import render_fit_svg

truth = TemperatureTruth(4.8e9, 2e-5, SuperconductorParams(t_c=9.04, alpha=0.05))
manifest = synth_sweep("temperature", truth, np.linspace(0.01, 2.5, 40), noise=0.01, seed=3)
print("truth:", manifest.truth)
res = fit_temperature_sweep(manifest)
show(res)

ex = res.extras
path = out_dir() / "temperature_sweep.svg"
render_fit_svg(ex["control"], ex["shift"], ex["model"], ex["shift"] - ex["model"], path,
               title="temperature sweep", xlabel="T [K]", ylabel="shift [Hz]")
print(f"wrote {path}")
