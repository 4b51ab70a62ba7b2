"""Recover the saturation parameters of a TLS bath from a power sweep.

A sweep over ten decades of photon number is generated with 2% scatter on
the linewidths, then fitted for the TLS loss, critical photon number,
saturation exponent and residual loss.

    python demos/power_sweep.py [out_dir]
"""
import numpy as np

from _common import out_dir, show
from resloss.physmodels import TlsLossParams
from resloss.pipelines import fit_power_sweep, synth_sweep
from resloss.svgplot import render_fit_svg

truth = TlsLossParams(inv_q_tls=2e-5, n_c=10.0, phi=0.44, inv_q_r=2e-6, f_r=4.8e9, temperature=0.01)
manifest = synth_sweep("power", truth, np.logspace(-2, 8, 41), noise=0.02, seed=5)
res = fit_power_sweep(manifest)

print("truth:", manifest.truth)
show(res)
for w in res.warnings:
    print("warning:", w)

ex = res.extras
path = out_dir() / "power_sweep.svg"
render_fit_svg(ex["n_bar"], ex["inv_q_i"], ex["model"], ex["inv_q_i"] - ex["model"], path,
               title="power sweep", xlabel="photon number", ylabel="1/Q_i", logx=True)
print(f"wrote {path}")
