"""Microscopic TLS ensemble checked against the closed-form models.

With identical couplings and a uniform spectral density, the summed loss of
individual driven defects saturates with an exponent of one. The pump-sweep
extremum moves with the square root of the pump photon number.

    python demos/tls_oracle.py [out_dir]
"""
import numpy as np

from _common import out_dir
from resloss.physmodels import TlsLossParams, tls_power_loss
from resloss.svgplot import render_fit_svg
from resloss.tlsbath import (
    EnsembleConfig,
    ensemble_power_curve,
    extremum_power_law,
    fit_saturation_curve,
    sample_ensemble,
)

f_r, temp, g2, om = 5e9, 0.01, 1e3, 20e3
fixed = dict(omega0_dist=om, gamma2_dist=(g2, g2), gamma1_rule=("fraction_fixed", 1.0), temperature=temp)

ens = sample_ensemble(EnsembleConfig(n_defects=100_000, band_center=f_r, band_halfwidth=2e6, seed=1, **fixed))
n = np.logspace(-3, 4, 30) * 2 * g2**2 / om**2
_, loss = ensemble_power_curve(ens, f_r, n, temp)
fit = fit_saturation_curve(n, loss, f_r, temp)
print(f"saturation exponent phi = {fit['phi']:.3f} +- {fit.err('phi'):.3f}")

model = tls_power_loss(TlsLossParams(fit["inv_q_tls"], fit["n_c"], fit["phi"], 0.0, f_r, temp), n)
path = out_dir() / "tls_oracle_power.svg"
render_fit_svg(n, loss, model, None, path, title="ensemble power curve",
               xlabel="photon number", ylabel="1/Q", logx=True)
print(f"wrote {path}")

cfg = EnsembleConfig(n_defects=50_000, band_center=f_r, band_halfwidth=7.5e5, **fixed)
slope, locs = extremum_power_law(cfg, f_r, [2.0, 20.0], seeds=range(4))
print(f"extremum location ~ n^{slope:.3f}  (locations {np.round(locs / 1e3, 1)} kHz)")
