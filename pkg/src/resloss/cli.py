"""Command-line frontend: simulate, fit, run the ensemble oracle and small calculators.

Exit codes: 0 success, 2 invalid input, 3 fit failure or non-convergence
(the report is still written), 64 usage error. ``RESLOSS_LOG`` selects
logging on stderr (``off``, ``info`` or ``debug``).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, dataio
from .errors import DomainError, FitError, ValidationError
from .physmodels.cavity import kappa_eff
from .physmodels.constants import H, K_B, TWO_PI
from .physmodels.superconductor import SuperconductorParams
from .physmodels.tls import TlsLossParams, TwoToneParams, dipole_moment, relative_tls_density
from .pipelines import (
    DeviceInfo,
    TemperatureTruth,
    TraceBackground,
    bare_frequency,
    fit_power_sweep,
    fit_pump_sweep,
    fit_temperature_sweep,
    fit_trace,
    synth_sweep,
    synth_trace,
)
from .svgplot import render_fit_svg
from .tlsbath import EnsembleConfig, ensemble_power_curve, extremum_power_law, fit_saturation_curve, sample_ensemble

__all__ = ["main", "build_parser", "render_fit_svg", "EXIT_OK", "EXIT_INVALID", "EXIT_FIT", "EXIT_USAGE"]

log = logging.getLogger("resloss")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FIT = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = os.environ.get("RESLOSS_LOG", "off").strip().lower()
    levels = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        print(f"resloss: ignoring RESLOSS_LOG={level!r}; expected off, info or debug", file=sys.stderr)
        level = "off"
    logger = logging.getLogger("resloss")
    logger.handlers[:] = []
    if levels[level] is None:
        logger.addHandler(logging.NullHandler())
        logger.setLevel(logging.CRITICAL + 1)
    else:
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(h)
        logger.setLevel(levels[level])
        logging.captureWarnings(True)
        logging.getLogger("py.warnings").addHandler(h)
    logger.propagate = False


def _timestamp():
    # SOURCE_DATE_EPOCH pins the report timestamp for reproducible builds
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        try:
            now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
        except ValueError:
            raise ValidationError(f"SOURCE_DATE_EPOCH={epoch!r} is not an integer") from None
    else:
        now = _dt.datetime.now(_dt.timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------- parser


def _device_args(p):
    p.add_argument("--resonator", default="Res 2", help="resonator design name (sets g from the coupling table)")
    p.add_argument("--g-over-2pi-hz", type=float, default=None, help="cavity-resonator coupling g/2pi [Hz]")
    p.add_argument("--f-c-hz", type=float, default=8e9, help="cavity frequency [Hz]")
    p.add_argument("--cavity-kappa-hz", type=float, default=1e6, help="cavity port coupling kappa/2pi [Hz]")


def _fit_outputs(p):
    p.add_argument("--report", type=Path, help="write the ReportV1 JSON here")
    p.add_argument("--svg", type=Path, help="write a data/model/residual SVG plot here")
    p.add_argument("--curve", type=Path, help="write data, model and residual columns as CSV here")
    p.add_argument("--json", action="store_true", help="print the report JSON on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resloss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"resloss {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit-trace", help="fit one complex S21 trace")
    p.add_argument("trace", type=Path)
    p.add_argument("--f-c-hz", type=float, default=8e9, help="cavity frequency of the direct term [Hz]")
    _fit_outputs(p)

    p = sub.add_parser("fit-power", help="fit TLS saturation to a power sweep")
    p.add_argument("manifest", type=Path)
    _fit_outputs(p)

    p = sub.add_parser("fit-pump", help="fit the hole-burning shift to a pump-detuning sweep")
    p.add_argument("manifest", type=Path)
    p.add_argument("--heating", action="store_true", help="fit the heating coefficient as well")
    p.add_argument("--two-stage", action="store_true", help="fit heating after the hole-burning parameters")
    _fit_outputs(p)

    p = sub.add_parser("fit-temp", help="fit TLS and quasiparticle shifts to a temperature sweep")
    p.add_argument("manifest", type=Path)
    p.add_argument("--tc-k", type=float, default=None, help="critical temperature; overrides the manifest film")
    _fit_outputs(p)

    sim = sub.add_parser("simulate", help="write synthetic data with known truth")
    simsub = sim.add_subparsers(dest="kind", metavar="KIND", parser_class=_Parser)
    simsub.required = True
    for kind in ("trace", "power", "pump", "temp"):
        q = simsub.add_parser(kind)
        q.add_argument("--out", type=Path, required=True, help="output directory")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--f-r-hz", type=float, default=4.8e9, help="(dressed) resonance frequency [Hz]")
        _device_args(q)
        if kind == "trace":
            q.add_argument("--kappa-tot-hz", type=float, default=50e3)
            q.add_argument("--snr-db", type=float, default=40.0)
            q.add_argument("--points", type=int, default=401)
            q.add_argument("--span-hz", type=float, default=None)
            q.add_argument("--phase-rad", type=float, default=0.0)
            q.add_argument("--delay-s", type=float, default=0.0)
            continue
        q.add_argument("--inv-q-tls", type=float, default=2e-5)
        q.add_argument("--traces", action="store_true", help="store one synthetic trace per point")
        if kind == "power":
            q.add_argument("--n-c", type=float, default=10.0)
            q.add_argument("--phi", type=float, default=0.44)
            q.add_argument("--inv-q-r", type=float, default=2e-6)
            q.add_argument("--n-min", type=float, default=1e-2)
            q.add_argument("--n-max", type=float, default=1e8)
            q.add_argument("--points", type=int, default=41)
            q.add_argument("--noise", type=float, default=0.02, help="relative noise on gamma_r")
            q.add_argument("--temperature-k", type=float, default=0.01)
        elif kind == "pump":
            q.add_argument("--omega0-khz", type=float, default=16.2)
            q.add_argument("--heating-eta", type=float, default=0.0, help="K per pump photon")
            q.add_argument("--pump-power-dbm", type=float, default=-30.0)
            q.add_argument("--kappa-tot-hz", type=float, default=50e3)
            q.add_argument("--delta-max-hz", type=float, default=1.5e6)
            q.add_argument("--points", type=int, default=61)
            q.add_argument("--noise", type=float, default=0.02, help="noise as a fraction of the peak shift")
            q.add_argument("--temperature-k", type=float, default=0.01)
        else:
            q.add_argument("--alpha", type=float, default=0.05)
            q.add_argument("--tc-k", type=float, default=9.04)
            q.add_argument("--t-min", type=float, default=0.01)
            q.add_argument("--t-max", type=float, default=2.5)
            q.add_argument("--points", type=int, default=40)
            q.add_argument("--noise", type=float, default=0.01, help="noise as a fraction of the peak shift")

    orc = sub.add_parser("oracle", help="microscopic TLS-ensemble checks of the closed forms")
    orcsub = orc.add_subparsers(dest="kind", metavar="KIND", parser_class=_Parser)
    orcsub.required = True
    for kind in ("power", "pump"):
        q = orcsub.add_parser(kind)
        q.add_argument("--n-defects", type=int, default=100_000)
        q.add_argument("--seed", type=int, default=1)
        q.add_argument("--f-r-hz", type=float, default=5e9)
        q.add_argument("--omega0-khz", type=float, default=20.0)
        q.add_argument("--gamma2-hz", type=float, default=1e3)
        q.add_argument("--out", type=Path, default=None, help="directory for curve CSV and SVG")
        q.add_argument("--json", action="store_true")
        if kind == "pump":
            q.add_argument("--seeds", type=int, default=8, help="ensembles averaged per photon number")
            q.add_argument("--n-min", type=float, default=2.0)
            q.add_argument("--n-max", type=float, default=20.0)
            q.add_argument("--n-count", type=int, default=4)
            q.add_argument("--band-halfwidth-hz", type=float, default=7.5e5,
                           help="must cover the widest sweep plus five Rabi widths")

    p = sub.add_parser("dipole", help="TLS dipole moment from the single-photon Rabi frequency")
    p.add_argument("--omega0-khz", type=float, required=True)
    p.add_argument("--field-v-per-m", type=float, default=0.1)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("density", help="TLS density relative to a reference sample")
    p.add_argument("--inv-q-tls", type=float, required=True)
    p.add_argument("--omega0-khz", type=float, required=True)
    p.add_argument("--ref-inv-q-tls", type=float, required=True)
    p.add_argument("--ref-omega0-khz", type=float, required=True)
    p.add_argument("--json", action="store_true")
    return parser


# ---------------------------------------------------------------- helpers


def _device(args) -> DeviceInfo:
    return DeviceInfo(resonator=args.resonator, g_over_2pi=args.g_over_2pi_hz, f_c=args.f_c_hz,
                      kappa_over_2pi=args.cavity_kappa_hz)


def _write_curve(path: Path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(repr(float(v)) for v in row))
    dataio.atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _print_result(res, kind):
    print(f"{kind} fit: converged={res.converged} ({res.convergence_reason.value}), "
          f"chi2/dof={res.reduced_chi2:.4g}")
    for name, v, e in zip(res.param_names, res.params, res.stderr):
        unit = dataio.PARAM_UNITS.get(name, "")
        print(f"  {name} = {v:.6g} +- {e:.3g} {unit}".rstrip())
    for w in res.warnings:
        print(f"  warning: {w}")


def _finish_fit(args, res, kind, digest, truth, options, plot):
    doc = dataio.build_report(res, kind, digest, truth=truth, options=options, timestamp=_timestamp())
    if args.report:
        dataio.write_report(doc, args.report)
    x, y, model, xlabel, ylabel, logx = plot
    resid = y - model
    if args.curve:
        _write_curve(args.curve, ["x", "data", "model", "residual"], [x, y, model, resid])
    if args.svg:
        render_fit_svg(x, y, model, resid, args.svg, title=f"{kind} fit", xlabel=xlabel, ylabel=ylabel, logx=logx)
    if args.json:
        sys.stdout.write(json.dumps(doc, indent=2, allow_nan=False) + "\n")
    else:
        _print_result(res, kind)
    return EXIT_OK if res.converged else EXIT_FIT


# ---------------------------------------------------------------- commands


def _cmd_fit_trace(args):
    raw = args.trace.read_bytes() if args.trace.is_file() else None
    trace = dataio.read_trace(args.trace)
    res = fit_trace(trace, f_c=args.f_c_hz)
    digest = dataio.manifest_digest(raw, [])
    f = trace.frequencies
    model = np.abs(trace.s21 + res.extras["residual"])
    plot = (f, np.abs(trace.s21), model, "frequency [Hz]", "|S21|", False)
    return _finish_fit(args, res, "trace", digest, None, {"f_c_hz": args.f_c_hz}, plot)


def _cmd_fit_power(args):
    m = dataio.read_manifest(args.manifest)
    res = fit_power_sweep(m)
    ex = res.extras
    plot = (ex["n_bar"], ex["inv_q_i"], ex["model"], "photon number", "1/Q_i", True)
    return _finish_fit(args, res, "power", m.input_digest, m.truth, {}, plot)


def _cmd_fit_pump(args):
    m = dataio.read_manifest(args.manifest)
    res = fit_pump_sweep(m, heating=args.heating, two_stage=args.two_stage)
    ex = res.extras
    plot = (ex["control"], ex["shift"], ex["model"], "pump detuning [Hz]", "frequency shift [Hz]", False)
    return _finish_fit(args, res, "pump", m.input_digest, m.truth,
                       {"heating": args.heating, "two_stage": args.two_stage}, plot)


def _cmd_fit_temp(args):
    m = dataio.read_manifest(args.manifest)
    sc = None
    if args.tc_k is not None:
        sc = SuperconductorParams(t_c=args.tc_k)
    res = fit_temperature_sweep(m, sc)
    ex = res.extras
    plot = (ex["control"], ex["shift"], ex["model"], "temperature [K]", "frequency shift [Hz]", False)
    opts = {} if args.tc_k is None else {"t_c_k": args.tc_k}
    return _finish_fit(args, res, "temperature", m.input_digest, m.truth, opts, plot)


def _cmd_simulate(args):
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    dev = _device(args)
    if args.kind == "trace":
        f_bare = bare_frequency(dev, args.f_r_hz)
        ke = kappa_eff(dev.cavity(f_bare)) / TWO_PI
        gamma_r = args.kappa_tot_hz - 2 * ke
        if not gamma_r > 0:
            raise ValidationError(f"--kappa-tot-hz must exceed 2 kappa_eff = {2 * ke:.6g} Hz")
        cav = dev.cavity(f_bare, gamma_r)
        bg = TraceBackground(phase_offset=args.phase_rad, electrical_delay=args.delay_s)
        tr = synth_trace(cav, bg, args.snr_db, args.points, args.span_hz, args.seed,
                         metadata={"resonator": dev.resonator})
        dataio.write_trace(tr, out / "trace.csv")
        truth = {"f_r_hz": args.f_r_hz, "kappa_tot_hz": args.kappa_tot_hz}
        dataio.atomic_write(out / "truth.json", (json.dumps(truth, indent=2) + "\n").encode("utf-8"))
        print(out / "trace.csv")
        return EXIT_OK
    if args.kind == "power":
        truth = TlsLossParams(args.inv_q_tls, args.n_c, args.phi, args.inv_q_r, args.f_r_hz, args.temperature_k)
        grid = np.logspace(np.log10(args.n_min), np.log10(args.n_max), args.points)
        m = synth_sweep("power", truth, grid, args.noise, args.seed, device=dev, traces=args.traces)
    elif args.kind == "pump":
        truth = TwoToneParams(args.f_r_hz, args.inv_q_tls, args.omega0_khz * 1e3, args.temperature_k,
                              args.heating_eta)
        grid = np.linspace(-args.delta_max_hz, args.delta_max_hz, args.points)
        m = synth_sweep("pump", truth, grid, args.noise, args.seed, device=dev,
                        pump_power_dbm=args.pump_power_dbm, kappa_tot_hz=args.kappa_tot_hz, traces=args.traces)
    else:
        sc = SuperconductorParams(t_c=args.tc_k, alpha=args.alpha)
        truth = TemperatureTruth(args.f_r_hz, args.inv_q_tls, sc)
        grid = np.linspace(args.t_min, args.t_max, args.points)
        m = synth_sweep("temperature", truth, grid, args.noise, args.seed, device=dev, traces=args.traces)
    path = dataio.write_manifest(m, out / "manifest.json")
    print(path)
    return EXIT_OK


def _cmd_oracle(args):
    om = args.omega0_khz * 1e3
    g2 = args.gamma2_hz
    fixed = dict(omega0_dist=om, gamma2_dist=(g2, g2), gamma1_rule=("fraction_fixed", 1.0), temperature=0.01)
    if args.kind == "power":
        n_c = 2 * g2 * g2 / om**2  # gamma1 gamma2 / g**2 with gamma1 = 2 gamma2
        cfg = EnsembleConfig(n_defects=args.n_defects, band_center=args.f_r_hz, band_halfwidth=2000 * g2,
                             seed=args.seed, **fixed)
        n = np.logspace(-3, 4, 30) * n_c
        ens = sample_ensemble(cfg)
        _, loss = ensemble_power_curve(ens, args.f_r_hz, n, cfg.temperature)
        res = fit_saturation_curve(n, loss, args.f_r_hz, cfg.temperature)
        summary = {"phi": res["phi"], "phi_stderr": res.err("phi"), "n_c": res["n_c"],
                   "n_c_expected": n_c, "inv_q_tls": res["inv_q_tls"], "converged": res.converged}
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            q, nc_fit, phi = res.params
            model = q * np.tanh(H * args.f_r_hz / (2 * K_B * cfg.temperature)) / np.sqrt(1 + (n / nc_fit) ** phi)
            _write_curve(args.out / "oracle_power.csv", ["n_bar", "loss", "model"], [n, loss, model])
            render_fit_svg(n, loss, model, loss - model, args.out / "oracle_power.svg",
                           title="ensemble power curve", xlabel="photon number", ylabel="1/Q", logx=True)
    else:
        n_values = np.logspace(np.log10(args.n_min), np.log10(args.n_max), args.n_count)
        cfg = EnsembleConfig(n_defects=args.n_defects, band_center=args.f_r_hz, band_halfwidth=args.band_halfwidth_hz,
                             seed=args.seed, **fixed)
        exponent, locs = extremum_power_law(cfg, args.f_r_hz, n_values, seeds=range(args.seed, args.seed + args.seeds))
        summary = {"exponent": exponent, "n_bar": n_values.tolist(), "extremum_hz": locs.tolist(),
                   "closed_form_hz": (om * np.sqrt(n_values) / np.sqrt(6)).tolist()}
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            _write_curve(args.out / "oracle_pump.csv", ["n_bar", "extremum_hz"], [n_values, locs])
    if args.json:
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    else:
        for k, v in summary.items():
            print(f"{k} = {v}")
    return EXIT_OK


def _cmd_dipole(args):
    d = float(dipole_moment(args.omega0_khz * 1e3, args.field_v_per_m))
    if args.json:
        sys.stdout.write(json.dumps({"d_over_e_m": d, "d_over_e_nm": d * 1e9}) + "\n")
    else:
        print(f"d/e = {d * 1e9:.3g} nm")
    return EXIT_OK


def _cmd_density(args):
    r = relative_tls_density((args.ref_inv_q_tls, args.ref_omega0_khz * 1e3),
                             (args.inv_q_tls, args.omega0_khz * 1e3))
    if args.json:
        sys.stdout.write(json.dumps({"relative_density": r}) + "\n")
    else:
        print(f"N0/N0_ref = {r:.4g}")
    return EXIT_OK


_COMMANDS = {
    "fit-trace": _cmd_fit_trace,
    "fit-power": _cmd_fit_power,
    "fit-pump": _cmd_fit_pump,
    "fit-temp": _cmd_fit_temp,
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "dipole": _cmd_dipole,
    "density": _cmd_density,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    _setup_logging()
    try:
        with warnings.catch_warnings():
            if os.environ.get("RESLOSS_LOG", "off").strip().lower() == "off":
                warnings.simplefilter("ignore")
            return _COMMANDS[args.command](args)
    except FitError as exc:
        print(f"resloss: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValidationError, DomainError) as exc:
        print(f"resloss: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"resloss: invalid input: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
