"""File formats: trace CSV, sweep manifests, ensemble configs and fit reports.

Everything that touches storage lives here. Writes are atomic (temporary
file in the target directory, then ``os.replace``), parsing never depends on
the locale, and every format carries an explicit version.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema
import numpy as np

from . import __version__
from .errors import ParseError, ValidationError
from .fitcore import FitResult
from .physmodels.cavity import CalibrationParams
from .pipelines.types import ComplexTrace, DeviceInfo, SweepEntry, SweepManifest
from .tlsbath import EnsembleConfig

__all__ = [
    "TRACE_FORMAT",
    "SCHEMA_VERSION",
    "PARAM_UNITS",
    "read_trace",
    "write_trace",
    "format_trace",
    "parse_trace",
    "read_manifest",
    "write_manifest",
    "manifest_digest",
    "build_report",
    "write_report",
    "read_report",
    "validate_report",
    "read_ensemble_config",
    "write_ensemble_config",
    "atomic_write",
]

PathLike = Union[str, os.PathLike]

TRACE_FORMAT = 1
SCHEMA_VERSION = 1
TRACE_HEADER = "freq_hz,re_s21,im_s21"
# metadata keys in write order, with their parsers
TRACE_METADATA = {
    "power_dbm": float,
    "temperature_k": float,
    "pump_freq_hz": float,
    "pump_power_dbm": float,
    "resonator": str,
}
CONTROL_UNITS = {"power": "dBm", "pump": "Hz", "temperature": "K"}

PARAM_UNITS = {
    "f_r_hz": "Hz",
    "kappa_tot_hz": "Hz",
    "kappa_eff_apparent_hz": "Hz",
    "cavity_term_kappa_hz": "Hz",
    "phase_offset_rad": "rad",
    "electrical_delay_s": "s",
    "inv_q_tls": "1",
    "n_c": "photons",
    "phi": "1",
    "inv_q_r": "1",
    "omega0_over_2pi": "Hz",
    "heating_eta": "K/photon",
    "alpha": "1",
}


def _schema(name: str) -> dict:
    text = resources.files("resloss").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def atomic_write(path: PathLike, data: bytes):
    """Write `data` to `path` via a temporary sibling file and ``os.replace``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix="." + path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- traces


def format_trace(trace: ComplexTrace) -> str:
    """Serialize a trace to TraceFileV1 text (shortest round-trip float repr)."""
    lines = [f"# trace_format={TRACE_FORMAT}"]
    md = trace.metadata or {}
    for key in list(TRACE_METADATA) + sorted(k for k in md if k not in TRACE_METADATA):
        if key in md and md[key] is not None:
            val = md[key]
            if isinstance(val, str) and ("\n" in val or "\r" in val):
                raise ValidationError(f"metadata value for {key!r} contains a line break")
            lines.append(f"# {key}={val!r}" if isinstance(val, float) else f"# {key}={val}")
    lines.append(TRACE_HEADER)
    for f, s in zip(trace.frequencies, trace.s21):
        lines.append(f"{float(f)!r},{float(s.real)!r},{float(s.imag)!r}")
    return "\n".join(lines) + "\n"


def write_trace(trace: ComplexTrace, path: PathLike):
    atomic_write(path, format_trace(trace).encode("utf-8"))


def _parse_float(text: str, path, line: int, what: str) -> float:
    t = text.strip()
    # float() accepts forms such as "1_0" and "infinity" that are not valid here
    if not t or "_" in t:
        raise ParseError(f"invalid number {text!r} in {what}", path, line)
    try:
        v = float(t)
    except ValueError:
        raise ParseError(f"invalid number {text!r} in {what}", path, line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r} in {what}", path, line)
    return v


def parse_trace(text: str, path=None) -> ComplexTrace:
    """Parse TraceFileV1 text.

    Raises
    ------
    ParseError
        Malformed header, wrong column count, non-numeric or non-finite
        values, non-monotone grid, or an unsupported format version; the
        message names the offending line.
    """
    meta = {}
    header_seen = False
    freqs, re_, im_ = [], [], []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not header_seen:
            if line.startswith("#"):
                body = line[1:].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise ParseError(f"metadata line without '=': {line!r}", path, no)
                key, val = (s.strip() for s in body.split("=", 1))
                if key == "trace_format":
                    if val != str(TRACE_FORMAT):
                        raise ParseError(f"unsupported trace_format {val!r}; this reader handles {TRACE_FORMAT}", path, no)
                    continue
                parser = TRACE_METADATA.get(key, str)
                meta[key] = _parse_float(val, path, no, f"metadata {key}") if parser is float else val
                continue
            if line.strip() == "":
                continue
            if line.strip().lower().replace(" ", "") != TRACE_HEADER:
                raise ParseError(f"malformed header {line!r}; expected {TRACE_HEADER!r}", path, no)
            header_seen = True
            continue
        if line.strip() == "" or line.startswith("#"):
            continue
        cols = line.split(",")
        if len(cols) != 3:
            raise ParseError(f"expected 3 columns, found {len(cols)}", path, no)
        f = _parse_float(cols[0], path, no, "freq_hz")
        if freqs and not f > freqs[-1][0]:
            raise ParseError(f"non-monotone grid: {f!r} Hz does not exceed the previous {freqs[-1][0]!r} Hz", path, no)
        freqs.append((f, no))
        re_.append(_parse_float(cols[1], path, no, "re_s21"))
        im_.append(_parse_float(cols[2], path, no, "im_s21"))
    if not header_seen:
        raise ParseError(f"missing header {TRACE_HEADER!r}", path, None)
    if not freqs:
        raise ParseError("no data rows", path, None)
    f = np.array([v for v, _ in freqs])
    return ComplexTrace(f, np.array(re_) + 1j * np.array(im_), meta)


def read_trace(path: PathLike) -> ComplexTrace:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"trace file not found: {path}")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", path) from None
    return parse_trace(text, path)


# ---------------------------------------------------------------- manifests


def _num_or_none(v):
    return None if v is None else float(v)


def _device_to_dict(d: DeviceInfo) -> dict:
    return {"resonator": d.resonator, "g_over_2pi_hz": d.g_over_2pi, "f_c_hz": d.f_c,
            "kappa_over_2pi_hz": d.kappa_over_2pi}


def _device_from_dict(d: dict) -> DeviceInfo:
    return DeviceInfo(resonator=d.get("resonator", "Res 2"), g_over_2pi=d.get("g_over_2pi_hz"),
                      f_c=d.get("f_c_hz", 8e9), kappa_over_2pi=d.get("kappa_over_2pi_hz", 1e6))


def manifest_to_dict(manifest: SweepManifest, trace_paths=None) -> dict:
    entries = []
    for i, e in enumerate(manifest.entries):
        row = {"control": float(e.control)}
        if trace_paths is not None and trace_paths[i] is not None:
            row["trace"] = trace_paths[i]
        else:
            if e.f_r_hz is None:
                raise ValidationError(f"entry {i} has neither a trace path nor extracted values")
            row["f_r_hz"] = float(e.f_r_hz)
            row["kappa_tot_hz"] = float(e.kappa_tot_hz)
            if e.f_r_stderr_hz is not None:
                row["f_r_stderr_hz"] = float(e.f_r_stderr_hz)
            if e.kappa_tot_stderr_hz is not None:
                row["kappa_tot_stderr_hz"] = float(e.kappa_tot_stderr_hz)
        if e.pump_power_dbm is not None:
            row["pump_power_dbm"] = float(e.pump_power_dbm)
        entries.append(row)
    cal = manifest.calibration
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": manifest.kind,
        "control_unit": CONTROL_UNITS[manifest.kind],
        "device": _device_to_dict(manifest.device),
        "calibration": {"gain_in_db": cal.gain_in_db, "field_at_one_photon_v_per_m": cal.field_at_one_photon},
        "temperature_k": manifest.temperature_k,
        "reference_f_r_hz": _num_or_none(manifest.reference_f_r_hz),
        "pump_power_dbm": _num_or_none(manifest.pump_power_dbm),
        "superconductor": manifest.superconductor,
        "truth": manifest.truth,
        "entries": entries,
    }


def write_manifest(manifest: SweepManifest, path: PathLike, trace_dir: str = "traces") -> Path:
    """Write `manifest` as JSON; entries that hold a trace get a CSV under `trace_dir`.

    Trace paths are stored relative to the manifest's directory.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(manifest.entries) - 1)))
    rel = []
    for i, e in enumerate(manifest.entries):
        if e.trace is None:
            rel.append(None)
            continue
        name = f"{trace_dir}/trace_{i:0{width}d}.csv"
        (path.parent / trace_dir).mkdir(parents=True, exist_ok=True)
        write_trace(e.trace, path.parent / name)
        rel.append(name)
    doc = manifest_to_dict(manifest, rel)
    atomic_write(path, (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8"))
    return path


def _load_json(path: Path, what: str) -> tuple:
    if not path.is_file():
        raise ValidationError(f"{what} not found: {path}")
    raw = path.read_bytes()
    try:
        return json.loads(raw.decode("utf-8")), raw
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"invalid JSON: {exc}", path, line) from None


def _check_version(doc, path, what):
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ParseError(f"{what} has no schema_version", path)
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ParseError(f"unsupported {what} schema_version {doc['schema_version']!r}; "
                         f"this reader handles {SCHEMA_VERSION}", path)


def _validate(doc, schema_name, path, what):
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"invalid {what} at {loc}: {exc.message}", path) from None


def manifest_digest(manifest_bytes: bytes, trace_bytes) -> str:
    """``sha256:`` digest over the manifest bytes followed by each trace's bytes."""
    h = hashlib.sha256()
    h.update(manifest_bytes)
    for b in trace_bytes:
        h.update(len(b).to_bytes(8, "little"))
        h.update(b)
    return "sha256:" + h.hexdigest()


def read_manifest(path: PathLike) -> SweepManifest:
    """Load and fully resolve a manifest; entries come back sorted by control.

    Trace paths are resolved against the manifest's own directory.
    """
    path = Path(path)
    doc, raw = _load_json(path, "manifest")
    _check_version(doc, path, "manifest")
    _validate(doc, "manifest_v1.json", path, "manifest")
    unit = doc.get("control_unit")
    if unit is not None and unit != CONTROL_UNITS[doc["kind"]]:
        raise ParseError(f"control_unit {unit!r} does not match kind {doc['kind']!r}", path)
    base = path.parent
    entries, blobs = [], []
    for row in doc["entries"]:
        if "trace" in row:
            tpath = Path(row["trace"])
            if tpath.is_absolute():
                raise ParseError(f"trace path {row['trace']!r} must be relative to the manifest", path)
            full = base / tpath
            if not full.is_file():
                raise ValidationError(f"trace file not found: {full} (referenced by {path})")
            data = full.read_bytes()
            blobs.append(data)
            try:
                trace = parse_trace(data.decode("utf-8"), full)
            except UnicodeDecodeError as exc:
                raise ParseError(f"not UTF-8: {exc}", full) from None
            entries.append(SweepEntry(control=float(row["control"]), trace=trace, trace_path=str(tpath),
                                      pump_power_dbm=row.get("pump_power_dbm")))
        else:
            entries.append(SweepEntry(
                control=float(row["control"]), f_r_hz=row["f_r_hz"], kappa_tot_hz=row["kappa_tot_hz"],
                f_r_stderr_hz=row.get("f_r_stderr_hz"), kappa_tot_stderr_hz=row.get("kappa_tot_stderr_hz"),
                pump_power_dbm=row.get("pump_power_dbm"),
            ))
    entries.sort(key=lambda e: e.control)
    cal = doc.get("calibration", {})
    try:
        return SweepManifest(
            kind=doc["kind"],
            entries=entries,
            device=_device_from_dict(doc.get("device", {})),
            calibration=CalibrationParams(
                gain_in_db=cal.get("gain_in_db", CalibrationParams.gain_in_db),
                field_at_one_photon=cal.get("field_at_one_photon_v_per_m", CalibrationParams.field_at_one_photon),
            ),
            temperature_k=doc.get("temperature_k", 0.01),
            reference_f_r_hz=doc.get("reference_f_r_hz"),
            pump_power_dbm=doc.get("pump_power_dbm"),
            superconductor=doc.get("superconductor"),
            truth=doc.get("truth"),
            input_digest=manifest_digest(raw, blobs),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- reports


def _clean(v):
    """JSON-safe number: non-finite values become null."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _timestamp(now: Optional[_dt.datetime] = None) -> str:
    now = now or _dt.datetime.now(_dt.timezone.utc)
    return now.astimezone(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build_report(result: FitResult, kind: str, input_digest: str, truth: Optional[dict] = None,
                 options: Optional[dict] = None, timestamp: Optional[str] = None) -> dict:
    """ReportV1 document for a fit result.

    Scalar entries of ``result.extras`` are reported under ``derived``; array
    extras (curves) are not part of the report.
    """
    names = list(result.param_names)
    cov = np.asarray(result.covariance, dtype=float)
    derived = {}
    for k, v in sorted(result.extras.items()):
        if isinstance(v, (bool, np.bool_)):
            continue
        if isinstance(v, (int, float, np.floating, np.integer)):
            derived[k] = _clean(v)
        elif isinstance(v, str):
            derived[k] = v
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "input_digest": input_digest,
        "param_names": names,
        "units": [PARAM_UNITS.get(n, "") for n in names],
        "params": [_clean(v) for v in result.params],
        "stderr": [_clean(v) for v in result.stderr],
        "covariance": [[_clean(v) for v in row] for row in cov],
        "covariance_available": bool(result.covariance_available),
        "chi2": _clean(result.chi2),
        "dof": int(result.dof),
        "reduced_chi2": _clean(result.reduced_chi2),
        "converged": bool(result.converged),
        "convergence_reason": result.convergence_reason.value,
        "n_iterations": int(result.n_iterations),
        "warnings": list(result.warnings),
        "derived": derived,
        "options": dict(options or {}),
        "truth": None if truth is None else {k: float(v) for k, v in truth.items()},
        "library_version": __version__,
        "timestamp": timestamp or _timestamp(),
    }
    validate_report(doc)
    return doc


def validate_report(doc: dict, path=None):
    _check_version(doc, path, "report")
    _validate(doc, "report_v1.json", path, "report")
    if not (len(doc["params"]) == len(doc["stderr"]) == len(doc["param_names"]) == len(doc["units"])):
        raise ParseError("params, stderr, param_names and units differ in length", path)
    n = len(doc["params"])
    if len(doc["covariance"]) != n or any(len(row) != n for row in doc["covariance"]):
        raise ParseError("covariance is not square in the parameter count", path)


def report_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8")


def write_report(doc: dict, path: PathLike):
    validate_report(doc)
    atomic_write(path, report_bytes(doc))


def read_report(path: PathLike) -> dict:
    path = Path(path)
    doc, _ = _load_json(path, "report")
    validate_report(doc, path)
    return doc


# ---------------------------------------------------------------- ensemble configs


def write_ensemble_config(cfg: EnsembleConfig, path: PathLike):
    doc = {"schema_version": SCHEMA_VERSION, **cfg.to_dict()}
    atomic_write(path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))


def read_ensemble_config(path: PathLike) -> EnsembleConfig:
    path = Path(path)
    doc, _ = _load_json(path, "ensemble config")
    _check_version(doc, path, "ensemble config")
    try:
        return EnsembleConfig.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid ensemble config: {exc}", path) from None


def superconductor_to_dict(sc) -> dict:
    return {k: v for k, v in asdict(sc).items() if v is not None}
