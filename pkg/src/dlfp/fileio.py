"""On-disk formats: recordings, config documents, report documents.

Recordings are plain text (comment-style header, one sample per line at
17 significant digits) so they survive inspection, diffing, and exact
round-trips. Configs and reports are JSON trees carrying an explicit
schema_version.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import asdict
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .mitigation import BandDef, MitigationConfig, MitigationResult
from .signal_chain import (ChannelSpec, OrmSpec, Recording, SimConfig,
                           SourceSpec, StimSpec)
from .spectral import WelchParams

SCHEMA_VERSION = 1
RECORDING_TAG = "dlfp-recording v1"

try:
    TOOL_VERSION = version("dlfp")
except PackageNotFoundError:  # running from a source tree
    TOOL_VERSION = "0.1.0"


class RecordingParseError(ValueError):
    """Malformed recording file; message names the offending line."""


class ConfigError(ValueError):
    """Invalid or unknown content in a config document."""


# ---------------------------------------------------------------- recordings

def write_recording(rec: Recording, path: str | Path) -> None:
    """Write header plus one sample per line, 17 significant digits."""
    lines = [f"# {RECORDING_TAG}", f"# fs: {format(rec.fs, '.17g')}"]
    for key in sorted(rec.meta):
        lines.append(f"# {key}: {rec.meta[key]}")
    lines.extend(format(x, ".17g") for x in rec.samples)
    Path(path).write_text("\n".join(lines) + "\n")


def read_recording(path: str | Path) -> Recording:
    """Parse a recording file; inverse of write_recording, bit exact."""
    text = Path(path).read_text()
    fs: float | None = None
    meta: dict[str, str] = {}
    samples: list[float] = []
    in_header = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if not in_header:
                raise RecordingParseError(
                    f"line {lineno}: header line after samples")
            body = line.lstrip("#").strip()
            if body == RECORDING_TAG:
                continue
            if ":" not in body:
                raise RecordingParseError(
                    f"line {lineno}: malformed header {raw!r}")
            key, _, value = body.partition(":")
            key, value = key.strip(), value.strip()
            if key == "fs":
                try:
                    fs = float(value)
                except ValueError:
                    raise RecordingParseError(
                        f"line {lineno}: fs is not a number: {value!r}") from None
                if fs <= 0:
                    raise RecordingParseError(
                        f"line {lineno}: fs must be positive, got {value}")
            else:
                meta[key] = value
            continue
        in_header = False
        try:
            samples.append(float(line))
        except ValueError:
            raise RecordingParseError(
                f"line {lineno}: sample is not a number: {raw!r}") from None
    if fs is None:
        raise RecordingParseError("missing required header 'fs'")
    return Recording(samples=np.array(samples), fs=fs, meta=meta)


# ------------------------------------------------------------------- configs

@dataclasses.dataclass
class ConfigDocument:
    sim: SimConfig
    welch: WelchParams
    mitigation: MitigationConfig


def _check_fields(data: dict, cls, path: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"'{path}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown field '{path}.{key}'")


def _scalar_section(cls, data: dict, path: str):
    _check_fields(data, cls, path)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"invalid '{path}' section: {exc}") from None


def _sim_from_dict(data: dict, path: str = "simulation") -> SimConfig:
    _check_fields(data, SimConfig, path)
    data = dict(data)
    nested = {
        "source1": SourceSpec, "source3": SourceSpec,
        "stim": StimSpec, "channel": ChannelSpec, "orm": OrmSpec,
    }
    kwargs = {}
    for name, cls in nested.items():
        if name in data:
            kwargs[name] = _scalar_section(cls, data.pop(name), f"{path}.{name}")
    kwargs.update(data)
    try:
        return SimConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid '{path}' section: {exc}") from None


def _mitigation_from_dict(data: dict, path: str = "mitigation") -> MitigationConfig:
    _check_fields(data, MitigationConfig, path)
    data = dict(data)
    if "bands" in data:
        bands = []
        for i, item in enumerate(data["bands"]):
            _check_fields(item, BandDef, f"{path}.bands[{i}]")
            bands.append(BandDef(**item))
        data["bands"] = tuple(bands)
    for key in ("fit_range", "ash_freqs", "imh_freqs", "shoulder",
                "fit_exclude"):
        if key in data:
            data[key] = tuple(data[key])
    try:
        return MitigationConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"invalid '{path}' section: {exc}") from None


def config_from_dict(data: dict) -> ConfigDocument:
    """Build configs from a parsed tree; unknown fields are rejected,
    missing ones take the documented defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    allowed = {"schema_version", "simulation", "welch", "mitigation"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown field '{key}'")
    schema = data.get("schema_version", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {schema!r}")
    sim = _sim_from_dict(data.get("simulation", {}))
    welch = _scalar_section(WelchParams, data.get("welch", {}), "welch")
    mitigation = _mitigation_from_dict(data.get("mitigation", {}))
    for section in (sim, welch, mitigation):
        try:
            section.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return ConfigDocument(sim=sim, welch=welch, mitigation=mitigation)


def config_to_dict(doc: ConfigDocument) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "simulation": asdict(doc.sim),
        "welch": asdict(doc.welch),
        "mitigation": asdict(doc.mitigation),
    }


def read_config(path: str | Path) -> ConfigDocument:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    return config_from_dict(data)


def write_config(doc: ConfigDocument, path: str | Path) -> None:
    Path(path).write_text(_dumps(config_to_dict(doc)))


# ------------------------------------------------------------------- reports

def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dumps(payload: dict) -> str:
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def write_report(payload: dict, path: str | Path, kind: str) -> None:
    """Wrap a payload with schema/tool provenance and write it as JSON."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "tool": {"name": "dlfp", "version": TOOL_VERSION},
    }
    doc.update(payload)
    Path(path).write_text(_dumps(doc))


def read_report(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version in {path}")
    return data


def mitigation_report_dict(rec: Recording, result: MitigationResult) -> dict:
    """Serializable summary of one mitigation run."""
    gcr = result.gcr_report
    return {
        "recording": {
            "fs": rec.fs,
            "n_samples": int(rec.samples.size),
            "meta": dict(rec.meta),
        },
        "welch": asdict(result.psd.params),
        "detrend": {
            "poly_order": len(result.poly_coeffs) - 1,
            "fit_range": list(result.fit_range),
            "coeffs": [float(c) for c in result.poly_coeffs],
        },
        "bands": {
            "variant": result.band_report.variant,
            "definitions": [asdict(b) for b in result.band_report.bands],
            "medians_db": result.band_report.medians,
        },
        "gcr": {
            "formula": "imh/(ash+imh)",
            "value": gcr.gcr,
            "p_ash": gcr.p_ash,
            "p_imh": gcr.p_imh,
            "threshold": gcr.threshold,
            "flagged": gcr.flagged,
            "ash_freqs": list(gcr.ash_freqs),
            "imh_freqs": list(gcr.imh_freqs),
        },
        "spectrum": {
            "freqs_hz": result.detrended.freqs.tolist(),
            "log_psd_db": result.log.db.tolist(),
            "detrended_db": result.detrended.db.tolist(),
        },
    }


def write_psd_text(freqs: np.ndarray, power: np.ndarray, path: str | Path,
                   header: dict | None = None) -> None:
    """Two-column frequency/power text file with a comment header."""
    lines = ["# dlfp-psd v1"]
    for key, value in (header or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append("# columns: freq_hz power")
    for f, p in zip(freqs, power):
        lines.append(f"{format(f, '.17g')} {format(p, '.17g')}")
    Path(path).write_text("\n".join(lines) + "\n")
