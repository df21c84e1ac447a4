"""File format tests: recordings, config documents, reports.

Round trips must be exact (17 significant digits reproduce any float64
bit for bit) and malformed input must fail with the offending line or
field named.
"""

import json

import numpy as np
import pytest

import dlfp
from dlfp.fileio import (
    ConfigDocument,
    ConfigError,
    RecordingParseError,
    config_from_dict,
    config_to_dict,
    mitigation_report_dict,
    read_config,
    read_recording,
    read_report,
    write_config,
    write_psd_text,
    write_recording,
    write_report,
)
from dlfp.mitigation import BandDef, MitigationConfig, mitigate
from dlfp.signal_chain import (
    ChannelSpec,
    OrmSpec,
    Recording,
    SimConfig,
    SourceSpec,
    StimSpec,
)
from dlfp.spectral import WelchParams


# ------------------------------------------------------ recordings

def test_recording_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(9)
    samples = np.concatenate([
        rng.normal(size=100),
        [1e-300, -1e300, 0.0, 1.0 / 3.0, np.pi],
    ])
    rec = Recording(samples=samples, fs=422.0,
                    meta={"seed": "0", "label": "ch1"})
    path = tmp_path / "rec.txt"
    write_recording(rec, path)
    back = read_recording(path)
    assert np.array_equal(back.samples, rec.samples)
    assert back.fs == rec.fs
    assert back.meta == rec.meta


def test_recording_write_read_write_stable(tmp_path):
    rec = dlfp.simulate(SimConfig(duration=2.0))
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    write_recording(rec, p1)
    write_recording(read_recording(p1), p2)
    assert p1.read_text() == p2.read_text()


@pytest.mark.parametrize("content,fragment", [
    ("# fs: 422\n1.0\nnot-a-number\n", "line 3"),
    ("# fs: 422\n1.0\n# late: header\n", "line 3"),
    ("# fs: nope\n1.0\n", "line 1"),
    ("# fs: -5\n1.0\n", "line 1"),
    ("1.0\n2.0\n", "fs"),
    ("# badheader\n# fs: 422\n1.0\n", "line 1"),
])
def test_recording_parse_errors_name_the_line(tmp_path, content, fragment):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(RecordingParseError) as err:
        read_recording(path)
    assert fragment in str(err.value)


def test_recording_blank_lines_ignored(tmp_path):
    path = tmp_path / "r.txt"
    path.write_text("# fs: 422\n\n1.0\n\n2.0\n")
    rec = read_recording(path)
    assert np.array_equal(rec.samples, [1.0, 2.0])


# ------------------------------------------------------ config documents

def test_config_defaults_from_empty_document():
    doc = config_from_dict({})
    assert doc.sim == SimConfig()
    assert doc.welch == WelchParams()
    assert doc.mitigation == MitigationConfig()
    doc = config_from_dict({"schema_version": 1})
    assert doc.sim == SimConfig()


def test_config_round_trip_non_defaults(tmp_path):
    doc = ConfigDocument(
        sim=SimConfig(
            duration=12.0, seed=42,
            source1=SourceSpec(oscillation_amp=3e-3, seed=7),
            source3=SourceSpec(pink_strength=2e-3),
            stim=StimSpec(amplitude=5.0, n_harmonics=7, scheme="reciprocal"),
            channel=ChannelSpec(z1=1100.0, amp_model="hard_clip"),
            orm=OrmSpec(amplitude=0.05),
        ),
        welch=WelchParams(nfft=2048, segment_len=1024, overlap=0.5,
                          window="hann"),
        mitigation=MitigationConfig(
            poly_order=3, fit_range=(2.0, 90.0),
            bands=(BandDef("wide", 1.0, 90.0),),
            ash_freqs=(30.0,), imh_freqs=(60.0,),
            gcr_threshold=0.25, fit_exclude=(30.0, 60.0),
            fit_exclude_halfwidth=2.5,
        ),
    )
    path = tmp_path / "config.json"
    write_config(doc, path)
    back = read_config(path)
    assert back.sim == doc.sim
    assert back.welch == doc.welch
    assert back.mitigation == doc.mitigation


@pytest.mark.parametrize("data,fragment", [
    ({"bogus": {}}, "bogus"),
    ({"mitigation": {"bogus": 1}}, "mitigation.bogus"),
    ({"simulation": {"stim": {"shape": "sine"}}}, "simulation.stim.shape"),
    ({"schema_version": 99}, "schema_version"),
    ({"simulation": {"duration": -1.0}}, "duration"),
    ({"welch": {"window": "nope"}}, "window"),
])
def test_config_rejects_unknown_or_invalid(data, fragment):
    with pytest.raises(ConfigError) as err:
        config_from_dict(data)
    assert fragment in str(err.value)


def test_config_rejects_non_mapping(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict([1, 2, 3])
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config(path)


def test_config_to_dict_is_json_clean():
    text = json.dumps(config_to_dict(
        ConfigDocument(SimConfig(), WelchParams(), MitigationConfig())))
    assert "schema_version" in text


# ------------------------------------------------------ reports

def test_report_round_trip(tmp_path):
    path = tmp_path / "report.json"
    write_report({"answer": 42, "arr": np.arange(3)}, path, kind="demo")
    back = read_report(path)
    assert back["kind"] == "demo"
    assert back["answer"] == 42
    assert back["arr"] == [0, 1, 2]
    assert back["schema_version"] == 1
    assert back["tool"]["name"] == "dlfp"


def test_report_rejects_wrong_schema(tmp_path):
    path = tmp_path / "report.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ConfigError):
        read_report(path)


def test_mitigation_report_dict_structure(tmp_path):
    cfg = SimConfig(duration=4.0, stim=StimSpec(amplitude=6.0),
                    channel=dlfp.channel_with_mismatch(300.0))
    rec = dlfp.simulate(cfg)
    result = mitigate(rec)
    payload = mitigation_report_dict(rec, result)
    assert set(payload) >= {"recording", "welch", "detrend", "bands",
                            "gcr", "spectrum"}
    assert payload["gcr"]["formula"] == "imh/(ash+imh)"
    assert len(payload["detrend"]["coeffs"]) == 5
    # full report document serializes through the standard writer
    write_report(payload, tmp_path / "m.json", kind="mitigation")
    back = read_report(tmp_path / "m.json")
    assert back["gcr"]["value"] == pytest.approx(result.gcr_report.gcr)


# ------------------------------------------------------ PSD text

def test_psd_text_round_trip(tmp_path):
    rec = dlfp.simulate(SimConfig(duration=4.0))
    psd = dlfp.welch_psd(rec)
    path = tmp_path / "psd.txt"
    write_psd_text(psd.freqs, psd.power, path, header={"fs": "422"})
    data = np.loadtxt(path)
    assert data.shape == (psd.freqs.size, 2)
    assert np.array_equal(data[:, 0], psd.freqs)
    assert np.array_equal(data[:, 1], psd.power)
