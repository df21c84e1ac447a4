"""Artifact prediction and peak classification tests.

fold_alias is verified against a brute-force FFT of actually sampled
tones, and the intermodulation table against an independent exhaustive
enumeration written with a different algorithm (signed cartesian
products instead of combinations).
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlfp.artifacts import (
    ArtifactSet,
    classify_peaks,
    fold_alias,
    predict_artifacts,
    predict_ash,
    predict_imh,
    predict_ssh,
)
from dlfp.spectral import Psd, WelchParams

FS = 422.0
BIN = FS / 1024


# ------------------------------------------------------ aliasing

@pytest.mark.parametrize("freq,fs,expected", [
    (390.0, 422.0, 32.0),
    (780.0, 422.0, 64.0),
    (910.0, 422.0, 66.0),
    (260.0, 422.0, 162.0),
    (520.0, 422.0, 98.0),
    (650.0, 422.0, 194.0),
    (105.5, 422.0, 105.5),
    (211.0, 422.0, 211.0),
    (422.0, 422.0, 0.0),
    (633.0, 422.0, 211.0),
    (1000.0, 422.0, 156.0),
    (15.0, 422.0, 15.0),
])
def test_fold_alias_table(freq, fs, expected):
    assert fold_alias(freq, fs) == expected


def test_fold_alias_validation():
    with pytest.raises(ValueError):
        fold_alias(100.0, 0.0)
    with pytest.raises(ValueError):
        fold_alias(-1.0, 422.0)


def test_fold_alias_matches_fft_of_sampled_tone():
    # sample real tones at 422 Hz and locate the spectral peak directly
    rng = np.random.default_rng(42)
    n = 16384
    t = np.arange(n) / FS
    window = np.hanning(n)
    df = FS / n
    checked = 0
    while checked < 20:
        f = float(rng.uniform(10.0, 2000.0))
        predicted = fold_alias(f, FS)
        if predicted < 2.0 or predicted > FS / 2.0 - 2.0:
            continue  # peak location is ambiguous against DC/Nyquist
        spec = np.abs(np.fft.rfft(window * np.sin(2 * np.pi * f * t)))
        peak = df * int(np.argmax(spec))
        assert abs(peak - predicted) <= 2 * df, f"tone {f} Hz"
        checked += 1


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=844),
       st.integers(min_value=0, max_value=4))
def test_fold_alias_periodic_and_reflective(quarter, k):
    # quarter-Hz grid keeps every sum exactly representable
    f = quarter * 0.25
    folded = fold_alias(f, FS)
    assert 0.0 <= folded <= FS / 2.0
    assert fold_alias(f + k * FS, FS) == folded
    assert fold_alias(FS - f, FS) == folded if f <= FS else True


# ------------------------------------------------------ harmonics

def test_predict_ssh_values():
    assert predict_ssh(130.0, 6) == [130.0, 260.0, 390.0, 520.0, 650.0, 780.0]
    with pytest.raises(ValueError):
        predict_ssh(0.0, 6)
    with pytest.raises(ValueError):
        predict_ssh(130.0, 0)


def test_predict_ash_default_folds():
    tones = predict_ash(130.0, FS, 6)
    got = {(t.source_freq, t.klass, t.freq, t.order) for t in tones}
    assert got == {
        (130.0, "SSH", 130.0, 1),
        (260.0, "ASH", 162.0, 2),
        (390.0, "ASH", 32.0, 3),
        (520.0, "ASH", 98.0, 4),
        (650.0, "ASH", 194.0, 5),
        (780.0, "ASH", 64.0, 6),
    }


# ------------------------------------------------------ intermods

def _imh_bins_exhaustive(harmonics, fs, max_order, bin_hz):
    # independent oracle: cartesian products over signed tones
    signed = [f for f in harmonics] + [-f for f in harmonics]
    base_bins = {round(fold_alias(f, fs) / bin_hz) for f in harmonics}
    bins = set()
    for order in range(2, max_order + 1):
        for picks in itertools.product(signed, repeat=order):
            src = abs(sum(picks))
            if src < bin_hz / 2.0:
                continue
            b = round(fold_alias(src, fs) / bin_hz)
            if b != 0 and b not in base_bins:
                bins.add(b)
    return bins


@pytest.mark.parametrize("max_order", [2, 3])
def test_predict_imh_matches_exhaustive_enumeration(max_order):
    harmonics = predict_ssh(130.0, 6)
    tones = predict_imh(harmonics, FS, max_order=max_order)
    got = {round(t.freq / BIN) for t in tones}
    assert got == _imh_bins_exhaustive(harmonics, FS, max_order, BIN)
    assert all(2 <= t.order <= max_order for t in tones)
    assert all(t.klass == "IMH" for t in tones)


def test_imh_contains_66_at_defaults():
    harmonics = predict_ssh(130.0, 6)
    tones = predict_imh(harmonics, FS)
    by_freq = {t.freq: t for t in tones}
    assert 66.0 in by_freq
    # minimal product reaching 910 Hz is 130 + 780, order 2
    assert by_freq[66.0].order == 2
    assert by_freq[66.0].source_freq == 910.0
    # the folded harmonics themselves are never reported as intermods
    folded_harmonics = {fold_alias(f, FS) for f in harmonics}
    assert not folded_harmonics & set(by_freq)


def test_predict_imh_validation():
    with pytest.raises(ValueError):
        predict_imh([130.0], FS, max_order=1)
    with pytest.raises(ValueError):
        predict_imh([], FS)


# ------------------------------------------------------ combined table

def test_predict_artifacts_default_table():
    arts = predict_artifacts()
    assert isinstance(arts, ArtifactSet)
    assert 66.0 in arts.freqs("IMH")
    assert set(arts.freqs("ASH")) == {162.0, 32.0, 98.0, 194.0, 64.0}
    assert arts.freqs("SSH") == [130.0]
    assert arts.freqs("ORM") == [105.5]
    assert arts.params["f_t"] == 130.0
    # sorted by frequency for table printing
    freqs = [t.freq for t in arts.tones]
    assert freqs == sorted(freqs)


def test_predict_artifacts_orm_optional():
    arts = predict_artifacts(orm_freq=None)
    assert arts.freqs("ORM") == []


def test_seven_harmonic_collision_annotated():
    # with k = 7 present the 910 Hz harmonic lands on the same bin as
    # the strongest intermod product; both derivations stay visible
    arts = predict_artifacts(n_harmonics=7)
    at66 = [t for t in arts.tones if t.freq == 66.0]
    assert len(at66) == 1
    tone = at66[0]
    assert tone.klass == "ASH"
    assert tone.order == 7
    assert "also" in tone.origin and "intermod" in tone.origin
    # and the pure-IMH path no longer reports 66
    imh = predict_imh(predict_ssh(130.0, 7), FS)
    assert 66.0 not in {t.freq for t in imh}


# ------------------------------------------------------ classification

def _synthetic_psd(tones):
    """Flat background with single-bin tones: {freq: linear density}."""
    freqs = np.arange(1024 // 2 + 1) * BIN
    power = np.full(freqs.size, 1e-8)
    for f, p in tones.items():
        power[int(round(f / BIN))] += p
    return Psd(freqs=freqs, power=power, fs=FS, n_segments=1,
               params=WelchParams())


def test_classify_labels_known_peaks():
    psd = _synthetic_psd({32.0: 1e-4, 64.0: 1e-4, 66.0: 5e-5,
                          105.5: 2e-5, 50.0: 1e-4})
    peaks = classify_peaks(psd, predict_artifacts())
    by_class = {}
    for p in peaks:
        by_class.setdefault(p.klass, []).append(p)
    ash = sorted(round(p.tone_freq) for p in by_class["ASH"])
    assert ash == [32, 64]
    assert [round(p.tone_freq) for p in by_class["IMH"]] == [66]
    assert [p.tone_freq for p in by_class["ORM"]] == [105.5]
    # 50 Hz is no predicted artifact
    unknown = [p for p in by_class["UNKNOWN"]]
    assert len(unknown) == 1 and abs(unknown[0].freq - 50.0) < BIN
    assert all(p.prominence_db > 6.0 for p in peaks)


def test_classify_prominence_threshold():
    psd = _synthetic_psd({50.0: 1e-8})  # 3 dB bump
    assert classify_peaks(psd, predict_artifacts()) == []
    low = classify_peaks(psd, predict_artifacts(), prominence_db=1.0)
    assert len(low) == 1
    assert low[0].prominence_db == pytest.approx(10 * np.log10(2.0), abs=0.1)


def test_classify_tolerance_window():
    off = 64.0 + 2 * BIN  # two bins off the predicted tone
    psd = _synthetic_psd({off: 1e-4})
    tight = classify_peaks(psd, predict_artifacts(), tol_bins=1)
    loose = classify_peaks(psd, predict_artifacts(), tol_bins=2)
    assert tight[0].klass == "UNKNOWN"
    assert loose[0].klass == "ASH"
    assert loose[0].tone_freq == 64.0
    with pytest.raises(ValueError):
        classify_peaks(psd, predict_artifacts(), tol_bins=-1)


def test_classify_requires_strict_local_maximum():
    # a 2-bin plateau is not a peak
    freqs = np.arange(1024 // 2 + 1) * BIN
    power = np.full(freqs.size, 1e-8)
    i = int(round(50.0 / BIN))
    power[i] = power[i + 1] = 1e-4
    psd = Psd(freqs=freqs, power=power, fs=FS, n_segments=1)
    assert classify_peaks(psd, predict_artifacts()) == []
