"""Spectral artifact prediction and peak classification.

Artifact taxonomy for a device sampling at fs with stimulation at f_T:

* SSH: stimulation harmonics k * f_T that lie below Nyquist.
* ASH: harmonics above Nyquist that alias back into band.
* IMH: intermodulation products created by amplifier nonlinearity,
  aliased into band.
* ORM: the fixed oscillator-related tone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .spectral import Psd

DEFAULT_ANALYSIS_NFFT = 1024
ORM_FREQ_HZ = 105.5


@dataclass
class ArtifactTone:
    freq: float            # in-band frequency after aliasing, Hz
    klass: str             # SSH | ASH | IMH | ORM
    origin: str            # human-readable derivation
    order: int             # harmonic number or intermod order
    source_freq: float     # frequency before aliasing, Hz


@dataclass
class ArtifactSet:
    tones: list[ArtifactTone] = field(default_factory=list)
    fs: float = 422.0
    params: dict = field(default_factory=dict)

    def freqs(self, klass: str | None = None) -> list[float]:
        return [t.freq for t in self.tones if klass is None or t.klass == klass]


@dataclass
class LabeledPeak:
    freq: float
    power_db: float
    prominence_db: float
    klass: str             # SSH | ASH | IMH | ORM | UNKNOWN
    origin: str
    tone_freq: float | None = None


def fold_alias(freq: float, fs: float) -> float:
    """In-band frequency of a tone sampled at fs.

    Reduces modulo fs, then reflects across Nyquist: a 780 Hz tone
    sampled at 422 Hz lands at 64 Hz.
    """
    if fs <= 0:
        raise ValueError("fs must be positive")
    if freq < 0:
        raise ValueError("freq must be non-negative")
    r = freq % fs
    if r > fs / 2.0:
        r = fs - r
    return r


def predict_ssh(f_t: float, n_harmonics: int) -> list[float]:
    """Stimulation harmonic frequencies k * f_T, unfolded."""
    if f_t <= 0:
        raise ValueError("f_t must be positive")
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be at least 1")
    return [k * f_t for k in range(1, n_harmonics + 1)]


def predict_ash(f_t: float, fs: float, n_harmonics: int) -> list[ArtifactTone]:
    """Fold each stimulation harmonic; label ASH when the source exceeded Nyquist."""
    tones = []
    for k, src in enumerate(predict_ssh(f_t, n_harmonics), start=1):
        folded = fold_alias(src, fs)
        klass = "ASH" if src > fs / 2.0 else "SSH"
        origin = f"{k}x{f_t:g} Hz = {src:g} Hz -> {folded:g} Hz"
        tones.append(ArtifactTone(freq=folded, klass=klass, origin=origin,
                                  order=k, source_freq=src))
    return tones


def _enumerate_intermods(base_tones: list[float], fs: float, max_order: int,
                         bin_hz: float) -> dict[int, ArtifactTone]:
    """All signed-sum products of the base tones, folded and keyed by bin.

    Products in the same bin are merged keeping the lowest order (and,
    within an order, the first combination in enumeration order).
    """
    def bin_of(f: float) -> int:
        return int(round(f / bin_hz))

    signed = [(f, +1) for f in base_tones] + [(f, -1) for f in base_tones]
    found: dict[int, ArtifactTone] = {}
    for order in range(2, max_order + 1):
        for picks in combinations_with_replacement(signed, order):
            src = abs(sum(s * f for f, s in picks))
            if src < bin_hz / 2.0:
                continue
            folded = fold_alias(src, fs)
            b = bin_of(folded)
            if b == 0:
                continue
            if b in found and found[b].order <= order:
                continue
            terms = "".join(f"{s * f:+g}" for f, s in picks).lstrip("+")
            origin = (f"order-{order} intermod {terms} Hz"
                      f" = {src:g} Hz -> {folded:g} Hz")
            found[b] = ArtifactTone(freq=folded, klass="IMH", origin=origin,
                                    order=order, source_freq=src)
    return found


def predict_imh(base_tones: list[float], fs: float, max_order: int = 3,
                bin_hz: float | None = None) -> list[ArtifactTone]:
    """Intermodulation products of the base tones, folded into band.

    Enumerates |sum of signed picks| over the base set for every total
    order from 2 to max_order, folds each product, and drops anything
    that coincides (within one bin) with a folded base tone.
    """
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    if not base_tones:
        raise ValueError("base_tones must be non-empty")
    if fs <= 0:
        raise ValueError("fs must be positive")
    if bin_hz is None:
        bin_hz = fs / DEFAULT_ANALYSIS_NFFT
    base_bins = {int(round(fold_alias(f, fs) / bin_hz)) for f in base_tones}
    found = _enumerate_intermods(base_tones, fs, max_order, bin_hz)
    return sorted((t for b, t in found.items() if b not in base_bins),
                  key=lambda t: t.freq)


def predict_artifacts(f_t: float = 130.0, fs: float = 422.0,
                      n_harmonics: int = 6, imh_order: int = 3,
                      orm_freq: float | None = ORM_FREQ_HZ) -> ArtifactSet:
    """Full expected artifact table: SSH/ASH, their intermods, and the ORM.

    When an intermod product lands in the same bin as a folded harmonic
    the harmonic tone is kept and its origin is annotated with the
    competing intermod derivation, so both candidate origins stay
    visible to the classifier.
    """
    tones = predict_ash(f_t, fs, n_harmonics)
    ssh_sources = predict_ssh(f_t, n_harmonics)
    bin_hz = fs / DEFAULT_ANALYSIS_NFFT
    all_products = _enumerate_intermods(ssh_sources, fs, imh_order, bin_hz)
    harmonic_bins = {int(round(t.freq / bin_hz)): t for t in tones}
    for b, product in all_products.items():
        if b in harmonic_bins:
            harmonic_bins[b].origin += f"; also {product.origin}"
        else:
            tones.append(product)
    if orm_freq is not None:
        folded = fold_alias(orm_freq, fs)
        tones.append(ArtifactTone(freq=folded, klass="ORM",
                                  origin=f"oscillator tone {orm_freq:g} Hz",
                                  order=0, source_freq=orm_freq))
    tones.sort(key=lambda t: (t.freq, t.klass))
    return ArtifactSet(tones=tones, fs=fs,
                       params={"f_t": f_t, "n_harmonics": n_harmonics,
                               "imh_order": imh_order, "orm_freq": orm_freq})


def classify_peaks(psd: Psd, artifacts: ArtifactSet, tol_bins: int = 1,
                   prominence_db: float = 6.0) -> list[LabeledPeak]:
    """Detect spectral peaks and label each with its predicted artifact class.

    A bin is a peak when it is the strict maximum of its +/-2 bin window
    and rises at least prominence_db above the median of the +/-5 Hz
    neighborhood. Each peak is matched to the nearest predicted tone
    within tol_bins; peaks with no match are labeled UNKNOWN. When
    several tones sit in the matching window the nearest wins and the
    others are folded into the origin text.
    """
    if tol_bins < 0:
        raise ValueError("tol_bins must be non-negative")
    db = np.where(psd.power > 1e-20,
                  10.0 * np.log10(np.maximum(psd.power, 1e-20)), -200.0)
    freqs = psd.freqs
    df = psd.bin_hz
    half_nb = max(1, int(round(5.0 / df)))

    peaks: list[LabeledPeak] = []
    for i in range(2, db.size - 2):
        window = db[i - 2:i + 3]
        if db[i] < window.max() or (window == db[i]).sum() > 1:
            continue
        lo = max(0, i - half_nb)
        background = np.median(db[lo:i + half_nb + 1])
        prom = db[i] - background
        if prom < prominence_db:
            continue
        tol = tol_bins * df + 1e-9
        near = [t for t in artifacts.tones if abs(t.freq - freqs[i]) <= tol]
        if near:
            near.sort(key=lambda t: (abs(t.freq - freqs[i]), t.order))
            best = near[0]
            origin = "; ".join(t.origin for t in near)
            peaks.append(LabeledPeak(freq=float(freqs[i]), power_db=float(db[i]),
                                     prominence_db=float(prom), klass=best.klass,
                                     origin=origin, tone_freq=best.freq))
        else:
            peaks.append(LabeledPeak(freq=float(freqs[i]), power_db=float(db[i]),
                                     prominence_db=float(prom), klass="UNKNOWN",
                                     origin=""))
    return peaks
