"""Welch power spectral density estimation and log transform.

Matches the device-analysis convention: 844-sample Blackman-Harris
segments, zero overlap, 1024-point FFT, one-sided density normalized by
window power so that a unit-amplitude sine integrates to 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window, welch

from .signal_chain import Recording


@dataclass
class WelchParams:
    nfft: int = 1024
    segment_len: int = 844
    overlap: float = 0.0
    window: str = "blackmanharris"

    def validate(self) -> None:
        if self.segment_len < 2:
            raise ValueError("segment_len must be at least 2")
        if self.nfft < self.segment_len:
            raise ValueError("nfft must be at least segment_len")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap fraction must lie in [0, 1)")
        try:
            get_window(self.window, self.segment_len)
        except ValueError as exc:
            raise ValueError(f"unknown window {self.window!r}") from exc

    @property
    def noverlap(self) -> int:
        return int(self.segment_len * self.overlap)


@dataclass
class Psd:
    """One-sided power spectral density estimate."""

    freqs: np.ndarray
    power: np.ndarray
    fs: float
    n_segments: int
    params: WelchParams = field(default_factory=WelchParams)

    @property
    def bin_hz(self) -> float:
        return self.fs / self.params.nfft


@dataclass
class LogPsd:
    """Log-scaled spectrum in dB (10 log10 of the density)."""

    freqs: np.ndarray
    db: np.ndarray
    fs: float


def welch_psd(rec: Recording | np.ndarray, params: WelchParams | None = None,
              fs: float | None = None) -> Psd:
    """Welch estimate of a recording's one-sided PSD.

    Parameters
    ----------
    rec : Recording or ndarray
        Samples to analyze; an array requires ``fs``.
    params : WelchParams, optional
        Segmentation and window settings; defaults used when omitted.
    fs : float, optional
        Sampling rate when ``rec`` is a plain array.

    Notes
    -----
    Segments are averaged with equal weight and any trailing partial
    segment is discarded. Density scaling divides by the window power
    sum(w^2) * fs, so integrated power matches time-domain variance.
    """
    if params is None:
        params = WelchParams()
    params.validate()
    if isinstance(rec, Recording):
        x, rate = rec.samples, rec.fs
    else:
        if fs is None:
            raise ValueError("fs required when passing a bare array")
        x, rate = np.asarray(rec, dtype=np.float64), float(fs)
    if x.size < params.segment_len:
        raise ValueError(
            f"need at least {params.segment_len} samples, got {x.size}")

    step = params.segment_len - params.noverlap
    n_segments = (x.size - params.noverlap) // step
    freqs, power = welch(
        x,
        fs=rate,
        window=get_window(params.window, params.segment_len),
        nperseg=params.segment_len,
        noverlap=params.noverlap,
        nfft=params.nfft,
        detrend=False,
        return_onesided=True,
        scaling="density",
        average="mean",
    )
    # the analysis grid is k * fs / nfft by contract; rfftfreq computes
    # k / (nfft / fs), which drifts by ulps and breaks exact-bin checks
    freqs = np.arange(freqs.size) * (rate / params.nfft)
    return Psd(freqs=freqs, power=power, fs=rate,
               n_segments=int(n_segments), params=params)


def log_transform(psd: Psd, floor_db: float = -200.0) -> LogPsd:
    """10 log10 of the density with an explicit floor for empty bins."""
    floor_power = 10.0 ** (floor_db / 10.0)
    db = np.where(psd.power > floor_power,
                  10.0 * np.log10(np.maximum(psd.power, floor_power)),
                  floor_db)
    return LogPsd(freqs=psd.freqs.copy(), db=db, fs=psd.fs)
