"""Differential LFP signal chain.

Models a bidirectional sense/stim device recording a differential local
field potential while stimulation runs on a nearby electrode: neural and
stimulation sources pass through per-electrode impedance dividers, the
mismatch residual survives common-mode rejection at the differential
stage, an oscillator-related tone is injected, the signal amplifier
(optionally compressive) is applied at an oversampled rate, and the
result is decimated without an anti-alias filter, exactly as a device
that samples below its stimulation frequency would.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

AMP_MODELS = ("linear", "hard_clip", "soft_clip")
COEFF_SCHEMES = ("reciprocal", "pulse")

# Converts device stimulation volts to the amplitude of the modeled
# source-series fundamental at the electrodes. Calibrated so that the
# post-rejection residual sweeps the signal amplifier from its linear
# range into compression across 0-8 V at mismatches of 100-300 ohms;
# larger values pin the amplifier in binary saturation for the whole
# sweep and smaller ones never compress.
STIM_SOURCE_PER_VOLT = 0.018

# Default Welch segment length used downstream; simulations shorter than
# one segment cannot be analyzed.
_MIN_ANALYSIS_SAMPLES = 844


@dataclass
class SourceSpec:
    """One neural source: a sinusoidal oscillation plus 1/f background."""

    oscillation_freq: float = 15.0
    oscillation_amp: float = 2e-3
    pink_strength: float = 1e-3
    seed: int | None = None

    def validate(self) -> None:
        if self.oscillation_freq <= 0:
            raise ValueError("oscillation_freq must be positive")
        if self.oscillation_amp < 0:
            raise ValueError("oscillation_amp must be non-negative")
        if self.pink_strength < 0:
            raise ValueError("pink_strength must be non-negative")


@dataclass
class StimSpec:
    """Stimulation source as a truncated harmonic series.

    The waveform is ``amplitude * sum_k c_k sin(2 pi k freq t)`` where the
    weights c_k come from ``scheme``: "pulse" (the default) uses the
    harmonic envelope of a rectangular pulse train with the given duty
    cycle and "reciprocal" uses c_k = 1/k. Both schemes contain even
    harmonics, which is what puts energy at 6 x 130 = 780 Hz and hence,
    after aliasing, at 64 Hz; the pulse scheme keeps the high harmonics
    near full strength, which is closer to a real charge-balanced pulse
    train and is what makes the intermodulation products detectable.
    """

    freq: float = 130.0
    amplitude: float = 0.0
    n_harmonics: int = 6
    scheme: str = "pulse"
    duty: float = 0.05

    def validate(self) -> None:
        if self.freq <= 0:
            raise ValueError("stim freq must be positive")
        if self.amplitude < 0:
            raise ValueError("stim amplitude must be non-negative")
        if self.n_harmonics < 1:
            raise ValueError("n_harmonics must be at least 1")
        if self.scheme not in COEFF_SCHEMES:
            raise ValueError(f"unknown coefficient scheme {self.scheme!r}")
        if self.scheme == "pulse" and not 0 < self.duty < 1:
            raise ValueError("pulse duty cycle must lie in (0, 1)")


@dataclass
class OrmSpec:
    """Constant oscillator-related tone injected after the differential stage."""

    freq: float = 105.5
    amplitude: float = 0.2

    def validate(self) -> None:
        if self.freq <= 0:
            raise ValueError("orm freq must be positive")
        if self.amplitude < 0:
            raise ValueError("orm amplitude must be non-negative")


@dataclass
class ChannelSpec:
    """Electrode impedances plus the differential and signal amplifiers.

    z1 and z3 are the two sense electrode impedances in ohms; their
    difference is what lets stimulation leak through common-mode
    rejection. The mismatch is never stored separately: it is always
    z1 - z3.
    """

    z1: float = 800.0
    z3: float = 800.0
    z_body: float = 1e4
    diff_gain: float = 500.0
    amp_model: str = "soft_clip"
    g1: float = 1.0
    g2: float = 1.0
    clip_level: float = 1.0

    @property
    def z_delta(self) -> float:
        return self.z1 - self.z3

    def validate(self) -> None:
        if self.z1 < 0 or self.z3 < 0:
            raise ValueError("electrode impedances must be non-negative")
        if self.z_body <= 0:
            raise ValueError("z_body must be positive")
        if self.amp_model not in AMP_MODELS:
            raise ValueError(f"unknown amp_model {self.amp_model!r}")
        if self.clip_level <= 0:
            raise ValueError("clip_level must be positive")


# Mismatch presets measured across electrode pairs in uniform versus
# layered media, in ohms.
MISMATCH_PRESETS = {"uniform": 100.0, "interface": 300.0}
BASE_IMPEDANCE_OHMS = 800.0


def channel_with_mismatch(z_delta: float, base: float = BASE_IMPEDANCE_OHMS,
                          **kwargs) -> ChannelSpec:
    """Build a ChannelSpec with z1 = base + z_delta and z3 = base."""
    return ChannelSpec(z1=base + z_delta, z3=base, **kwargs)


@dataclass
class SimConfig:
    """Full description of one simulated recording."""

    duration: float = 60.0
    fs_out: float = 422.0
    oversample: int = 10
    seed: int = 0
    source1: SourceSpec = field(default_factory=SourceSpec)
    source3: SourceSpec = field(default_factory=lambda: SourceSpec(oscillation_amp=0.0))
    stim: StimSpec = field(default_factory=StimSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    orm: OrmSpec = field(default_factory=OrmSpec)

    def validate(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.fs_out <= 0:
            raise ValueError("fs_out must be positive")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise ValueError("oversample must be a positive integer")
        for spec in (self.source1, self.source3, self.stim, self.channel, self.orm):
            spec.validate()
        nyq_out = self.fs_out / 2.0
        for name, spec in (("source1", self.source1), ("source3", self.source3)):
            if spec.oscillation_amp > 0 and spec.oscillation_freq >= nyq_out:
                raise ValueError(f"{name} oscillation at or above output Nyquist")
        fs_int = self.fs_out * self.oversample
        if self.stim.n_harmonics * self.stim.freq >= fs_int / 2.0:
            raise ValueError("highest stimulation harmonic at or above internal Nyquist")
        # one default Welch segment (844 samples) must fit in the output
        if self.duration * self.fs_out < _MIN_ANALYSIS_SAMPLES:
            raise ValueError("recording shorter than one analysis segment")


@dataclass
class Recording:
    """Decimated output samples with provenance metadata."""

    samples: np.ndarray
    fs: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("recording contains non-finite samples")

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


def config_hash(config: SimConfig) -> str:
    """Short stable hash of the full simulation configuration."""
    blob = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _pink_noise(n_samples: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance 1/f noise via spectral shaping of white noise.

    A complex white spectrum is divided by sqrt(f) so power falls as 1/f;
    the DC bin (and the unpaired Nyquist bin) are zeroed. The series is
    rescaled to unit sample standard deviation so callers apply a plain
    linear strength factor.
    """
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / fs)
    shaping = np.zeros_like(freqs)
    shaping[1:] = 1.0 / np.sqrt(freqs[1:])
    if n_samples % 2 == 0:
        shaping[-1] = 0.0
    spectrum = (rng.standard_normal(freqs.size)
                + 1j * rng.standard_normal(freqs.size)) * shaping
    x = np.fft.irfft(spectrum, n_samples)
    sd = x.std()
    if sd > 0:
        x /= sd
    return x


def gen_neural_source(spec: SourceSpec, n_samples: int, fs: float,
                      seed: int | None = None) -> np.ndarray:
    """Synthesize one neural source: oscillation plus pink background.

    Parameters
    ----------
    spec : SourceSpec
    n_samples : int
        Length of the series to generate.
    fs : float
        Sampling rate the series is generated at, Hz.
    seed : int, optional
        Overrides ``spec.seed``; when both are None, 0 is used.
    """
    spec.validate()
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if fs <= 0:
        raise ValueError("fs must be positive")
    if spec.oscillation_amp > 0 and spec.oscillation_freq >= fs / 2.0:
        raise ValueError("oscillation frequency at or above Nyquist")
    if seed is None:
        seed = 0 if spec.seed is None else spec.seed
    t = np.arange(n_samples) / fs
    x = spec.oscillation_amp * np.sin(2.0 * np.pi * spec.oscillation_freq * t)
    if spec.pink_strength > 0:
        rng = np.random.default_rng(seed)
        x = x + spec.pink_strength * _pink_noise(n_samples, fs, rng)
    return x


def harmonic_coefficients(spec: StimSpec) -> np.ndarray:
    """Weights c_k for k = 1..n_harmonics, with c_1 = 1."""
    k = np.arange(1, spec.n_harmonics + 1, dtype=np.float64)
    if spec.scheme == "reciprocal":
        return 1.0 / k
    # pulse train envelope sin(pi k d)/(pi k d), renormalized to c_1 = 1
    raw = np.sinc(k * spec.duty)
    return raw / np.sinc(spec.duty)


def gen_stim_waveform(spec: StimSpec, n_samples: int, fs: float) -> np.ndarray:
    """Truncated harmonic series S(t) = amplitude * sum_k c_k sin(2 pi k f t)."""
    spec.validate()
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if spec.n_harmonics * spec.freq >= fs / 2.0:
        raise ValueError("highest harmonic at or above Nyquist")
    t = np.arange(n_samples) / fs
    coeffs = harmonic_coefficients(spec)
    s = np.zeros(n_samples)
    for k, c_k in enumerate(coeffs, start=1):
        s += c_k * np.sin(2.0 * np.pi * k * spec.freq * t)
    return spec.amplitude * s


def differential_stage(x1: np.ndarray, x3: np.ndarray, stim: np.ndarray,
                       channel: ChannelSpec) -> np.ndarray:
    """Impedance dividers followed by the differential amplifier.

    Each electrode sees the common stimulation plus its own neural source
    through a voltage divider against the body impedance:

        e_i = z_body / (z_i + z_body) * (x_i + stim)

    and the stage output is diff_gain * (e1 - e3). With matched
    impedances the stimulation term cancels exactly; any mismatch leaves
    a residual proportional to the divider difference.
    """
    channel.validate()
    if not (len(x1) == len(x3) == len(stim)):
        raise ValueError("x1, x3 and stim must have equal length")
    zb = channel.z_body
    e1 = zb / (channel.z1 + zb) * (np.asarray(x1) + stim)
    e3 = zb / (channel.z3 + zb) * (np.asarray(x3) + stim)
    return channel.diff_gain * (e1 - e3)


def amplifier_stage(v: np.ndarray, channel: ChannelSpec) -> np.ndarray:
    """Signal amplifier: linear, hard clipping, or tanh soft clipping."""
    channel.validate()
    v = np.asarray(v, dtype=np.float64)
    driven = channel.g1 * v
    if channel.amp_model == "linear":
        return channel.g2 * driven
    if channel.amp_model == "hard_clip":
        return channel.g2 * np.clip(driven, -channel.clip_level, channel.clip_level)
    return channel.g2 * np.tanh(driven)


def decimate_no_filter(v: np.ndarray, factor: int) -> np.ndarray:
    """Keep every factor-th sample with no anti-alias filter.

    The missing filter is the point: content above the decimated Nyquist
    folds into band, which is how a device sampling at 422 Hz shows
    stimulation harmonics at 32 and 64 Hz.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError("factor must be a positive integer")
    v = np.asarray(v)
    if v.size % factor != 0:
        raise ValueError("length must be divisible by the decimation factor")
    return v[::factor].copy()


def _source_seed(spec: SourceSpec, master: np.random.SeedSequence, index: int) -> int:
    if spec.seed is not None:
        return spec.seed
    return int(master.generate_state(2)[index])


def simulate(config: SimConfig) -> Recording:
    """Run the full signal chain and return the decimated recording.

    The chain runs at fs_out * oversample so that stimulation harmonics
    above the output Nyquist exist before decimation. Stimulation device
    volts are converted to source-series amplitude through
    STIM_SOURCE_PER_VOLT. Identical configs (including seed) produce
    bit-identical recordings.
    """
    config.validate()
    fs_int = config.fs_out * config.oversample
    n_out = round(config.duration * config.fs_out)
    n_int = n_out * int(config.oversample)

    master = np.random.SeedSequence(config.seed)
    x1 = gen_neural_source(config.source1, n_int, fs_int,
                           seed=_source_seed(config.source1, master, 0))
    x3 = gen_neural_source(config.source3, n_int, fs_int,
                           seed=_source_seed(config.source3, master, 1))

    drive = replace(config.stim,
                    amplitude=config.stim.amplitude * STIM_SOURCE_PER_VOLT)
    stim = gen_stim_waveform(drive, n_int, fs_int)

    v = differential_stage(x1, x3, stim, config.channel)
    if config.orm.amplitude > 0:
        t = np.arange(n_int) / fs_int
        v = v + config.orm.amplitude * np.sin(2.0 * np.pi * config.orm.freq * t)
    v = amplifier_stage(v, config.channel)
    samples = decimate_no_filter(v, int(config.oversample))

    meta = {
        "config_hash": config_hash(config),
        "seed": str(config.seed),
        "stim_volts": f"{config.stim.amplitude:g}",
        "z_delta": f"{config.channel.z_delta:g}",
        "amp_model": config.channel.amp_model,
    }
    return Recording(samples=samples, fs=config.fs_out, meta=meta)
