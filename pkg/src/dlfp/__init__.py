"""Differential LFP simulation and mismatch-compression analysis.

Simulates what a bidirectional sense/stim device records when electrode
impedance mismatch lets stimulation leak past common-mode rejection and
compress the signal amplifier, predicts where the resulting spectral
artifacts land, and provides the mitigation pipeline (polynomial
detrend, adjusted-band medians, gain compression ratio).
"""

from .artifacts import (ArtifactSet, ArtifactTone, LabeledPeak, classify_peaks,
                        fold_alias, predict_artifacts, predict_ash, predict_imh,
                        predict_ssh)
from .fileio import (ConfigDocument, ConfigError, RecordingParseError,
                     config_from_dict, config_to_dict, mitigation_report_dict,
                     read_config, read_recording, read_report, write_config,
                     write_recording, write_report)
from .mitigation import (ADJUSTED_BANDS, STANDARD_BANDS, BandDef,
                         BandPowerReport, GcrReport, MitigationConfig,
                         MitigationResult, band_power_median, compute_gcr,
                         detrend_polynomial, mitigate, tone_power)
from .signal_chain import (MISMATCH_PRESETS, ChannelSpec, OrmSpec, Recording,
                           SimConfig, SourceSpec, StimSpec, amplifier_stage,
                           channel_with_mismatch, config_hash,
                           decimate_no_filter, differential_stage,
                           gen_neural_source, gen_stim_waveform,
                           harmonic_coefficients, simulate)
from .spectral import LogPsd, Psd, WelchParams, log_transform, welch_psd
from .sweep import run_sweep

__version__ = "0.1.0"

__all__ = [
    "ADJUSTED_BANDS", "ArtifactSet", "ArtifactTone", "BandDef",
    "BandPowerReport", "ChannelSpec", "ConfigDocument", "ConfigError",
    "GcrReport", "LabeledPeak", "LogPsd", "MISMATCH_PRESETS",
    "MitigationConfig", "MitigationResult", "OrmSpec", "Psd", "Recording",
    "RecordingParseError", "STANDARD_BANDS", "SimConfig", "SourceSpec",
    "StimSpec", "WelchParams", "amplifier_stage", "band_power_median",
    "channel_with_mismatch", "classify_peaks", "compute_gcr", "config_from_dict",
    "config_hash", "config_to_dict", "decimate_no_filter", "detrend_polynomial",
    "differential_stage", "fold_alias", "gen_neural_source", "gen_stim_waveform",
    "harmonic_coefficients", "log_transform", "mitigate",
    "mitigation_report_dict", "predict_artifacts", "predict_ash", "predict_imh",
    "predict_ssh", "read_config", "read_recording", "read_report", "run_sweep",
    "simulate", "tone_power", "welch_psd", "write_config", "write_recording",
    "write_report",
]
