"""Command line interface.

Subcommands: simulate, predict, analyze, mitigate, sweep. Exit codes:
0 success, 1 validation failure (bad config or argument values), 2 I/O
failure (missing or malformed files).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .artifacts import classify_peaks, predict_artifacts
from .fileio import (ConfigDocument, ConfigError, RecordingParseError,
                     mitigation_report_dict, read_config, read_recording,
                     write_psd_text, write_recording, write_report)
from .mitigation import MitigationConfig, mitigate
from .signal_chain import SimConfig, simulate
from .spectral import WelchParams, log_transform, welch_psd
from .sweep import DEFAULT_VOLTS, DEFAULT_Z_DELTAS, run_sweep


def _load_config(path: str | None) -> ConfigDocument:
    if path is None:
        return ConfigDocument(sim=SimConfig(), welch=WelchParams(),
                              mitigation=MitigationConfig())
    return read_config(path)


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def cmd_simulate(args) -> int:
    doc = _load_config(args.config)
    config = doc.sim
    if args.stim_volts is not None:
        if args.stim_volts < 0:
            raise ValueError("--stim-volts must be non-negative")
        config = replace(config, stim=replace(config.stim, amplitude=args.stim_volts))
    if args.z_delta is not None:
        channel = replace(config.channel, z1=config.channel.z3 + args.z_delta)
        config = replace(config, channel=channel)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    rec = simulate(config)
    if args.label:
        rec.meta["label"] = args.label
    write_recording(rec, args.out)
    print(f"wrote {args.out}: {rec.samples.size} samples at {rec.fs:g} Hz")
    return 0


def cmd_predict(args) -> int:
    artifacts = predict_artifacts(f_t=args.ft, fs=args.fs,
                                  n_harmonics=args.harmonics,
                                  imh_order=args.imh_order)
    print(f"predicted artifacts for f_T={args.ft:g} Hz, fs={args.fs:g} Hz, "
          f"{args.harmonics} harmonics, intermod order <= {args.imh_order}")
    print(f"{'freq_hz':>9}  {'class':5}  {'order':5}  origin")
    for tone in artifacts.tones:
        print(f"{tone.freq:9.3f}  {tone.klass:5}  {tone.order:5d}  {tone.origin}")
    if args.out:
        payload = {
            "params": artifacts.params,
            "fs": artifacts.fs,
            "tones": [asdict(t) for t in artifacts.tones],
        }
        write_report(payload, args.out, kind="artifact_set")
        print(f"wrote {args.out}")
    return 0


def cmd_analyze(args) -> int:
    doc = _load_config(args.config)
    params = WelchParams() if args.welch_defaults else doc.welch
    rec = read_recording(args.infile)
    psd = welch_psd(rec, params)
    header = {
        "source": str(args.infile),
        "fs": f"{psd.fs:g}",
        "nfft": params.nfft,
        "segment_len": params.segment_len,
        "window": params.window,
        "n_segments": psd.n_segments,
    }
    write_psd_text(psd.freqs, psd.power, args.out, header=header)
    print(f"wrote {args.out}: {psd.freqs.size} bins, {psd.n_segments} segments")
    if args.plot:
        _plot_psd(rec, psd, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _plot_psd(rec, psd, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    logpsd = log_transform(psd)
    artifacts = predict_artifacts(fs=psd.fs)
    peaks = classify_peaks(psd, artifacts)

    fig, ax = plt.subplots(figsize=(9, 5))
    ax.plot(logpsd.freqs, logpsd.db, lw=0.8, color="black")
    colors = {"SSH": "tab:red", "ASH": "tab:orange",
              "IMH": "tab:purple", "ORM": "tab:blue"}
    seen = set()
    for tone in artifacts.tones:
        label = tone.klass if tone.klass not in seen else None
        seen.add(tone.klass)
        ax.axvline(tone.freq, color=colors.get(tone.klass, "gray"),
                   alpha=0.4, lw=1.0, label=label)
    for peak in peaks:
        if peak.klass != "UNKNOWN":
            ax.plot(peak.freq, peak.power_db, "v",
                    color=colors.get(peak.klass, "gray"), ms=5)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("PSD (dB)")
    ax.set_title(f"{Path(str(path)).stem}: fs={psd.fs:g} Hz, "
                 f"{psd.n_segments} segments")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_mitigate(args) -> int:
    doc = _load_config(args.config)
    rec = read_recording(args.infile)
    result = mitigate(rec, doc.welch, doc.mitigation)
    write_report(mitigation_report_dict(rec, result), args.report,
                 kind="mitigation_report")
    gcr = result.gcr_report
    flag = "FLAGGED" if gcr.flagged else "ok"
    print(f"wrote {args.report}: gcr={gcr.gcr:.4f} ({flag}, "
          f"threshold {gcr.threshold:g})")
    for band, median in result.band_report.medians.items():
        print(f"  {band:6} {median:8.2f} dB")
    return 0


def cmd_sweep(args) -> int:
    doc = _load_config(args.config)
    summary = run_sweep(volts=args.volts, z_deltas=args.z_deltas,
                        base_config=doc.sim, welch_params=doc.welch,
                        mitigation_config=doc.mitigation,
                        out_dir=args.out_dir)
    failures = [c for c in summary["cells"] if "error" in c]
    print(f"swept {len(summary['cells'])} cells "
          f"({len(failures)} failed); summary in {args.out_dir}")
    print("gcr matrix (rows: z_delta, cols: volts):")
    header = "  ".join(f"{v:6g}" for v in summary["grid"]["volts"])
    print(f"{'':>8}  {header}")
    for zd, row in zip(summary["grid"]["z_deltas"], summary["gcr_matrix"]):
        cells = "  ".join("  none" if g is None else f"{g:6.3f}" for g in row)
        print(f"{zd:8g}  {cells}")
    for cell in failures:
        print(f"  cell v={cell['volts']:g} z={cell['z_delta']:g} "
              f"failed: {cell['error']}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlfp",
        description="Differential LFP simulation, artifact prediction, "
                    "and mismatch-compression mitigation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the signal chain, write a recording")
    p.add_argument("--config", help="JSON config document (defaults when omitted)")
    p.add_argument("--out", required=True, help="output recording path")
    p.add_argument("--stim-volts", type=float, dest="stim_volts",
                   help="stimulation amplitude override")
    p.add_argument("--z-delta", type=float,
                   help="impedance mismatch override (z1 = z3 + this)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--label", help="channel label stored in the header")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="print the expected artifact table")
    p.add_argument("--ft", type=float, default=130.0, help="stimulation Hz")
    p.add_argument("--fs", type=float, default=422.0, help="sampling Hz")
    p.add_argument("--harmonics", type=int, default=6,
                   help="stimulation harmonic count")
    p.add_argument("--imh-order", type=int, default=3,
                   help="max intermodulation order")
    p.add_argument("--out", help="also write the table as a JSON report")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="Welch PSD of a recording")
    p.add_argument("--in", dest="infile", required=True, help="recording path")
    p.add_argument("--out", required=True, help="two-column PSD text output")
    p.add_argument("--config", help="JSON config for Welch parameters")
    p.add_argument("--welch-defaults", action="store_true",
                   help="ignore any configured Welch parameters")
    p.add_argument("--plot", help="optional spectrum plot (.svg)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("mitigate", help="detrend, band medians, GCr flag")
    p.add_argument("--in", dest="infile", required=True, help="recording path")
    p.add_argument("--report", required=True, help="JSON report output path")
    p.add_argument("--config", help="JSON config document")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("sweep", help="amplitude x mismatch grid")
    p.add_argument("--volts", type=_float_list,
                   default=list(DEFAULT_VOLTS),
                   help="comma-separated stimulation amplitudes")
    p.add_argument("--z-deltas", type=_float_list,
                   default=list(DEFAULT_Z_DELTAS),
                   help="comma-separated mismatches in ohms")
    p.add_argument("--out-dir", required=True, help="directory for reports")
    p.add_argument("--config", help="JSON config document")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RecordingParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
