"""Command-line entry point: ``qlink <subcommand> [options]``.

Exit status is 0 on success, 2 for invalid configuration or usage and 1 for
failures during a run.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import drift as drift_mod
from .config import PRESETS, ConfigError, RunConfig, resolve_config
from .experiments import (
    DEFAULT_GATES_PER_POINT,
    SweepSpec,
    run_dimension_table,
    run_interference_sweep,
    run_loss_sweep,
    run_matrix_experiment,
    write_result,
)

DEFAULT_OUTPUT_DIR = "qlink_output"


def _common(need_config: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    if need_config:
        p.add_argument("--config", default="paper_500m",
                       help=f"config file path or preset name ({', '.join(PRESETS)}); default paper_500m")
        p.add_argument("--fit", choices=("ideal", "paper", "custom", "fit_dark_share", "fit_qber11"),
                       help="named parameter fit (overrides run.fit)")
    p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    p.add_argument("--output-dir", help="output directory (fallback: $QLINK_OUTPUT_DIR)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="results table format")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[_common()], help="single-photon interference fringes")
    p.add_argument("--basis", choices=("mub1", "mub2"), default="mub1",
                   help="Bob's basis: mub1 (phi_B=0) or mub2 (phi_B=pi/2)")
    p.add_argument("--gates", type=int, default=DEFAULT_GATES_PER_POINT, help="gates per phase point")
    p.add_argument("--steps", type=int, default=81, help="phase points in the triangular drive")
    p.add_argument("--start", type=float, default=0.0, help="drive start phase (rad)")
    p.add_argument("--stop", type=float, default=4 * np.pi, help="drive turning-point phase (rad)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("matrix", parents=[_common()], help="BB84 probability matrix")
    p.add_argument("--gates-per-cell", type=int, default=100_000, help="gates per (state, basis) cell")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("losssweep", parents=[_common()], help="QBER versus added loss")
    p.add_argument("--max-db", type=float, default=10.0, help="largest added loss (dB)")
    p.add_argument("--steps", type=int, default=101, help="loss grid points")
    p.add_argument("--target-qber", type=float, default=0.11, help="QBER threshold to solve for")
    p.set_defaults(func=cmd_losssweep)

    p = sub.add_parser("dimtable", parents=[_common(need_config=False)],
                       help="post-selection loss and lantern gain versus dimension")
    p.add_argument("--dmax", type=int, default=8, help="largest dimension")
    p.add_argument("--lantern-db", type=float, default=0.7, help="lantern insertion loss (dB)")
    p.add_argument("--accounting", choices=("bob_lantern", "both_lanterns"), default="bob_lantern",
                   help="which lanterns count against the few-mode link")
    p.set_defaults(func=cmd_dimtable)

    p = sub.add_parser("drift", help="phase-drift traces and spectra")
    dsub = p.add_subparsers(dest="drift_command", required=True)
    q = dsub.add_parser("synth", parents=[_common(need_config=False)], help="synthesize a photodiode trace")
    q.add_argument("--minutes", type=float, default=50.0, help="trace duration (min)")
    q.add_argument("--mod-hz", type=float, default=100.0, help="phase-modulation frequency (Hz)")
    q.add_argument("--sample-rate", type=float, default=drift_mod.DEFAULT_SAMPLE_RATE_HZ, help="sample rate (Hz)")
    q.add_argument("--sigma", type=float, default=drift_mod.LAB_DRIFT.sigma_rad_per_sqrt_s,
                   help="drift strength (rad/sqrt(s)); 0 disables drift")
    q.add_argument("--relax-time", type=float, default=drift_mod.LAB_DRIFT.relax_time_s,
                   help="drift relaxation time (s); 0 for an unbounded random walk")
    q.add_argument("--visibility", type=float, default=1.0, help="fringe visibility")
    q.add_argument("--out", help="output trace CSV (default: <output-dir>/drift_synth_<stamp>_<seed>.csv)")
    q.set_defaults(func=cmd_drift_synth)
    q = dsub.add_parser("spectrum", parents=[_common(need_config=False)], help="Fourier spectrum of a trace")
    q.add_argument("input", nargs="?", help="trace CSV (default: newest drift_synth_*.csv in output dir)")
    q.add_argument("--window", choices=drift_mod.WINDOWS, default="rectangular")
    q.add_argument("--out", help="output spectrum CSV")
    q.set_defaults(func=cmd_drift_spectrum)
    q = dsub.add_parser("compare", parents=[_common(need_config=False)],
                        help="compare low-band power of two traces or spectra")
    q.add_argument("first", help="trace or spectrum CSV")
    q.add_argument("second", help="trace or spectrum CSV")
    q.add_argument("--band-lo", type=float, default=drift_mod.DEFAULT_BAND_HZ[0], help="band lower edge (Hz, exclusive)")
    q.add_argument("--band-hi", type=float, default=drift_mod.DEFAULT_BAND_HZ[1], help="band upper edge (Hz)")
    q.add_argument("--tolerance", type=float, default=2.0, help="indistinguishable if ratio in [1/tol, tol]")
    q.add_argument("--window", choices=drift_mod.WINDOWS, default="rectangular")
    q.set_defaults(func=cmd_drift_compare)
    return parser


def _output_dir(args, rc: RunConfig | None = None) -> Path:
    chosen = args.output_dir or os.environ.get("QLINK_OUTPUT_DIR")
    if not chosen and rc is not None:
        chosen = rc.output_dir
    return Path(chosen or DEFAULT_OUTPUT_DIR)


def _run_config(args) -> RunConfig:
    rc = resolve_config(args.config)
    if args.fit:
        rc = rc.with_values(**{"run.fit": args.fit})
    if args.seed is not None:
        rc = rc.with_values(**{"run.seed": args.seed})
    return rc


def _report(result, paths) -> None:
    for k, v in result.summary.items():
        print(f"{k}: {v}")
    print(f"wall_clock_s: {result.wall_clock_s:.3f}")
    for p in paths:
        print(f"wrote {p}")


def cmd_sweep(args) -> int:
    rc = _run_config(args)
    cfg = rc.architecture()
    spec = SweepSpec("alice_phase", args.start, args.stop, args.steps, args.gates, rc.seed)
    result = run_interference_sweep(cfg, spec, basis=args.basis.upper())
    _report(result, write_result(result, _output_dir(args, rc), rc.seed, args.format))
    return 0


def cmd_matrix(args) -> int:
    rc = _run_config(args)
    result = run_matrix_experiment(rc.architecture(), args.gates_per_cell, rc.seed)
    _report(result, write_result(result, _output_dir(args, rc), rc.seed, args.format))
    return 0


def cmd_losssweep(args) -> int:
    rc = _run_config(args)
    result = run_loss_sweep(rc.architecture(), args.max_db, args.steps, args.target_qber)
    _report(result, write_result(result, _output_dir(args, rc), rc.seed, args.format))
    return 0


def cmd_dimtable(args) -> int:
    seed = args.seed or 0
    result = run_dimension_table(args.dmax, args.lantern_db, args.accounting)
    for row in result.rows:
        print(f"d={row[0]} timebin_transmission={row[1]:.6g} fmf_gain={row[2]:.6g}")
    _report(result, write_result(result, _output_dir(args), seed, args.format))
    return 0


def _stamp() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def cmd_drift_synth(args) -> int:
    seed = args.seed or 0
    model = drift_mod.DriftModel(args.sigma, args.relax_time or None)
    ts = drift_mod.synthesize_drift_trace(
        args.minutes * 60.0, args.sample_rate, args.mod_hz, model, seed, visibility=args.visibility
    )
    out = Path(args.out) if args.out else _output_dir(args) / f"drift_synth_{_stamp()}_{seed}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    ts.save_csv(out)
    kind = "none" if model.sigma_rad_per_sqrt_s == 0 else (
        "random walk" if model.relax_time_s is None else "mean-reverting random walk")
    print(f"drift_model: {kind} (synthetic stand-in, not measured lab noise)")
    print(f"samples: {ts.samples.size}")
    print(f"wrote {out}")
    return 0


def _load_spectrum(path: str, window: str) -> drift_mod.Spectrum:
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("# sample_rate_hz="):
        return drift_mod.fourier_spectrum(drift_mod.TimeSeries.load_csv(path), window)
    return drift_mod.Spectrum.load_csv(path, window)


def cmd_drift_spectrum(args) -> int:
    if args.input:
        src = Path(args.input)
    else:
        found = sorted(_output_dir(args).glob("drift_synth_*.csv"), key=lambda p: p.stat().st_mtime)
        if not found:
            print(f"error: no drift_synth_*.csv in {_output_dir(args)}", file=sys.stderr)
            return 2
        src = found[-1]
    if not src.is_file():
        print(f"error: input not found: {src}", file=sys.stderr)
        return 2
    spec = drift_mod.fourier_spectrum(drift_mod.TimeSeries.load_csv(src), args.window)
    out = Path(args.out) if args.out else src.with_name(src.stem.replace("drift_synth", "drift_spectrum") + ".csv")
    spec.save_csv(out)
    print(f"resolution_hz: {spec.resolution_hz:.6g}")
    print(f"peak_hz: {spec.peak_frequency():.6g}")
    print(f"wrote {out}")
    return 0


def cmd_drift_compare(args) -> int:
    for p in (args.first, args.second):
        if not Path(p).is_file():
            print(f"error: input not found: {p}", file=sys.stderr)
            return 2
    s1 = _load_spectrum(args.first, args.window)
    s2 = _load_spectrum(args.second, args.window)
    cmp = drift_mod.compare_band_power(s1, s2, (args.band_lo, args.band_hi), args.tolerance)
    print(f"ratio: {cmp.ratio:.6g}")
    print(f"decision: {'indistinguishable' if cmp.indistinguishable else 'distinguishable'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error in {exc.source}:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
