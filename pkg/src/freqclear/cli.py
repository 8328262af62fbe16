"""Command-line entry point.

    freqclear run --preset efr15 --wind-gw 0:30:1 --pricing both --out out/
    freqclear run --scenario system.scenario --out out/

Exit codes: 0 full success, 2 completed with per-point failures, 1 fatal.
"""

from __future__ import annotations

import argparse
import sys

from .runner import (PRESETS, SweepSpec, emit_outputs, run_multi_period,
                     run_sweep)


def parse_wind_grid(text):
    """'0:30:1' (GW, inclusive) or a comma list '0,5,12.5' -> MW tuple."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        n = int(round((hi - lo) / step))
        return tuple(1000.0 * (lo + k * step) for k in range(n + 1))
    return tuple(1000.0 * float(x) for x in text.split(","))


def build_parser():
    ap = argparse.ArgumentParser(prog="freqclear")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a sweep or multi-period study")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="scenario file (format = 1)")
    src.add_argument("--preset", default="no-wind-services",
                     choices=sorted(PRESETS))
    run.add_argument("--wind-gw", default="0:20:1",
                     help="grid as lo:hi:step in GW or a comma list")
    run.add_argument("--pricing", default="dispatchable",
                     choices=["dispatchable", "restricted", "both"])
    run.add_argument("--alpha", type=float, default=None,
                     help="day-ahead wind forecast error fraction")
    run.add_argument("--optimize-hi", action="store_true",
                     help="turn the GFM synthetic-inertia constant into a "
                          "decision variable")
    run.add_argument("--krec", type=float, default=None,
                     help="override the recovery factor (1/s)")
    run.add_argument("--multi-period", action="store_true")
    run.add_argument("--cst", type=float, default=10_000.0,
                     help="start-up cost for the multi-period study")
    run.add_argument("--wind-fraction", type=float, default=0.6,
                     help="hourly wind availability as a share of installed "
                          "capacity (multi-period)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = SweepSpec(
            preset=args.preset,
            wind_grid=parse_wind_grid(args.wind_gw),
            pricing_mode=args.pricing,
            alpha=args.alpha,
            hi_optimize=args.optimize_hi,
            k_rec_override=args.krec,
            multi_period=args.multi_period,
            c_st=args.cst,
            wind_fraction=args.wind_fraction,
            scenario_path=args.scenario,
            jobs=args.jobs,
            seed=args.seed,
        )
        if args.multi_period:
            result = run_multi_period(spec)
        else:
            result = run_sweep(spec)
        emit_outputs(result, args.out)
        n_fail = len(result.failures)
        if args.verbose or n_fail:
            for pt in result.points:
                status = "ok" if pt.ok else f"FAILED: {pt.error}"
                print(f"wind {pt.wind_mw / 1000.0:6.2f} GW  {status}",
                      file=sys.stderr)
        print(f"{len(result.points) - n_fail}/{len(result.points)} points "
              f"solved; outputs in {args.out}")
        return 2 if n_fail else 0
    except Exception as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
