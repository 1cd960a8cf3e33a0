"""Time the FIR and IIR blur pipelines across scales and report the trend.

The convolution blur's cost grows with sigma (window half-width 5 sigma)
while the recursive blur keeps three poles per direction at every scale,
so its cost should stay flat.  Prints the per-cell medians, the trend
verdicts, and the IIR speedup at the largest scale; optionally writes
the raw table as CSV.
"""

import argparse
import sys

from vmfilt.bench import run_bench, trend_report, write_bench_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs=2, default=(2048, 2048),
                    metavar=("H", "W"), help="image size (min 1024 per side)")
    ap.add_argument("--sigmas", type=float, nargs="+",
                    default=(3.0, 6.0, 12.0, 24.0))
    ap.add_argument("--reps", type=int, default=5,
                    help="timed repetitions per cell (median reported)")
    ap.add_argument("--csv", help="write the raw timing table here")
    args = ap.parse_args()

    records = run_bench(tuple(args.dims), sigmas=tuple(args.sigmas),
                        reps=args.reps)
    print(f"{'family':14s} {'sigma':>6s} {'threads':>7s} {'stage':>12s} "
          f"{'median ms':>10s}")
    for r in records:
        print(f"{r.family:14s} {r.sigma:6.1f} {r.threads:7d} {r.stage:>12s} "
              f"{1e3 * r.seconds:10.2f}")

    rep = trend_report(records)
    print()
    print(f"iir time flat across sigma (< 15% spread): {rep['iir_flat']}")
    print(f"fir time strictly increasing with sigma:   {rep['fir_increasing']}")
    for nt, s in sorted(rep["speedup"].items()):
        print(f"iir speedup at sigma={args.sigmas[-1]:g}, {nt} thread(s): "
              f"{s:.2f}x")
    if rep["margin_shrinks"] is not None:
        print(f"speedup margin shrinks with threads:       "
              f"{rep['margin_shrinks']}")

    if args.csv:
        write_bench_csv(args.csv, records)
        print(f"\nwrote {args.csv}")

    ok = rep["iir_flat"] and rep["fir_increasing"]
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
