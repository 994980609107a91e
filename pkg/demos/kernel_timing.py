"""Time the retraction and landing kernels over a rank sweep.

The retraction step pays an r x r inverse square root per iteration; the
landing step as benchmarked forms the m x m skew product instead. Their
costs therefore scale differently in r, which the table below shows
directly. Defaults keep the sweep quick; pass --m 4096 for the scale the
acceptance checks use.

    python demos/kernel_timing.py [--m 512] [--ranks 4,32,64,256]
"""

import argparse

from polarlab.bench import format_bench_table, run_rank_sweep, write_bench_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--m", type=int, default=512)
    ap.add_argument("--ranks", default="4,32,64,256")
    ap.add_argument("--max-samples", type=int, default=25)
    ap.add_argument("--out", default=None, help="also write results as CSV")
    args = ap.parse_args()

    ranks = [int(tok) for tok in args.ranks.split(",") if tok]
    results = run_rank_sweep(args.m, ranks=ranks, max_samples=args.max_samples)
    print(format_bench_table(results, args.m))
    unstable = [res for res in results if not res.stable]
    if unstable:
        print(f"note: {len(unstable)} cells did not reach a stable median; rerun on an idle machine")
    if args.out:
        write_bench_csv(results, args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
