"""Run the seeded combinatorial and numerical sweeps and print a summary line each.

    python3 scripts/run_sweeps.py --seeds 100 --multisets 100000
"""

import argparse
import json

from fiberstrat import sweeps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100, help="sampled points for the numerical sweeps")
    ap.add_argument("--multisets", type=int, default=100_000)
    ap.add_argument("--pairs", type=int, default=50, help="(W, rank list) pairs for stratum points")
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args()

    seeds = range(args.seeds)
    runs = [
        sweeps.combinatorics_sweep(),
        sweeps.bijection_sweep(args.multisets),
        sweeps.canonical_sweep(),
        sweeps.nullity_sweep(seeds),
        sweeps.geometry_sweep(seeds),
        sweeps.move_sweep(seeds),
        sweeps.stratum_point_sweep(args.pairs),
    ]
    for res in runs:
        print(f"{'PASS' if res.ok else 'FAIL'}  {res.name:<28s} {res.cases:>7d} cases "
              f"{len(res.failures):>4d} failures {res.seconds:7.2f}s")
        for msg in res.failures[:5]:
            print("      " + msg)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([res.__dict__ for res in runs], fh, indent=1)
    raise SystemExit(0 if all(res.ok for res in runs) else 1)


if __name__ == "__main__":
    main()
