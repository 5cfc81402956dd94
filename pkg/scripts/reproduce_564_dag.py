"""Build the stratum dags of the small examples and write table, DOT and JSON.

    python3 scripts/reproduce_564_dag.py --out results/dags
"""

import argparse
from pathlib import Path

from fiberstrat.dag import build_dag, export_dot, export_json, export_table
from fiberstrat.ranklist import NetworkShape

CASES = [((4, 6, 5), 1), ((1, 1, 1, 1), 0), ((2, 1, 1), 0), ((1, 1, 1, 1), 1)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="directory for .dot/.json files")
    args = ap.parse_args()
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    for d, R in CASES:
        g = build_dag(NetworkShape(d), R)
        print(export_table(g))
        if out:
            stem = "x".join(map(str, d)) + f"_rank{R}"
            (out / f"{stem}.dot").write_text(export_dot(g))
            (out / f"{stem}.json").write_text(export_json(g))


if __name__ == "__main__":
    main()
