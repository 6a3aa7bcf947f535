#!/usr/bin/env python3
"""Sweep the regime classifier over an (alpha_p, alpha_c) grid and write the
phase diagram as CSV.

Example:
    python3 scripts/run_phase_diagram.py --offspring '{"1": 0.5, "3": 0.5}' \
        --ap 0.1 6.0 --ac 0.05 4.0 -n 80 -o phase.csv
"""

import argparse
import json
import tempfile

from errw.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--offspring", default='{"2": 1}', help="offspring law as JSON")
    ap.add_argument("--ap", nargs=2, type=float, default=(0.1, 6.0), metavar=("MIN", "MAX"))
    ap.add_argument("--ac", nargs=2, type=float, default=(0.05, 4.0), metavar=("MIN", "MAX"))
    ap.add_argument("-n", type=int, default=50, help="grid points per axis")
    ap.add_argument("-o", "--out", default="phase_diagram.csv")
    args = ap.parse_args()

    cfg = {
        "offspring": json.loads(args.offspring),
        "grid": {
            "alpha_p": {"min": args.ap[0], "max": args.ap[1], "n": args.n},
            "alpha_c": {"min": args.ac[0], "max": args.ac[1], "n": args.n},
        },
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json") as f:
        json.dump(cfg, f)
        f.flush()
        raise SystemExit(cli_main(["phase-diagram", "--config", f.name, "--out", args.out]))


if __name__ == "__main__":
    main()
