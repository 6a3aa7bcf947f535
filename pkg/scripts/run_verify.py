#!/usr/bin/env python3
"""Run the exact-identity verification suite (path reversal, two-walk
reversal, quenched bias) and print the report.

Example:
    python3 scripts/run_verify.py --seed 0
"""

import argparse
import json
import sys

from errw.reversal import run_verification_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    report = run_verification_suite(seed=args.seed)
    print(json.dumps(report, indent=1, sort_keys=True))
    sys.exit(0 if report["all_pass"] else 1)


if __name__ == "__main__":
    main()
