#!/usr/bin/env python3
"""Run replicated lazy-tree walks and report direct and regeneration speed
estimates.

Example:
    python3 scripts/run_simulate.py --alpha-p 1 --alpha-c 1 \
        --offspring '{"2": 1}' --walk rwde --n-steps 100000 --replicates 50
"""

import argparse
import json

import numpy as np

from errw.branching import OffspringDistribution
from errw.exceptions import InsufficientDataError
from errw.specfun import ParamSet
from errw.walk import simulate_errw_lazy, simulate_rwde_lazy, speed_direct, speed_regen


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha-p", type=float, required=True)
    ap.add_argument("--alpha-c", type=float, required=True)
    ap.add_argument("--offspring", default='{"2": 1}', help="offspring law as JSON")
    ap.add_argument("--walk", choices=("rwde", "errw"), default="rwde")
    ap.add_argument("--n-steps", type=int, default=100_000)
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = ParamSet(args.alpha_p, args.alpha_c)
    dist = OffspringDistribution.from_dict(json.loads(args.offspring))
    simulate = simulate_rwde_lazy if args.walk == "rwde" else simulate_errw_lazy

    direct, regen, discarded = [], [], 0
    for i in range(args.replicates):
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, i]))
        traj = simulate(dist, p, args.n_steps, rng)
        if traj.known_extinct:
            discarded += 1
            continue
        direct.append(speed_direct(traj))
        try:
            regen.append(speed_regen(traj))
        except InsufficientDataError:
            pass

    def summary(xs):
        if not xs:
            return None
        arr = np.asarray(xs)
        return {
            "mean": float(arr.mean()),
            "se": float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else None,
            "n": len(arr),
        }

    print(json.dumps(
        {
            "speed_direct": summary(direct),
            "speed_regen": summary(regen),
            "discarded_extinct": discarded,
        },
        indent=1,
        sort_keys=True,
    ))


if __name__ == "__main__":
    main()
