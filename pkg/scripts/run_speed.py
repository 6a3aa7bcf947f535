#!/usr/bin/env python3
"""Evaluate the closed-form speed ratio by Monte Carlo at one parameter point
and compare with the regime classifier.

Example:
    python3 scripts/run_speed.py --alpha-p 1 --alpha-c 1 \
        --offspring '{"2": 1}' --n-mc 1000000 --seed 0
"""

import argparse
import json

import numpy as np

from errw.branching import OffspringDistribution
from errw.conductance import sample_beta_population
from errw.criteria import classify_speed
from errw.specfun import ParamSet
from errw.speed import evaluate_speed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha-p", type=float, required=True)
    ap.add_argument("--alpha-c", type=float, required=True)
    ap.add_argument("--offspring", default='{"2": 1}', help="offspring law as JSON")
    ap.add_argument("--n-mc", type=int, default=500_000)
    ap.add_argument("--pool-size", type=int, default=100_000)
    ap.add_argument("--pool-iterations", type=int, default=80)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = ParamSet(args.alpha_p, args.alpha_c)
    dist = OffspringDistribution.from_dict(json.loads(args.offspring))
    rng = np.random.default_rng(args.seed)
    pop = sample_beta_population(p, dist, args.pool_size, args.pool_iterations, rng)
    est = evaluate_speed(p, dist, pop, args.n_mc, rng)
    rep = classify_speed(p, dist)
    print(json.dumps(
        {
            "speed": est.speed,
            "se": est.se,
            "saturated_fraction": est.saturated_fraction,
            "flagged": est.flagged,
            "regime": rep.to_dict(),
        },
        indent=1,
        sort_keys=True,
    ))


if __name__ == "__main__":
    main()
