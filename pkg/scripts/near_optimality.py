"""Ratio of FHEI's sum quality to the joint grid oracle on random two-mobile instances.

Two instance families are compared: the Monte-Carlo setting (default
parameters, gamma channels) and a family where every scalar parameter is also
scaled log-uniformly by up to ``--spread``. The second one exposes
latency-bound instances on which the energy-only feature-size step can fall
short of the joint optimum.

    python scripts/near_optimality.py [--instances 100] [--points 40] [--spread 2]
"""

import argparse

import numpy as np

from fhei.baselines import joint_grid_oracle
from fhei.errors import InitialInfeasible
from fhei.sim import ExperimentConfig, perturbed_scenario, trial_scenario
from fhei.solver import alternate


def ratio(sc, points):
    return alternate(sc).sum_quality / joint_grid_oracle(sc, points).sum_quality


def describe(name, r):
    r = np.asarray(r)
    q = np.quantile(r, [0.0, 0.05, 0.5, 1.0])
    print(
        f"{name:<10s} n={r.size:<4d} min {q[0]:.4f}  p5 {q[1]:.4f}  median {q[2]:.4f}  max {q[3]:.4f}"
        f"  below 0.98: {(r < 0.98).mean():.1%}"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--points", type=int, default=40, help="grid points per oracle axis")
    ap.add_argument("--spread", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ExperimentConfig(seed=args.seed)
    describe("default", [ratio(trial_scenario(cfg, 2, t), args.points) for t in range(args.instances)])

    rng = np.random.default_rng(args.seed)
    perturbed = []
    while len(perturbed) < args.instances:
        try:
            perturbed.append(ratio(perturbed_scenario(rng, 2, args.spread), args.points))
        except InitialInfeasible:
            continue
    describe("perturbed", perturbed)


if __name__ == "__main__":
    main()
