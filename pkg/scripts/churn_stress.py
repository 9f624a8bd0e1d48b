#!/usr/bin/env python3
"""Stress the gossip overlay with increasing kill+replace churn and
verify the workload still converges with exact event conservation.

Example:
    python scripts/churn_stress.py --clients 64 --rates 0.05,0.10,0.20
"""

import argparse

from crdtsim.simulator import ExperimentConfig, PhaseTimeout, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--clients", type=int, default=64)
    parser.add_argument("--rates", default="0.05,0.10",
                        help="comma list of kill+replace probabilities per minute")
    parser.add_argument("--duration", type=int, default=1800)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    for rate in (float(r) for r in args.rates.split(",")):
        config = ExperimentConfig(
            clients=args.clients, topology="hyparview", mode="delta",
            duration=args.duration, churn_per_minute=rate, seed=args.seed,
        )
        expected = config.clients * config.ipc
        try:
            report = run_experiment(config)
        except PhaseTimeout as exc:
            print(f"rate {rate:.2f}: TIMEOUT ({exc})")
            continue
        conserved = report.counters_total() == expected
        print(
            f"rate {rate:.2f}: kills={len(report.churn_kills):3d} "
            f"convergence_tick={report.convergence_tick} "
            f"counters={report.counters_total()}/{expected} "
            f"{'exact' if conserved else 'DRIFTED'}"
        )


if __name__ == "__main__":
    main()
