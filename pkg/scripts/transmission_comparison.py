#!/usr/bin/env python3
"""Compare cumulative transmission across topologies and dissemination
modes at desk scale, printing one table row per (cell, seed).

Example:
    python scripts/transmission_comparison.py --clients 32,64 --seeds 1,2
"""

import argparse

from crdtsim.simulator import ExperimentConfig, run_experiment

CELLS = (("star", "state"), ("hyparview", "state"), ("hyparview", "delta"))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--clients", default="32", help="comma list of client counts")
    parser.add_argument("--seeds", default="1", help="comma list of seeds")
    parser.add_argument("--duration", type=int, default=1800)
    args = parser.parse_args()

    print(f"{'cell':>22} {'seed':>4} {'instr bytes':>14} {'ctrl bytes':>12} "
          f"{'conv tick':>9} {'payloads':>9}")
    for clients in (int(c) for c in args.clients.split(",")):
        baseline = None
        for topology, mode in CELLS:
            for seed in (int(s) for s in args.seeds.split(",")):
                config = ExperimentConfig(
                    clients=clients, topology=topology, mode=mode,
                    duration=args.duration, seed=seed,
                )
                report = run_experiment(config)
                cell = f"{topology}/{mode}/{clients}"
                rel = ""
                if topology == "hyparview" and mode == "state":
                    baseline = report.total_instrumented_bytes
                elif baseline:
                    rel = f"  ({report.total_instrumented_bytes / baseline:.0%} of hpv/state)"
                print(f"{cell:>22} {seed:>4} {report.total_instrumented_bytes:>14,} "
                      f"{report.total_control_bytes:>12,} {report.convergence_tick:>9} "
                      f"{report.payloads_sent:>9,}{rel}")


if __name__ == "__main__":
    main()
