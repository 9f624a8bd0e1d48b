"""Command-line front end: single experiments and experiment sweeps.

Every accepted run writes ``<out>/<run-id>/metrics.csv`` plus
``summary.txt`` (and optionally ``overlay.csv``) and prints the summary.
Run ids hash the full configuration including the seed, so rerunning
identical flags lands in the same directory with identical bytes.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .reporting import CsvMetricsSink, OverlayDumpSink, run_id_for, write_summary
from .simulator import ConfigError, ExperimentConfig, PhaseTimeout, run_experiment


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", choices=("star", "hyparview"), default="hyparview")
    p.add_argument("--mode", choices=("state", "delta"), default="delta")
    p.add_argument("--impression-interval", type=int, default=10)
    p.add_argument("--propagation-interval", type=int, default=5)
    p.add_argument("--duration", type=int, default=1800)
    p.add_argument("--ads", type=int, default=10)
    p.add_argument("--contracts-per-ad", type=int, default=1)
    p.add_argument("--threshold", type=int, default=500)
    p.add_argument("--impressions-per-client", type=int, default=None)
    p.add_argument("--latency", default="1,1", metavar="MIN,MAX")
    p.add_argument("--churn", type=float, default=0.0,
                   help="kill+replace probability per client per simulated minute")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="results")
    p.add_argument("--client-triggers", action="store_true",
                   help="clients also fire retirement triggers")
    p.add_argument("--overlay-dump", action="store_true",
                   help="write per-interval active-view snapshots to overlay.csv")


def _parse_latency(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"latency must be MIN,MAX integers, got {text!r}") from exc
    return lo, hi


def _config_from(args, clients: int, topology: str, mode: str, seed: int) -> ExperimentConfig:
    lo, hi = _parse_latency(args.latency)
    return ExperimentConfig(
        clients=clients,
        topology=topology,
        mode=mode,
        impression_interval=args.impression_interval,
        propagation_interval=args.propagation_interval,
        duration=args.duration,
        ads=args.ads,
        contracts_per_ad=args.contracts_per_ad,
        threshold=args.threshold,
        impressions_per_client=args.impressions_per_client,
        latency_min=lo,
        latency_max=hi,
        churn_per_minute=args.churn,
        seed=seed,
        client_triggers=args.client_triggers,
    )


def execute_run(config: ExperimentConfig, out_root: str, overlay_dump: bool = False) -> tuple[str, str]:
    """Run one experiment, write its output files, return (run_id, summary)."""
    config.validate()
    run_id = run_id_for(config)
    run_dir = Path(out_root) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    sink = CsvMetricsSink(run_dir / "metrics.csv")
    overlay_sink = OverlayDumpSink(run_dir / "overlay.csv") if overlay_dump else None
    try:
        report = run_experiment(config, metrics_sink=sink, overlay_sink=overlay_sink)
    finally:
        csv_sha = sink.close()
        if overlay_sink is not None:
            overlay_sink.close()
    summary = write_summary(run_dir / "summary.txt", report, run_id, csv_sha)
    return run_id, summary


def cmd_run(args) -> int:
    config = _config_from(args, args.clients, args.topology, args.mode, args.seed)
    run_id, summary = execute_run(config, args.out, args.overlay_dump)
    print(summary, end="")
    print(f"wrote {Path(args.out) / run_id}/metrics.csv")
    return 0


def _sweep_cell(cell) -> str:
    config, out_root, overlay = cell
    run_id, _ = execute_run(config, out_root, overlay)
    return f"{config.topology}/{config.mode}/{config.clients} seed={config.seed} -> {run_id}"


def cmd_sweep(args) -> int:
    client_counts = [int(x) for x in args.clients.split(",")]
    topologies = args.topologies.split(",")
    modes = args.modes.split(",")
    cells = []
    for clients in client_counts:
        for topology in topologies:
            for mode in modes:
                for rep in range(args.repeat):
                    config = _config_from(args, clients, topology, mode, args.seed + rep)
                    try:
                        config.validate()
                    except ConfigError:
                        continue  # e.g. star/delta is not a valid cell
                    cells.append((config, args.out, args.overlay_dump))
    if not cells:
        print("sweep selects no valid cells", file=sys.stderr)
        return 2
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for line in pool.map(_sweep_cell, cells):
                print(line)
    else:
        for cell in cells:
            print(_sweep_cell(cell))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crdtsim",
        description="Replicated-counter experiments over star or gossip overlays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a single experiment")
    run_p.add_argument("--clients", type=int, required=True)
    _add_run_flags(run_p)
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="execute a grid of experiments")
    sweep_p.add_argument("--clients", required=True, help="comma list, e.g. 32,64")
    sweep_p.add_argument("--topologies", default="star,hyparview")
    sweep_p.add_argument("--modes", default="state,delta")
    sweep_p.add_argument("--repeat", type=int, default=2)
    sweep_p.add_argument("--workers", type=int, default=1)
    _add_run_flags(sweep_p)
    sweep_p.set_defaults(fn=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except PhaseTimeout as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
