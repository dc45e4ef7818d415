#!/usr/bin/env python3
"""Dispatcher comparison on the synthetic heavy-tail workload.

Runs the six-dispatcher grid at desk scale (override with --full for the
400-instance, 100k-flow version) and prints mean service utilization per
dispatcher and polling interval.
"""

import argparse
from collections import defaultdict

from flowlb.experiments import ExperimentSpec, PRESETS, run_experiment

DESK = dict(instances_per_vip=20, flow_count=10_000, mean_interarrival=0.005)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/comparison")
    parser.add_argument("--full", action="store_true", help="full-scale topology")
    parser.add_argument("--replications", type=int, default=3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    fields = dict(PRESETS["paper-synth"])
    if not args.full:
        fields.update(DESK)
    spec = ExperimentSpec(**fields, replications=args.replications,
                          base_seed=args.seed)
    results = run_experiment(spec, args.out, quiet=True)

    acc = defaultdict(list)
    for r in results:
        acc[(r.dispatcher, r.m, r.interval)].append(r.report.mean_omega)
    print(f"{'dispatcher':<12}{'interval':>10}{'mean omega':>12}")
    for (disp, m, interval), omegas in sorted(acc.items()):
        label = f"{disp}:{m}" if disp == "awfd" else disp
        print(f"{label:<12}{interval:>9.2f}s{sum(omegas) / len(omegas):>12.4f}")
    print(f"\nwrote CSVs to {args.out}")


if __name__ == "__main__":
    main()
