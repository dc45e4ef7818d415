#!/usr/bin/env python3
"""Polling-interval sensitivity: snapshot herding vs weighted spreading.

Compares the least-congested-first baseline, which sends every flow of an
interval to one instance, against the weighted dispatcher as the polling
interval stretches from 100ms to 1s.
"""

import argparse
from collections import defaultdict

from flowlb.experiments import ExperimentSpec, PRESETS, run_experiment

DESK = dict(instances_per_vip=20, flow_count=10_000, mean_interarrival=0.005)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/interval-sweep")
    parser.add_argument("--replications", type=int, default=3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    spec = ExperimentSpec(**{**PRESETS["interval-sweep"], **DESK},
                          replications=args.replications, base_seed=args.seed)
    results = run_experiment(spec, args.out, quiet=True)

    acc = defaultdict(list)
    for r in results:
        acc[(r.dispatcher, r.interval)].append(r.report.mean_omega)
    print(f"{'dispatcher':<12}{'interval':>10}{'mean omega':>12}")
    for (disp, interval), omegas in sorted(acc.items()):
        print(f"{disp:<12}{interval:>9.2f}s{sum(omegas) / len(omegas):>12.4f}")
    print(f"\nwrote CSVs to {args.out}")


if __name__ == "__main__":
    main()
