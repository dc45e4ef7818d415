#!/usr/bin/env python3
"""Weight-resolution sweep: how coarse can the quantization be?

Sweeps the maximum weight m for the availability-weighted dispatcher against
the effectively-unquantized reference (m = 2^20) at a fixed 500ms interval.
"""

import argparse

from flowlb.experiments import ExperimentSpec, PRESETS, run_experiment

DESK = dict(instances_per_vip=20, flow_count=10_000, mean_interarrival=0.005)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/m-sweep")
    parser.add_argument("--replications", type=int, default=3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    spec = ExperimentSpec(**{**PRESETS["m-sweep"], **DESK},
                          replications=args.replications, base_seed=args.seed)
    results = run_experiment(spec, args.out, quiet=True)

    by_m = {}
    for r in results:
        by_m.setdefault(r.m, []).append(r.report.mean_omega)
    print(f"{'m':>8}{'mean omega':>12}")
    for m, omegas in sorted(by_m.items()):
        print(f"{m:>8}{sum(omegas) / len(omegas):>12.4f}")
    print(f"\nwrote CSVs to {args.out}")


if __name__ == "__main__":
    main()
