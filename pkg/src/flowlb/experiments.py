"""Experiment configuration, presets, sweeps, and CSV emission.

A single JSON config drives everything. A ``preset`` picks one of the
canned campaigns at desk scale; any explicit field overrides the preset.
Replication r runs with seed = base_seed + r, and the trace for a run is
derived from the run seed alone, so sweep axes (dispatcher, interval, drop
probability) see identical workloads.
"""

from __future__ import annotations

import dataclasses
import json
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .simengine import MODE_FIXED, MODE_SIZE, MetricsReport, SimConfig, run_simulation
from .traffic import FlowTrace, SynthParams, assign_chains, generate_synthetic, load_trace

M_INFINITY = 1 << 20  # the "probability exactly proportional to availability" reference

SUMMARY_HEADER = (
    "dispatcher,m,interval_ms,drop_prob,seed,mean_omega,mean_fct_s,"
    "pcc_violations,ctrl_msgs_sent,ctrl_msgs_dropped,table_updates"
)


@dataclass
class ExperimentSpec:
    """One sweep campaign: topology, workload, axes, replications."""

    preset: str | None = None
    # topology
    vip_count: int = 4
    instances_per_vip: int = 20
    base_capacity: float = 1.0
    capacity_ratio: float = 2.0
    lb_count: int = 2
    # workload (synthetic unless trace_path is set)
    flow_count: int = 10_000
    mean_interarrival: float = 0.005
    mean_duration: float = 10.0
    pareto_shape: float = 2.0
    chain_len_range: tuple[int, int] = (1, 4)
    load_factor: float = 1.1
    mean_rate: float | None = None  # overrides load_factor calibration when set
    trace_path: str | None = None
    trace_unit: str = "units"
    # sweep axes
    dispatchers: list[str] = field(default_factory=lambda: ["awfd:4"])
    intervals: list[float] = field(default_factory=lambda: [0.5])
    drop_probs: list[float] = field(default_factory=lambda: [0.0])
    # run control
    replications: int = 1
    base_seed: int = 42
    metrics_interval: float = 1.0
    mode: str = MODE_FIXED

    def __post_init__(self) -> None:
        if not self.dispatchers or not self.intervals or not self.drop_probs:
            raise ValueError("sweep axes must be non-empty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for d in self.dispatchers:
            parse_dispatcher(d)

    @property
    def vip_capacity(self) -> float:
        per = self.instances_per_vip
        n_hi = per // 2
        n_lo = per - n_hi
        return self.base_capacity * (n_lo + n_hi * self.capacity_ratio)

    def calibrated_mean_rate(self) -> float:
        """Mean flow rate putting offered load at load_factor * capacity.

        Steady-state offered rate per VIP is
        mean_rate * mean_duration * E[chain len] / (interarrival * vip_count);
        solve that for the mean rate.
        """
        if self.mean_rate is not None:
            return self.mean_rate
        lo, hi = self.chain_len_range
        e_len = (lo + hi) / 2
        return (
            self.load_factor
            * self.vip_capacity
            * self.vip_count
            * self.mean_interarrival
            / (self.mean_duration * e_len)
        )


PRESETS: dict[str, dict] = {
    # the six-dispatcher, four-interval comparison grid at full scale;
    # override instances_per_vip/flow_count/mean_interarrival for desk runs
    "paper-synth": {
        "dispatchers": ["ecmp", "wcmp", "lcf", "awfd:2", "awfd:4", "oracle"],
        "intervals": [0.1, 0.25, 0.5, 1.0],
        "instances_per_vip": 100,
        "flow_count": 100_000,
        "mean_interarrival": 0.001,
    },
    # quantization sweep against the effectively-unquantized reference
    "m-sweep": {
        "dispatchers": ["awfd:1", "awfd:2", "awfd:4", "awfd:8", "awfd:16", "awfd:inf"],
        "intervals": [0.5],
    },
    # update-interval sensitivity: the interval-fragile vs -robust pair
    "interval-sweep": {
        "dispatchers": ["lcf", "awfd:4"],
        "intervals": [0.1, 0.25, 0.5, 1.0],
    },
    # control-message loss resilience
    "drop-sweep": {
        "dispatchers": ["awfd:4"],
        "intervals": [0.25],
        "drop_probs": [0.0, 0.1, 0.2, 0.33],
    },
}


def parse_dispatcher(name: str) -> tuple[str, int]:
    """Parse a dispatcher axis entry: 'ecmp' | 'awfd:4' | 'awfd:inf' | ..."""
    if ":" in name:
        base, arg = name.split(":", 1)
        if base != "awfd":
            raise ValueError(f"only awfd takes a parameter, got {name!r}")
        m = M_INFINITY if arg == "inf" else int(arg)
        if m < 0:
            raise ValueError(f"negative m in {name!r}")
        return base, m
    if name not in ("ecmp", "wcmp", "lcf", "oracle", "awfd"):
        raise ValueError(f"unknown dispatcher {name!r}")
    return name, 4 if name == "awfd" else 0


def load_spec(path: str | Path, seed_override: int | None = None) -> ExperimentSpec:
    """Read a JSON config, apply its preset, and let explicit fields override."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown config fields: {sorted(unknown)}")
    merged = dict(raw)
    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"{path}: unknown preset {preset!r}")
        for key, value in PRESETS[preset].items():
            merged.setdefault(key, value)
    if "chain_len_range" in merged:
        merged["chain_len_range"] = tuple(merged["chain_len_range"])
    if seed_override is not None:
        merged["base_seed"] = seed_override
    return ExperimentSpec(**merged)


def make_trace(spec: ExperimentSpec, seed: int) -> FlowTrace:
    """Build (or load) the workload for one run seed."""
    if spec.trace_path is not None:
        trace = load_trace(spec.trace_path, unit=spec.trace_unit)
    else:
        params = SynthParams(
            flow_count=spec.flow_count,
            mean_interarrival=spec.mean_interarrival,
            mean_duration=spec.mean_duration,
            mean_rate=spec.calibrated_mean_rate(),
            pareto_shape=spec.pareto_shape,
            chain_len_range=spec.chain_len_range,
            seed=seed,
        )
        trace = generate_synthetic(params)
    return assign_chains(
        trace, list(range(spec.vip_count)), spec.chain_len_range, seed=seed + 1
    )


@dataclass
class RunResult:
    dispatcher: str
    m: int
    interval: float
    drop_prob: float
    seed: int
    report: MetricsReport

    def summary_row(self) -> str:
        rep = self.report
        return ",".join(
            [
                self.dispatcher,
                str(self.m),
                str(int(round(self.interval * 1000))),
                repr(self.drop_prob),
                str(self.seed),
                repr(rep.mean_omega),
                repr(rep.mean_fct),
                str(rep.pcc_violations),
                str(rep.ctrl_msgs_sent),
                str(rep.ctrl_msgs_dropped),
                str(rep.table_updates),
            ]
        )

    def series_name(self) -> str:
        drop = repr(self.drop_prob).replace(".", "p")
        return (
            f"series_{self.dispatcher}_m{self.m}_"
            f"{int(round(self.interval * 1000))}ms_drop{drop}_seed{self.seed}.csv"
        )


def run_points(spec: ExperimentSpec) -> list[tuple[str, int, float, float, int]]:
    """The sweep cross-product x replications, in deterministic order."""
    points = []
    for name in spec.dispatchers:
        base, m = parse_dispatcher(name)
        for interval in spec.intervals:
            for drop in spec.drop_probs:
                for r in range(spec.replications):
                    points.append((base, m, interval, drop, spec.base_seed + r))
    return points


def run_single(
    spec: ExperimentSpec, dispatcher: str, m: int, interval: float, drop: float, seed: int
) -> RunResult:
    trace = make_trace(spec, seed)
    cfg = SimConfig(
        vip_count=spec.vip_count,
        instances_per_vip=spec.instances_per_vip,
        base_capacity=spec.base_capacity,
        capacity_ratio=spec.capacity_ratio,
        lb_count=spec.lb_count,
        dispatcher=dispatcher,
        m=m,
        polling_interval=interval,
        drop_prob=drop,
        mode=spec.mode,
        seed=seed,
        metrics_interval=spec.metrics_interval,
    )
    report = run_simulation(cfg, trace)
    return RunResult(dispatcher, m, interval, drop, seed, report)


def _run_point(args) -> RunResult:
    spec_dict, point = args
    spec = ExperimentSpec(**spec_dict)
    return run_single(spec, *point)


def run_experiment(
    spec: ExperimentSpec, out_dir: str | Path, jobs: int = 1, quiet: bool = False
) -> list[RunResult]:
    """Run the full sweep and write summary + per-run series CSVs.

    Everything is written to a temporary directory first and moved into
    place on success, so a failed sweep leaves no partial results behind.
    """
    out_dir = Path(out_dir)
    points = run_points(spec)
    spec_dict = dataclasses.asdict(spec)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, [(spec_dict, p) for p in points]))
    else:
        results = [run_single(spec, *p) for p in points]

    tmp = Path(tempfile.mkdtemp(prefix="flowlb-", dir=out_dir.parent if out_dir.parent.exists() else None))
    try:
        with open(tmp / "summary.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for result in results:
                fh.write(result.summary_row() + "\n")
        for result in results:
            result.report.write_series_csv(tmp / result.series_name())
        out_dir.mkdir(parents=True, exist_ok=True)
        for item in sorted(tmp.iterdir()):
            shutil.move(str(item), str(out_dir / item.name))
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    if not quiet:
        for result in results:
            print(
                f"{result.dispatcher} m={result.m} interval={result.interval}s "
                f"drop={result.drop_prob} seed={result.seed}: "
                f"mean_omega={result.report.mean_omega:.4f} "
                f"pcc_violations={result.report.pcc_violations}"
            )
    return results
