"""Workload synthesis and flow-trace ingestion.

Synthetic workloads follow the heavy-tail profile used throughout the
experiments: Poisson arrivals (exponential inter-arrival gaps), exponential
durations, and Pareto-distributed demand rates whose scale is derived from
the requested mean. External traces are plain CSV with one flow per row.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Flow, VipId
from .hashing import mix64

log = logging.getLogger(__name__)

TRACE_HEADER = ["flow_id", "start_s", "end_s", "size_units"]
_LOAD_KEY_SALT = 0x7C0FFEE5EED


@dataclass
class FlowTrace:
    """Flows sorted by start time, plus the unit the rates are expressed in."""

    flows: list[Flow]
    unit: str = "units"

    def __post_init__(self) -> None:
        for a, b in zip(self.flows, self.flows[1:]):
            if b.start < a.start:
                raise ValueError("trace not sorted by start time")

    def __len__(self) -> int:
        return len(self.flows)


@dataclass
class SynthParams:
    flow_count: int = 100_000
    mean_interarrival: float = 0.001
    mean_duration: float = 10.0
    mean_rate: float = 2.0
    pareto_shape: float = 2.0
    chain_len_range: tuple[int, int] = (1, 4)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.flow_count < 0:
            raise ValueError("flow count must be >= 0")
        if self.pareto_shape <= 1:
            raise ValueError("infinite mean: Pareto shape must be > 1")
        if min(self.mean_interarrival, self.mean_duration, self.mean_rate) <= 0:
            raise ValueError("all means must be > 0")


def generate_synthetic(p: SynthParams) -> FlowTrace:
    """Synthesize a heavy-tail trace; deterministic in the seed.

    Rate scale x_m = mean * (alpha - 1) / alpha so the Pareto mean matches
    the requested mean rate.
    """
    rng = np.random.default_rng(p.seed)
    n = p.flow_count
    starts = np.cumsum(rng.exponential(p.mean_interarrival, n))
    durations = rng.exponential(p.mean_duration, n)
    x_m = p.mean_rate * (p.pareto_shape - 1) / p.pareto_shape
    rates = x_m * (1.0 + rng.pareto(p.pareto_shape, n))
    keys = rng.integers(0, 1 << 63, n, dtype=np.int64)
    durations = np.maximum(durations, 1e-12)
    flows = [
        Flow(key=int(keys[i]), rate=float(rates[i]), start=float(starts[i]),
             duration=float(durations[i]))
        for i in range(n)
    ]
    return FlowTrace(flows=flows)


def assign_chains(
    trace: FlowTrace,
    vips: Sequence[VipId],
    len_range: tuple[int, int] = (1, 4),
    seed: int = 0,
) -> FlowTrace:
    """Give every flow a service chain of distinct VIPs; deterministic in seed."""
    lo, hi = len_range
    if not 1 <= lo <= hi:
        raise ValueError("invalid chain length range")
    if len(vips) < hi:
        raise ValueError(f"need at least {hi} VIPs, got {len(vips)}")
    rng = np.random.default_rng(seed)
    vip_arr = np.asarray(vips)
    for flow in trace.flows:
        length = int(rng.integers(lo, hi + 1))
        chain = rng.choice(vip_arr, size=length, replace=False)
        flow.chain = [int(v) for v in chain]
    return trace


def save_trace(trace: FlowTrace, path: str | Path) -> None:
    """Write the trace CSV (flow_id,start_s,end_s,size_units)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for i, flow in enumerate(trace.flows):
            writer.writerow(
                [i, repr(flow.start), repr(flow.start + flow.duration), repr(flow.size)]
            )


def load_trace(path: str | Path, unit: str = "units") -> FlowTrace:
    """Parse a trace CSV; rows with end <= start are dropped with a diagnostic.

    Malformed rows raise with their line number. Output is sorted by start
    time; rates are derived as size / duration.
    """
    flows: list[Flow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return FlowTrace(flows=[], unit=unit)
        if [h.strip() for h in header] != TRACE_HEADER:
            raise ValueError(f"{path}: line 1: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            try:
                flow_id = int(row[0])
                start = float(row[1])
                end = float(row[2])
                size = float(row[3])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if end <= start:
                log.warning("%s: line %d: rejected flow %d (end <= start)", path, lineno, flow_id)
                continue
            if size <= 0:
                log.warning("%s: line %d: rejected flow %d (non-positive size)", path, lineno, flow_id)
                continue
            duration = end - start
            flows.append(
                Flow(
                    key=mix64(flow_id, _LOAD_KEY_SALT) >> 1,
                    rate=size / duration,
                    start=start,
                    duration=duration,
                )
            )
    flows.sort(key=lambda f: f.start)
    return FlowTrace(flows=flows, unit=unit)
