"""Flow-level L4 load-balancing laboratory.

Weighted availability-aware flow dispatching with per-connection
consistency, baseline dispatchers, and a deterministic discrete-event
simulator for comparing them on heavy-tail workloads.
"""

from .core import Flow, Instance, Vip, WeightVector
from .dispatch import (
    awfd_dispatch,
    build_awfd_tables,
    dispatch_probability,
    ecmp_dispatch,
    lcf_dispatch,
    oracle_dispatch,
    quantize_weights,
    wcmp_dispatch,
)
from .loadbalancer import ConnectionTable, LoadBalancer, UpdateStats, compact_diff
from .simengine import MetricsReport, SimConfig, run_simulation, utilization
from .traffic import FlowTrace, SynthParams, assign_chains, generate_synthetic, load_trace

__all__ = [
    "Flow",
    "Instance",
    "Vip",
    "WeightVector",
    "quantize_weights",
    "build_awfd_tables",
    "awfd_dispatch",
    "dispatch_probability",
    "ecmp_dispatch",
    "wcmp_dispatch",
    "lcf_dispatch",
    "oracle_dispatch",
    "ConnectionTable",
    "LoadBalancer",
    "UpdateStats",
    "compact_diff",
    "SimConfig",
    "MetricsReport",
    "run_simulation",
    "utilization",
    "FlowTrace",
    "SynthParams",
    "generate_synthetic",
    "assign_chains",
    "load_trace",
]

__version__ = "0.1.0"
