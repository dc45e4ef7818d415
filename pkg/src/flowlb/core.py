"""Shared domain types: service instances, VIPs, flows, and weight vectors.

Rates and capacities are unit-agnostic doubles ("units/s"); traces declare
their own unit string and nothing in the library ever converts units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

InstanceId = int
VipId = int
LbId = int
FlowKey = int


@dataclass
class Instance:
    """One service instance (DIP) behind a VIP.

    ``available`` is clamped at zero when the instance is overloaded;
    a negative value would make weight quantization misbehave and weight 0
    is the right dispatch behavior for an overwhelmed instance anyway.
    """

    id: InstanceId
    capacity: float
    load: float = 0.0
    proc_time: float = 0.0  # smoothed processing time; defaults to 1/capacity
    active_flows: set[FlowKey] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ValueError(f"instance {self.id}: capacity must be > 0")
        if self.load < 0:
            raise ValueError(f"instance {self.id}: load must be >= 0")
        if self.proc_time <= 0:
            self.proc_time = 1.0 / self.capacity

    @property
    def available(self) -> float:
        return max(self.capacity - self.load, 0.0)

    @property
    def utilization(self) -> float:
        return self.load / self.capacity


@dataclass
class Vip:
    """A service: a VIP fronting an ordered pool of instances."""

    id: VipId
    instances: list[Instance]

    def __post_init__(self) -> None:
        if not self.instances:
            raise ValueError(f"vip {self.id}: needs at least one instance")

    @property
    def n(self) -> int:
        return len(self.instances)

    @property
    def total_capacity(self) -> float:
        return sum(inst.capacity for inst in self.instances)


@dataclass
class Flow:
    """One connection: demand rate, timing, service chain, and assignments.

    ``assignments`` is write-once per VIP; the connection table is what
    enforces this during simulation, this type just records the outcome.
    """

    key: FlowKey
    rate: float
    start: float
    duration: float
    chain: list[VipId] = field(default_factory=list)
    assignments: dict[VipId, InstanceId] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError("flow rate must be > 0")
        if self.duration <= 0:
            raise ValueError("flow duration must be > 0")

    @property
    def size(self) -> float:
        """Nominal size in units (rate * duration)."""
        return self.rate * self.duration


@dataclass
class WeightVector:
    """Per-VIP quantized weights: one integer in [0, m] per instance."""

    vip: VipId
    weights: dict[InstanceId, int]
    m: int
    epoch: int = 0

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError("max weight m must be >= 0")
        for inst, w in self.weights.items():
            if not 0 <= w <= self.m:
                raise ValueError(f"weight {w} for instance {inst} outside [0, {self.m}]")

    @property
    def w_sum(self) -> int:
        return sum(self.weights.values())
