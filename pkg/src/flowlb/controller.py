"""Per-VIP controller: capacity estimation, weight computation, lossy broadcast.

Two capacity-knowledge modes exist. The simulator runs in "true-rate" mode,
where the controller reads each instance's ground-truth capacity and load.
"measured" mode models the architecture's telemetry pathway instead: the
instance exposes a (possibly noisy) processing-time sample, the controller
smooths it with an EWMA and inverts it to get capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Instance, InstanceId, LbId, Vip, WeightVector
from .dispatch import quantize_weights
from .loadbalancer import LoadBalancer

MODE_TRUE_RATE = "true-rate"
MODE_MEASURED = "measured"


@dataclass
class PollSample:
    """One instance's reply to a controller probe."""

    instance: InstanceId
    proc_time: float
    load: float

    def __post_init__(self) -> None:
        if self.proc_time <= 0:
            raise ValueError("processing time must be > 0")
        if self.load < 0:
            raise ValueError("load must be >= 0")


@dataclass
class ControllerConfig:
    polling_interval: float = 0.5
    m: int = 4
    ewma_alpha: float = 1.0
    drop_prob: float = 0.0

    def __post_init__(self) -> None:
        if self.polling_interval <= 0:
            raise ValueError("polling interval must be > 0")
        if not 0 < self.ewma_alpha <= 1:
            raise ValueError("ewma alpha must be in (0, 1]")
        if not 0 <= self.drop_prob <= 1:
            raise ValueError("drop probability must be in [0, 1]")


@dataclass
class BroadcastReport:
    """Which load balancers received / lost one weight broadcast."""

    epoch: int
    delivered: set[LbId] = field(default_factory=set)
    dropped: set[LbId] = field(default_factory=set)


def estimate_capacity(proc_time: float) -> float:
    """Capacity from smoothed processing time: C = 1 / t."""
    if proc_time <= 0:
        raise ValueError("processing time must be > 0")
    return 1.0 / proc_time


def estimate_available(capacity: float, load: float) -> float:
    """Available capacity, clamped at zero for overloaded instances."""
    return max(capacity - load, 0.0)


def ewma_update(prev: float, sample: float, alpha: float) -> float:
    """One EWMA step; the first sample should be adopted directly (prev=sample)."""
    return alpha * sample + (1.0 - alpha) * prev


class VipController:
    """The distributed per-VIP control loop: poll, quantize, broadcast."""

    def __init__(self, vip: Vip, cfg: ControllerConfig, mode: str = MODE_TRUE_RATE):
        self.vip = vip
        self.cfg = cfg
        self.mode = mode
        self.epoch = 0
        self._smoothed: dict[InstanceId, float] = {}

    def _sample(self, inst: Instance) -> PollSample:
        return PollSample(instance=inst.id, proc_time=inst.proc_time, load=inst.load)

    def estimate_all(self) -> dict[InstanceId, float]:
        """Read instance state and produce the availability map."""
        avail: dict[InstanceId, float] = {}
        for inst in self.vip.instances:
            if self.mode == MODE_TRUE_RATE:
                capacity = inst.capacity
            else:
                sample = self._sample(inst)
                prev = self._smoothed.get(inst.id, sample.proc_time)
                smoothed = ewma_update(prev, sample.proc_time, self.cfg.ewma_alpha)
                self._smoothed[inst.id] = smoothed
                capacity = estimate_capacity(smoothed)
            avail[inst.id] = estimate_available(capacity, inst.load)
        return avail

    def bootstrap(self, lbs: list[LoadBalancer]) -> WeightVector:
        """Reliable initial table install (a config push, not a lossy broadcast).

        Without this an LB that loses the first broadcast would have no
        tables at all; real deployments ship initial weights with the VIP
        configuration.
        """
        avail = self.estimate_all()
        weights = quantize_weights(avail, self.cfg.m, vip=self.vip.id, epoch=self.epoch)
        for lb in lbs:
            lb.apply_weight_update(weights)
        return weights

    def poll_and_broadcast(
        self, lbs: list[LoadBalancer], rng: np.random.Generator
    ) -> tuple[BroadcastReport, WeightVector, int]:
        """One control cycle; returns (report, weights, table update count).

        Each LB independently loses the update with probability drop_prob and
        keeps operating on its stale weights.
        """
        avail = self.estimate_all()
        self.epoch += 1
        weights = quantize_weights(avail, self.cfg.m, vip=self.vip.id, epoch=self.epoch)
        report = BroadcastReport(epoch=self.epoch)
        table_updates = 0
        for lb in lbs:
            if self.cfg.drop_prob > 0 and rng.random() < self.cfg.drop_prob:
                report.dropped.add(lb.id)
            else:
                table_updates += lb.apply_weight_update(weights).total
                report.delivered.add(lb.id)
        return report, weights, table_updates


def poll_and_broadcast(
    vip: Vip,
    lbs: list[LoadBalancer],
    cfg: ControllerConfig,
    rng: np.random.Generator,
    epoch: int = 1,
) -> BroadcastReport:
    """Single stateless control cycle in true-rate mode (convenience wrapper)."""
    controller = VipController(vip, cfg, mode=MODE_TRUE_RATE)
    controller.epoch = epoch - 1
    report, _, _ = controller.poll_and_broadcast(lbs, rng)
    return report


def control_traffic_rate(
    n: int, l: int, msg_bytes: int = 64, updates_per_sec: float = 4
) -> float:
    """Aggregate control-plane traffic in bytes/s for n instances and l LBs."""
    if n < 0 or l < 0:
        raise ValueError("counts must be >= 0")
    return msg_bytes * updates_per_sec * n * l
