"""Per-load-balancer state: connection table, AWFD tables, weight updates.

The connection table is what enforces per-connection consistency: an entry,
once inserted, is never rewritten while the flow lives, so every later
dispatch of the same (flow, vip) pair hits the table and returns the original
instance no matter how the weight tables have churned in between.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import Flow, FlowKey, InstanceId, LbId, VipId, WeightVector
from .dispatch import AwfdTables, awfd_dispatch, build_awfd_tables, STAGE2_FAITHFUL


class ConnectionTable:
    """(flow key, vip) -> instance; insert-once, removed at flow completion."""

    def __init__(self) -> None:
        self._entries: dict[tuple[FlowKey, VipId], InstanceId] = {}

    def lookup(self, key: FlowKey, vip: VipId) -> Optional[InstanceId]:
        return self._entries.get((key, vip))

    def insert(self, key: FlowKey, vip: VipId, inst: InstanceId) -> None:
        existing = self._entries.get((key, vip))
        if existing is not None and existing != inst:
            raise ValueError(
                f"PCC violation: ({key}, {vip}) already mapped to {existing}"
            )
        self._entries[(key, vip)] = inst

    def remove(self, key: FlowKey, vip: VipId) -> None:
        self._entries.pop((key, vip), None)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class UpdateStats:
    """Accounting for one compact table update."""

    range_writes: int = 0
    group_removals: int = 0
    group_additions: int = 0

    @property
    def total(self) -> int:
        return self.range_writes + self.group_removals + self.group_additions


def compact_diff(old: WeightVector, new: WeightVector) -> UpdateStats:
    """Count the table writes needed to move from ``old`` tables to ``new``.

    Stage-I cost is one write per class whose residue interval changed
    (at most m). Stage-II cost is one removal per changed instance leaving a
    k >= 1 group and one addition per changed instance entering one; a move
    into or out of B_0 therefore costs a single group operation.
    """
    if old.vip != new.vip:
        raise ValueError("weight vectors are for different VIPs")
    if set(old.weights) != set(new.weights):
        raise ValueError("mismatched instance sets")
    old_tables = build_awfd_tables(old)
    new_tables = build_awfd_tables(new)
    old_ranges = {k: (lo, hi) for k, lo, hi in old_tables.ranges}
    new_ranges = {k: (lo, hi) for k, lo, hi in new_tables.ranges}
    range_writes = sum(
        1
        for k in set(old_ranges) | set(new_ranges)
        if old_ranges.get(k) != new_ranges.get(k)
    )
    removals = additions = 0
    for inst, w_old in old.weights.items():
        w_new = new.weights[inst]
        if w_old == w_new:
            continue
        if w_old >= 1:
            removals += 1
        if w_new >= 1:
            additions += 1
    return UpdateStats(range_writes, removals, additions)


class LoadBalancer:
    """One edge device: a connection table plus per-VIP AWFD tables."""

    def __init__(self, id: LbId, stage2: str = STAGE2_FAITHFUL) -> None:
        self.id = id
        self.conn_table = ConnectionTable()
        self.awfd: dict[VipId, AwfdTables] = {}
        self.weights: dict[VipId, WeightVector] = {}
        self.weight_epoch: dict[VipId, int] = {}
        self.stage2 = stage2

    def handle_flow(
        self,
        flow: Flow,
        vip: VipId,
        dispatch_key: Optional[FlowKey] = None,
        new_flow_dispatch: Optional[Callable[[FlowKey], InstanceId]] = None,
    ) -> InstanceId:
        """Dispatch a flow for one VIP hop.

        Connection-table hits return the stored instance; misses dispatch via
        the current AWFD tables (or ``new_flow_dispatch`` for baseline
        dispatchers) and insert the mapping. ``dispatch_key`` lets the caller
        pass a per-VIP remix of the flow key; the connection table is always
        keyed on the raw flow key.
        """
        hit = self.conn_table.lookup(flow.key, vip)
        if hit is not None:
            return hit
        key = flow.key if dispatch_key is None else dispatch_key
        if new_flow_dispatch is not None:
            inst = new_flow_dispatch(key)
        else:
            tables = self.awfd.get(vip)
            if tables is None:
                raise KeyError(f"no AWFD tables for vip {vip}")
            inst = awfd_dispatch(tables, key, stage2=self.stage2)
        self.conn_table.insert(flow.key, vip, inst)
        return inst

    def flow_done(self, flow: Flow, vip: VipId) -> None:
        self.conn_table.remove(flow.key, vip)

    def apply_weight_update(self, weights: WeightVector) -> UpdateStats:
        """Atomically replace one VIP's tables; stale epochs are no-ops."""
        vip = weights.vip
        if vip in self.weight_epoch and weights.epoch <= self.weight_epoch[vip]:
            return UpdateStats()
        old = self.weights.get(vip)
        self.awfd[vip] = build_awfd_tables(weights)
        self.weights[vip] = weights
        self.weight_epoch[vip] = weights.epoch
        if old is None:
            return UpdateStats()
        return compact_diff(old, weights)
