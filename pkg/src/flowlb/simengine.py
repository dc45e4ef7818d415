"""Deterministic discrete-event flow-level simulator.

Events are processed in non-decreasing time with a fixed tie order
(departures, then controller polls, then arrivals, then metrics ticks) so
that freed capacity and fresh weights are visible to simultaneous arrivals.
Between events every rate is constant; delivered bytes and throughput are
integrated exactly over each inter-event segment. Identical (config, trace)
pairs produce bit-identical reports.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, VipController
from .core import Flow, Instance, InstanceId, Vip, VipId
from .dispatch import STAGE2_FAITHFUL, wcmp_weights
from .hashing import LB_PICK_SEED, VIP_MIX_SEED, mix64
from .loadbalancer import LoadBalancer
from .sharing import solve_chain_rates
from .traffic import FlowTrace

DISPATCHERS = ("ecmp", "wcmp", "lcf", "awfd", "oracle")
MODE_FIXED = "fixed-duration"
MODE_SIZE = "size-conserving"

# event tie order at equal timestamps
_DEPARTURE, _POLL, _ARRIVAL, _TICK = 0, 1, 2, 3


@dataclass
class SimConfig:
    vip_count: int = 4
    instances_per_vip: int = 20
    base_capacity: float = 1.0
    capacity_ratio: float = 2.0
    lb_count: int = 2
    dispatcher: str = "awfd"
    m: int = 4
    polling_interval: float = 0.5
    drop_prob: float = 0.0
    mode: str = MODE_FIXED
    seed: int = 0
    metrics_interval: float = 1.0
    stage2: str = STAGE2_FAITHFUL

    def __post_init__(self) -> None:
        if min(self.vip_count, self.instances_per_vip, self.lb_count) < 1:
            raise ValueError("all counts must be >= 1")
        if self.polling_interval <= 0:
            raise ValueError("polling interval must be > 0")
        if self.metrics_interval <= 0:
            raise ValueError("metrics interval must be > 0")
        if self.dispatcher not in DISPATCHERS:
            raise ValueError(f"unknown dispatcher {self.dispatcher!r}")
        if self.mode not in (MODE_FIXED, MODE_SIZE):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class MetricsReport:
    """Time series plus end-of-run aggregates for one simulation."""

    series: list[tuple[float, int, float, float]] = field(default_factory=list)
    mean_omega: float = 0.0
    mean_omega_mid80: float = 0.0
    per_vip_mean_omega: dict[VipId, float] = field(default_factory=dict)
    per_vip_capacity: dict[VipId, float] = field(default_factory=dict)
    total_capacity: float = 0.0
    mean_fct: float = 0.0
    pcc_violations: int = 0
    ctrl_msgs_sent: int = 0
    ctrl_msgs_delivered: int = 0
    ctrl_msgs_dropped: int = 0
    table_updates: int = 0
    end_time: float = 0.0
    flows_completed: int = 0

    def write_series_csv(self, path: str | Path) -> None:
        """Series CSV: time_s,vip,throughput,omega (vip -1 is the overall row)."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("time_s,vip,throughput,omega\n")
            for t, vip, tput, omega in self.series:
                fh.write(f"{t!r},{vip},{tput!r},{omega!r}\n")


def utilization(report: MetricsReport, vip: VipId) -> float:
    """Time-averaged delivered throughput over aggregate capacity for one VIP."""
    cap = report.per_vip_capacity.get(vip, 0.0)
    if cap <= 0:
        raise ValueError(f"zero capacity for vip {vip}")
    return report.per_vip_mean_omega[vip]


def build_vips(cfg: SimConfig) -> list[Vip]:
    """Build the topology: instance ids are global, capacity types alternate.

    Even positions get the base capacity, odd positions base * ratio (the
    two-type pool with a fixed capacity ratio).
    """
    vips = []
    for v in range(cfg.vip_count):
        instances = []
        for i in range(cfg.instances_per_vip):
            cap = cfg.base_capacity * (cfg.capacity_ratio if i % 2 else 1.0)
            instances.append(Instance(id=v * cfg.instances_per_vip + i, capacity=cap))
        vips.append(Vip(id=v, instances=instances))
    return vips


class _Engine:
    def __init__(self, cfg: SimConfig, trace: FlowTrace):
        self.cfg = cfg
        self.trace = trace
        self.vips = build_vips(cfg)
        self.n_inst = cfg.vip_count * cfg.instances_per_vip
        self.per = cfg.instances_per_vip
        self.caps = np.array(
            [inst.capacity for vip in self.vips for inst in vip.instances]
        )
        self.vip_caps = self.caps.reshape(cfg.vip_count, self.per).sum(axis=1)
        self.instances: list[Instance] = [
            inst for vip in self.vips for inst in vip.instances
        ]
        self.lbs = [LoadBalancer(i, stage2=cfg.stage2) for i in range(cfg.lb_count)]
        self.drop_rng = np.random.default_rng([cfg.seed, 0xD209])

        for flow in trace.flows:
            if not flow.chain:
                raise ValueError(f"flow {flow.key}: empty service chain")
            for vip in flow.chain:
                if not 0 <= vip < cfg.vip_count:
                    raise ValueError(f"flow {flow.key}: unknown vip {vip}")

        n = len(trace.flows)
        self.n_flows = n
        self.r = np.array([f.rate for f in trace.flows])
        self.sizes = np.array([f.size for f in trace.flows])
        self.starts = np.array([f.start for f in trace.flows])
        self.delivered = np.zeros(n)
        self.active = np.zeros(n, dtype=bool)
        self.hops = np.full((n, 4), -1, dtype=np.int32)
        self.nhops = np.array([len(f.chain) for f in trace.flows], dtype=np.int64)
        self.fct = np.full(n, np.nan)

        self.levels = np.full(self.n_inst, np.inf)
        self.inst_load = np.zeros(self.n_inst)
        self.vip_tput = np.zeros(cfg.vip_count)
        self.cur_act: np.ndarray | None = None
        self.cur_rates: np.ndarray | None = None

        self.now = 0.0
        self.omega_int = np.zeros(cfg.vip_count)
        self.total_int = 0.0
        self.segments: list[tuple[float, float, float]] = []
        self.last_departure = 0.0
        self.active_count = 0
        self.remaining_arrivals = n
        self.seq = 0
        self.next_completion = np.inf
        self.report = MetricsReport()

        ctl_cfg = ControllerConfig(
            polling_interval=cfg.polling_interval, m=cfg.m, drop_prob=cfg.drop_prob
        )
        self.controllers = [VipController(vip, ctl_cfg) for vip in self.vips]
        if cfg.dispatcher == "awfd":
            for controller in self.controllers:
                controller.bootstrap(self.lbs)
        self.lcf_target: dict[VipId, InstanceId] = {}
        self._wcmp: dict[VipId, tuple[np.ndarray, list[InstanceId], int]] = {}
        if cfg.dispatcher == "wcmp":
            for vip in self.vips:
                weights = wcmp_weights({i.id: i.capacity for i in vip.instances})
                ids = sorted(weights)
                cum = np.cumsum([weights[i] for i in ids])
                self._wcmp[vip.id] = (cum, ids, int(cum[-1]))

        self.heap: list[tuple[float, int, int, int]] = []
        for slot, flow in enumerate(trace.flows):
            self.heap.append((flow.start, _ARRIVAL, slot, slot))
        heapq.heapify(self.heap)
        self._push(0.0, _POLL, -1)
        self._push(0.0, _TICK, -1)

    def _push(self, t: float, kind: int, data: int) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (t, kind, self.n_flows + self.seq, data))

    # -- time advance -----------------------------------------------------

    def _advance(self, t: float) -> None:
        dt = t - self.now
        if dt > 0:
            if self.cur_act is not None and self.cur_act.size:
                self.delivered[self.cur_act] += self.cur_rates * dt
                self.omega_int += self.vip_tput * dt
                total = float(self.vip_tput.sum())
                self.total_int += total * dt
                self.segments.append((self.now, t, total))
            else:
                self.segments.append((self.now, t, 0.0))
            self.now = t

    def _resolve(self) -> None:
        """Recompute all flow rates and instance loads after a churn event."""
        act = np.flatnonzero(self.active)
        self.cur_act = act
        if act.size == 0:
            self.cur_rates = np.zeros(0)
            self.inst_load[:] = 0.0
            self.vip_tput[:] = 0.0
            return
        hops2d = self.hops[act]
        mask = hops2d >= 0
        hop_inst = hops2d[mask].astype(np.int64)
        hop_flow = np.repeat(np.arange(act.size), self.nhops[act])
        rates, _ = solve_chain_rates(
            self.caps, hop_flow, hop_inst, self.r[act], levels=self.levels
        )
        self.cur_rates = rates
        self.inst_load = np.bincount(
            hop_inst, weights=rates[hop_flow], minlength=self.n_inst
        )
        self.vip_tput = self.inst_load.reshape(self.cfg.vip_count, self.per).sum(axis=1)
        if self.cfg.mode == MODE_SIZE:
            self._schedule_completion(act, rates)

    def _schedule_completion(self, act: np.ndarray, rates: np.ndarray) -> None:
        remaining = self.sizes[act] - self.delivered[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_fin = np.where(rates > 1e-300, self.now + remaining / rates, np.inf)
        t_fin = np.where(remaining <= 0, self.now, t_fin)
        idx = int(np.argmin(t_fin))
        t_next = float(t_fin[idx])
        if np.isfinite(t_next) and t_next < self.next_completion - 1e-12:
            self.next_completion = t_next
            self._push(max(t_next, self.now), _DEPARTURE, int(act[idx]))

    # -- dispatch ---------------------------------------------------------

    def _lb_for(self, flow: Flow) -> LoadBalancer:
        return self.lbs[mix64(flow.key, LB_PICK_SEED) % self.cfg.lb_count]

    def _chooser(self, vip: Vip):
        name = self.cfg.dispatcher
        if name == "ecmp":
            return lambda k: vip.instances[k % vip.n].id
        if name == "wcmp":
            cum, ids, total = self._wcmp[vip.id]
            return lambda k: ids[int(np.searchsorted(cum, k % total, side="right"))]
        if name == "lcf":
            return lambda k: self.lcf_target[vip.id]
        if name == "oracle":
            lo = vip.id * self.per
            def pick(_k, lo=lo):
                avail = np.maximum(
                    self.caps[lo : lo + self.per] - self.inst_load[lo : lo + self.per],
                    0.0,
                )
                return lo + int(np.argmax(avail))
            return pick
        return None  # awfd goes through the LB tables

    def _arrival(self, slot: int) -> None:
        flow = self.trace.flows[slot]
        for pos, vip_id in enumerate(flow.chain):
            vip = self.vips[vip_id]
            lb = self._lb_for(flow)
            key_v = mix64(flow.key, VIP_MIX_SEED + vip_id)
            inst = lb.handle_flow(
                flow, vip_id, dispatch_key=key_v, new_flow_dispatch=self._chooser(vip)
            )
            flow.assignments[vip_id] = inst
            self.hops[slot, pos] = inst
            self.instances[inst].active_flows.add(flow.key)
        self.active[slot] = True
        self.active_count += 1
        self.remaining_arrivals -= 1
        if self.cfg.mode == MODE_FIXED:
            self._push(flow.start + flow.duration, _DEPARTURE, slot)
        self._resolve()

    def _departure(self, slot: int) -> None:
        if not self.active[slot]:
            return  # stale completion candidate
        flow = self.trace.flows[slot]
        if self.cfg.mode == MODE_SIZE:
            self.next_completion = np.inf
            if self.delivered[slot] < self.sizes[slot] * (1 - 1e-9):
                self._resolve()  # rates changed since this candidate was queued
                return
        # PCC check: re-present the flow; the connection table must return the
        # original assignment at every hop, regardless of weight churn.
        for vip_id in flow.chain:
            lb = self._lb_for(flow)
            key_v = mix64(flow.key, VIP_MIX_SEED + vip_id)
            seen = lb.handle_flow(
                flow,
                vip_id,
                dispatch_key=key_v,
                new_flow_dispatch=self._chooser(self.vips[vip_id]),
            )
            if seen != flow.assignments[vip_id]:
                self.report.pcc_violations += 1
            lb.flow_done(flow, vip_id)
            self.instances[flow.assignments[vip_id]].active_flows.discard(flow.key)
        self.active[slot] = False
        self.active_count -= 1
        self.fct[slot] = self.now - flow.start
        self.last_departure = self.now
        self.report.flows_completed += 1
        self._resolve()

    # -- control plane ----------------------------------------------------

    def _sync_instance_loads(self) -> None:
        for i, inst in enumerate(self.instances):
            inst.load = float(self.inst_load[i])

    def _poll(self) -> None:
        cfg = self.cfg
        if cfg.dispatcher == "awfd":
            self._sync_instance_loads()
            for controller in self.controllers:
                report, _, updates = controller.poll_and_broadcast(
                    self.lbs, self.drop_rng
                )
                self.report.ctrl_msgs_sent += cfg.lb_count
                self.report.ctrl_msgs_delivered += len(report.delivered)
                self.report.ctrl_msgs_dropped += len(report.dropped)
                self.report.table_updates += updates
        elif cfg.dispatcher == "lcf":
            for vip in self.vips:
                lo = vip.id * self.per
                avail = np.maximum(
                    self.caps[lo : lo + self.per] - self.inst_load[lo : lo + self.per],
                    0.0,
                )
                self.lcf_target[vip.id] = lo + int(np.argmax(avail))
                self.report.ctrl_msgs_sent += 1
                self.report.ctrl_msgs_delivered += 1
        if self.remaining_arrivals > 0 or self.active_count > 0:
            self._push(self.now + cfg.polling_interval, _POLL, -1)

    def _tick(self) -> None:
        total_tput = float(self.vip_tput.sum())
        total_cap = float(self.vip_caps.sum())
        for v in range(self.cfg.vip_count):
            tput = float(self.vip_tput[v])
            self.report.series.append((self.now, v, tput, tput / self.vip_caps[v]))
        self.report.series.append((self.now, -1, total_tput, total_tput / total_cap))
        if self.remaining_arrivals > 0 or self.active_count > 0:
            self._push(self.now + self.cfg.metrics_interval, _TICK, -1)

    # -- main loop --------------------------------------------------------

    def run(self) -> MetricsReport:
        while self.heap:
            t, kind, _, data = heapq.heappop(self.heap)
            self._advance(t)
            if kind == _DEPARTURE:
                self._departure(data)
            elif kind == _POLL:
                self._poll()
            elif kind == _ARRIVAL:
                self._arrival(data)
            else:
                self._tick()
        return self._finalize()

    def _finalize(self) -> MetricsReport:
        rep = self.report
        span = self.last_departure
        total_cap = float(self.vip_caps.sum())
        rep.total_capacity = total_cap
        rep.per_vip_capacity = {
            v: float(self.vip_caps[v]) for v in range(self.cfg.vip_count)
        }
        rep.end_time = span
        if span > 0:
            rep.mean_omega = self.total_int / (total_cap * span)
            rep.per_vip_mean_omega = {
                v: float(self.omega_int[v]) / (float(self.vip_caps[v]) * span)
                for v in range(self.cfg.vip_count)
            }
            rep.mean_omega_mid80 = self._mid80(span, total_cap)
        else:
            rep.per_vip_mean_omega = {v: 0.0 for v in range(self.cfg.vip_count)}
        done = self.fct[~np.isnan(self.fct)]
        rep.mean_fct = float(done.mean()) if done.size else 0.0
        return rep

    def _mid80(self, span: float, total_cap: float) -> float:
        """Time-averaged overall utilization with warm-up/drain excluded."""
        lo, hi = 0.1 * span, 0.9 * span
        integral = 0.0
        for t0, t1, tput in self.segments:
            a, b = max(t0, lo), min(t1, hi)
            if b > a:
                integral += tput * (b - a)
        width = hi - lo
        return integral / (total_cap * width) if width > 0 else 0.0


def run_simulation(cfg: SimConfig, trace: FlowTrace) -> MetricsReport:
    """Run one deterministic flow-level simulation and return its report."""
    starts = [f.start for f in trace.flows]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise ValueError("trace not sorted by arrival time")
    return _Engine(cfg, trace).run()
