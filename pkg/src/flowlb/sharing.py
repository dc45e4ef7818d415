"""Max-min fair capacity sharing, per instance and across service chains.

A congested instance splits its capacity among its flows max-min fairly:
every flow gets min(demand, water level), where the level is chosen so the
shares exactly exhaust the capacity. Chains couple instances: a flow's rate
is the minimum share along its chain, and a flow throttled at one hop
presents a reduced demand at its other hops. The coupled system is resolved
by fixpoint iteration on the per-instance water levels, with the demand a
flow presents at a hop capped by the levels of its *other* hops (so a
single-hop flow always presents its full nominal rate).

The hot path is a flat-array kernel compiled with numba; a pure-Python twin
with identical semantics backs the tests and any numba-free environment.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .core import Flow, FlowKey, Instance, InstanceId, VipId

MAX_ITER = 64
TOL = 1e-9
_INF = math.inf

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def max_min_shares(capacity: float, demands: Mapping[FlowKey, float]) -> dict[FlowKey, float]:
    """Max-min fair split of one capacity among demands.

    Uncongested instances satisfy every demand; otherwise each flow gets
    min(demand, level) with the water level exhausting the capacity.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    total = sum(demands.values())
    if total <= capacity:
        return dict(demands)
    shares: dict[FlowKey, float] = {}
    items = sorted(demands.items(), key=lambda kv: kv[1])
    remaining = capacity
    n = len(items)
    for idx, (key, demand) in enumerate(items):
        fair = remaining / (n - idx)
        if demand <= fair:
            shares[key] = demand
            remaining -= demand
        else:
            for key2, _ in items[idx:]:
                shares[key2] = fair
            break
    return shares


def recompute_shares(
    instance: Instance, demands: Mapping[FlowKey, float]
) -> dict[FlowKey, float]:
    """Max-min fair allocation of one instance's capacity among flow demands."""
    return max_min_shares(instance.capacity, demands)


def water_level(capacity: float, demands: Sequence[float]) -> float:
    """Water level L with sum(min(d, L)) = capacity, or inf if uncongested."""
    if sum(demands) <= capacity:
        return _INF
    remaining = capacity
    ordered = sorted(demands)
    n = len(ordered)
    for idx, d in enumerate(ordered):
        fair = remaining / (n - idx)
        if d <= fair:
            remaining -= d
        else:
            return fair
    return _INF


def flow_effective_rate(
    flow: Flow, instance_shares: Mapping[InstanceId, Mapping[FlowKey, float]]
) -> float:
    """A chained flow's delivered rate: its minimum share along the chain."""
    rate = _INF
    for vip in flow.chain:
        inst = flow.assignments.get(vip)
        if inst is None:
            raise ValueError(f"flow {flow.key} has no assignment for vip {vip}")
        rate = min(rate, instance_shares[inst][flow.key])
    return rate


@njit(cache=True)
def _solve_kernel(cap, hop_flow, hop_inst, flow_r, levels, max_iter, tol):  # pragma: no cover
    """Chaotic relaxation of the coupled water levels.

    ``hop_flow`` must be non-decreasing (a flow's hops contiguous). Only
    flows touched by a level change are re-examined and only instances with
    a changed demand are re-solved, so late iterations cost only the size of
    the still-moving front.
    """
    n_inst = cap.shape[0]
    n_hops = hop_flow.shape[0]
    n_flows = flow_r.shape[0]
    inf = np.inf

    # flow -> hop range (hop_flow is sorted by construction)
    f_start = np.zeros(n_flows + 1, dtype=np.int64)
    for h in range(n_hops):
        f_start[hop_flow[h] + 1] += 1
    for f in range(n_flows):
        f_start[f + 1] += f_start[f]

    # instance -> hop list (counting sort); membership is fixed per call
    start = np.zeros(n_inst + 1, dtype=np.int64)
    for h in range(n_hops):
        start[hop_inst[h] + 1] += 1
    for i in range(n_inst):
        start[i + 1] += start[i]
    order = np.empty(n_hops, dtype=np.int64)
    fill = start[:-1].copy()
    for h in range(n_hops):
        i = hop_inst[h]
        order[fill[i]] = h
        fill[i] += 1

    d = np.full(n_hops, -1.0, dtype=np.float64)
    flow_dirty = np.ones(n_flows, dtype=np.bool_)
    inst_dirty = np.zeros(n_inst, dtype=np.bool_)
    iters = 0
    for _ in range(max_iter):
        iters += 1
        # demand a flow presents at a hop: nominal rate capped by the
        # smallest level among its *other* hops
        for f in range(n_flows):
            if not flow_dirty[f]:
                continue
            flow_dirty[f] = False
            s = f_start[f]
            e = f_start[f + 1]
            m1 = inf
            m2 = inf
            cnt = 0
            for p in range(s, e):
                lv = levels[hop_inst[p]]
                if lv < m1:
                    m2 = m1
                    m1 = lv
                    cnt = 1
                elif lv == m1:
                    cnt += 1
                elif lv < m2:
                    m2 = lv
            for p in range(s, e):
                lv = levels[hop_inst[p]]
                if lv > m1 or cnt > 1:
                    other = m1
                else:
                    other = m2
                dem = flow_r[f]
                if other < dem:
                    dem = other
                if dem != d[p]:
                    d[p] = dem
                    inst_dirty[hop_inst[p]] = True
        # re-solve the water level of every instance whose demands changed
        any_moved = False
        for i in range(n_inst):
            if not inst_dirty[i]:
                continue
            inst_dirty[i] = False
            s = start[i]
            e = start[i + 1]
            total = 0.0
            for p in range(s, e):
                total += d[order[p]]
            if total <= cap[i]:
                new_level = inf
            else:
                seg = np.empty(e - s, dtype=np.float64)
                for p in range(s, e):
                    seg[p - s] = d[order[p]]
                seg.sort()
                remaining = cap[i]
                n = e - s
                new_level = cap[i] / n
                for t in range(n):
                    fair = remaining / (n - t)
                    if seg[t] <= fair:
                        remaining -= seg[t]
                    else:
                        new_level = fair
                        break
            old = levels[i]
            if new_level == old:
                continue
            levels[i] = new_level
            moved = True
            if new_level != inf and old != inf and abs(new_level - old) <= tol:
                moved = False
            if moved:
                any_moved = True
                for p in range(s, e):
                    flow_dirty[hop_flow[order[p]]] = True
        if not any_moved:
            break

    rates = flow_r.copy()
    for h in range(n_hops):
        f = hop_flow[h]
        share = d[h]
        lv = levels[hop_inst[h]]
        if lv < share:
            share = lv
        if share < rates[f]:
            rates[f] = share
    return rates, iters


def solve_chain_rates(
    cap: np.ndarray,
    hop_flow: np.ndarray,
    hop_inst: np.ndarray,
    flow_r: np.ndarray,
    levels: np.ndarray | None = None,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
) -> tuple[np.ndarray, int]:
    """Solve the chain-coupled allocation; returns (per-flow rates, iterations).

    ``levels`` is mutated in place when given, which lets a simulator warm
    start consecutive solves.
    """
    if levels is None:
        levels = np.full(cap.shape[0], np.inf)
    tol_abs = tol * max(1.0, float(flow_r.max()) if flow_r.size else 1.0)
    rates, iters = _solve_kernel(
        np.asarray(cap, dtype=np.float64),
        np.asarray(hop_flow, dtype=np.int64),
        np.asarray(hop_inst, dtype=np.int64),
        np.asarray(flow_r, dtype=np.float64),
        levels,
        max_iter,
        tol_abs,
    )
    return rates, iters


def solve_chain_rates_reference(
    cap: Sequence[float],
    flows: Sequence[tuple[float, Sequence[int]]],
    max_iter: int = MAX_ITER,
    tol: float = TOL,
) -> tuple[list[float], int]:
    """Dict-and-loop alternation of water levels and effective rates.

    Same semantics as the kernel but written independently on top of
    ``water_level``, so the two can check each other. ``flows`` is a list of
    (nominal rate, instance indices along the chain).
    """
    n_inst = len(cap)
    members: list[list[tuple[int, int]]] = [[] for _ in range(n_inst)]
    for f, (_, insts) in enumerate(flows):
        for pos, i in enumerate(insts):
            members[i].append((f, pos))
    levels = [_INF] * n_inst
    demands: list[list[float]] = [[r] * len(insts) for r, insts in flows]
    prev: list[list[float]] = [[-1.0] * len(insts) for _, insts in flows]
    tol_abs = tol * max(1.0, max((r for r, _ in flows), default=1.0))
    iters = 0
    for _ in range(max_iter):
        iters += 1
        for f, (r, insts) in enumerate(flows):
            for pos, _ in enumerate(insts):
                other = min(
                    (levels[i2] for p2, i2 in enumerate(insts) if p2 != pos),
                    default=_INF,
                )
                demands[f][pos] = min(r, other)
        for i in range(n_inst):
            levels[i] = water_level(cap[i], [demands[f][pos] for f, pos in members[i]])
        max_diff = 0.0
        for f in range(len(flows)):
            for pos in range(len(demands[f])):
                max_diff = max(max_diff, abs(demands[f][pos] - prev[f][pos]))
                prev[f][pos] = demands[f][pos]
        if max_diff <= tol_abs:
            break
    rates = []
    for f, (r, insts) in enumerate(flows):
        rate = r
        for pos, i in enumerate(insts):
            rate = min(rate, demands[f][pos], levels[i])
        rates.append(rate)
    return rates, iters
