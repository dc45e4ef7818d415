"""The five flow dispatchers.

* ``ecmp_dispatch``   -- uniform over the pool.
* ``wcmp_dispatch``   -- static, proportional to maximum capacity.
* ``lcf_dispatch``    -- everything to the most-available instance at last poll.
* ``awfd_dispatch``   -- two-stage weighted dispatch over priority classes.
* ``oracle_dispatch`` -- most-available with instantaneous knowledge.

AWFD range semantics: priority class k owns a half-open residue interval of
length k * |B_k| inside [0, wSum), in ascending k order. Enumerating all
residues therefore selects class k exactly k * |B_k| times, which is the
normative class-selection probability k*|B_k|/wSum realized exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .core import FlowKey, InstanceId, Vip, VipId, WeightVector
from .hashing import STAGE2_SEED, mix64

# Stage-II modes. "faithful" reuses the flow key for the within-class pick;
# "independent" re-hashes it with a fixed salt, decorrelating the two modulo
# operations (the mode statistical tests run under).
STAGE2_FAITHFUL = "faithful"
STAGE2_INDEPENDENT = "independent"


@dataclass
class PriorityClasses:
    """Partition of a VIP's instances by quantized weight: classes[k] = B_k."""

    vip: VipId
    classes: list[list[InstanceId]]
    m: int


@dataclass
class AwfdTables:
    """Derived dispatch tables: stage-I residue ranges and stage-II groups.

    ``ranges`` lists (k, lo, hi) for non-empty classes with k >= 1, ascending,
    contiguous, covering [0, w_sum). ``fallback`` is set when every weight is
    zero; dispatch then degrades to uniform selection over all instances.
    """

    vip: VipId
    w_sum: int
    ranges: list[tuple[int, int, int]]
    groups: dict[int, list[InstanceId]]
    instances: list[InstanceId]
    m: int
    epoch: int = 0
    fallback: bool = False
    _bounds: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._bounds = [hi for _, _, hi in self.ranges]


def quantize_weights(
    avail: dict[InstanceId, float], m: int, vip: VipId = 0, epoch: int = 0
) -> WeightVector:
    """Quantize available capacities into integer weights in [0, m].

    w_i = floor(m * A_i / max(A)). Computed in exact rational arithmetic so
    that boundary cases (A_i an exact fraction of the maximum) do not wobble
    with float rounding.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if not avail:
        raise ValueError("no instances")
    for inst, a in avail.items():
        if a < 0:
            raise ValueError(f"negative availability for instance {inst}")
    a_max = max(avail.values())
    if m == 0 or a_max <= 0:
        weights = {inst: 0 for inst in avail}
    else:
        f_max = Fraction(a_max)
        weights = {
            inst: int(math.floor(Fraction(a) * m / f_max)) for inst, a in avail.items()
        }
    return WeightVector(vip=vip, weights=weights, m=m, epoch=epoch)


def priority_classes(weights: WeightVector) -> PriorityClasses:
    """Group instances into B_0..B_m by weight, members in ascending id order."""
    classes: list[list[InstanceId]] = [[] for _ in range(weights.m + 1)]
    for inst in sorted(weights.weights):
        classes[weights.weights[inst]].append(inst)
    return PriorityClasses(vip=weights.vip, classes=classes, m=weights.m)


def build_awfd_tables(weights: WeightVector) -> AwfdTables:
    """Construct stage-I ranges and stage-II groups from a weight vector."""
    by_weight: dict[int, list[InstanceId]] = {}
    for inst in sorted(weights.weights):
        k = weights.weights[inst]
        if k >= 1:
            by_weight.setdefault(k, []).append(inst)
    ranges: list[tuple[int, int, int]] = []
    groups: dict[int, list[InstanceId]] = {}
    lo = 0
    for k in sorted(by_weight):
        members = by_weight[k]
        hi = lo + k * len(members)
        ranges.append((k, lo, hi))
        groups[k] = members
        lo = hi
    w_sum = weights.w_sum
    assert lo == w_sum
    return AwfdTables(
        vip=weights.vip,
        w_sum=w_sum,
        ranges=ranges,
        groups=groups,
        instances=sorted(weights.weights),
        m=weights.m,
        epoch=weights.epoch,
        fallback=(w_sum == 0),
    )


def awfd_dispatch(
    tables: AwfdTables, key: FlowKey, stage2: str = STAGE2_FAITHFUL
) -> InstanceId:
    """Two-stage AWFD lookup; pure in (tables, key, stage2 mode)."""
    if tables.fallback:
        return tables.instances[key % len(tables.instances)]
    residue = key % tables.w_sum
    idx = bisect_right(tables._bounds, residue)
    k, _, _ = tables.ranges[idx]
    members = tables.groups[k]
    h = key if stage2 == STAGE2_FAITHFUL else mix64(key, STAGE2_SEED)
    return members[h % len(members)]


def dispatch_probability(weights: WeightVector, inst: InstanceId) -> float:
    """Probability that AWFD hands a uniformly random new flow to ``inst``."""
    w_sum = weights.w_sum
    if w_sum == 0:
        raise ValueError("degenerate weights")
    return weights.weights[inst] / w_sum


def ecmp_dispatch(vip: Vip, key: FlowKey) -> InstanceId:
    """Uniform dispatch: the instance at index key mod N."""
    return vip.instances[key % vip.n].id


def wcmp_weights(capacities: dict[InstanceId, float]) -> dict[InstanceId, int]:
    """Normalize static capacities to their smallest integer ratio.

    Rational approximation per instance with relative tolerance 1e-6.
    """
    if not capacities:
        raise ValueError("no instances")
    for inst, c in capacities.items():
        if c <= 0:
            raise ValueError(f"non-positive capacity for instance {inst}")
    c_min = min(capacities.values())
    fracs = {
        inst: Fraction(c / c_min).limit_denominator(10**6)
        for inst, c in capacities.items()
    }
    denom_lcm = 1
    for f in fracs.values():
        denom_lcm = denom_lcm * f.denominator // math.gcd(denom_lcm, f.denominator)
    weights = {inst: int(f * denom_lcm) for inst, f in fracs.items()}
    g = 0
    for w in weights.values():
        g = math.gcd(g, w)
    return {inst: w // g for inst, w in weights.items()}


def wcmp_dispatch(capacities: dict[InstanceId, float], key: FlowKey) -> InstanceId:
    """Static weighted dispatch proportional to maximum capacity."""
    weights = wcmp_weights(capacities)
    total = sum(weights.values())
    residue = key % total
    acc = 0
    for inst in sorted(weights):
        acc += weights[inst]
        if residue < acc:
            return inst
    raise AssertionError("unreachable")


def lcf_dispatch(snapshot: dict[InstanceId, float]) -> InstanceId:
    """Least-congested-first: the most-available instance at the last poll.

    Ties break toward the lowest instance id. Constant between polls, so all
    flows arriving within one polling interval land on the same instance.
    """
    if not snapshot:
        raise ValueError("no instances")
    return min(snapshot.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def oracle_dispatch(live: dict[InstanceId, float]) -> InstanceId:
    """LCF with instantaneous knowledge of available capacity."""
    return lcf_dispatch(live)
