"""Dispatcher unit and property tests.

The residue-enumeration properties are the normative ones: walking every
residue in [0, wSum) must select priority class k exactly k * |B_k| times,
and a zero-weight instance must never be chosen.
"""

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowlb.core import Instance, Vip, WeightVector
from flowlb.dispatch import (
    STAGE2_INDEPENDENT,
    awfd_dispatch,
    build_awfd_tables,
    dispatch_probability,
    ecmp_dispatch,
    lcf_dispatch,
    oracle_dispatch,
    priority_classes,
    quantize_weights,
    wcmp_dispatch,
    wcmp_weights,
)

weight_vectors = st.integers(1, 16).flatmap(
    lambda m: st.lists(st.integers(0, m), min_size=1, max_size=64).map(
        lambda ws: WeightVector(vip=0, weights=dict(enumerate(ws)), m=m)
    )
)


# -- quantization ----------------------------------------------------------


def test_quantize_worked_example():
    wv = quantize_weights({0: 2.0, 1: 1.0, 2: 0.0, 3: 0.0}, m=2)
    assert wv.weights == {0: 2, 1: 1, 2: 0, 3: 0}


def test_quantize_max_gets_m():
    wv = quantize_weights({0: 0.3, 1: 0.7, 2: 0.1}, m=7)
    assert wv.weights[1] == 7
    assert all(0 <= w <= 7 for w in wv.weights.values())


def test_quantize_floor_semantics():
    # 4 * 0.49 / 1.0 = 1.96 -> 1
    wv = quantize_weights({0: 1.0, 1: 0.49}, m=4)
    assert wv.weights == {0: 4, 1: 1}


def test_quantize_boundary_is_exact():
    # A_i exactly half the max with even m must land on m/2, not m/2 - 1
    wv = quantize_weights({0: 0.2, 1: 0.1}, m=10)
    assert wv.weights == {0: 10, 1: 5}


def test_quantize_all_zero_availability():
    wv = quantize_weights({0: 0.0, 1: 0.0}, m=4)
    assert wv.weights == {0: 0, 1: 0}


def test_quantize_m_zero():
    assert quantize_weights({0: 1.0}, m=0).weights == {0: 0}


def test_quantize_rejects_bad_input():
    with pytest.raises(ValueError):
        quantize_weights({}, m=4)
    with pytest.raises(ValueError):
        quantize_weights({0: -1.0}, m=4)
    with pytest.raises(ValueError):
        quantize_weights({0: 1.0}, m=-1)


@given(
    st.dictionaries(st.integers(0, 40), st.floats(0, 100, allow_nan=False), min_size=1),
    st.integers(1, 16),
    st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]),
)
def test_quantize_scale_invariant(avail, m, scale):
    # power-of-two scales are exact in binary floats, so weights cannot wobble
    scaled = {i: a * scale for i, a in avail.items()}
    assert quantize_weights(avail, m).weights == quantize_weights(scaled, m).weights


# -- priority classes and tables ------------------------------------------


def test_priority_classes_partition():
    wv = WeightVector(vip=0, weights={0: 2, 1: 1, 2: 0, 3: 2}, m=2)
    pcs = priority_classes(wv)
    assert pcs.classes[0] == [2]
    assert pcs.classes[1] == [1]
    assert pcs.classes[2] == [0, 3]


def test_tables_ranges_are_contiguous_ascending():
    wv = WeightVector(vip=0, weights={0: 3, 1: 1, 2: 1, 3: 0, 4: 2}, m=3)
    tables = build_awfd_tables(wv)
    assert [k for k, _, _ in tables.ranges] == [1, 2, 3]
    lo = 0
    for k, a, b in tables.ranges:
        assert a == lo
        assert b - a == k * len(tables.groups[k])
        lo = b
    assert lo == tables.w_sum == wv.w_sum


def test_tables_fallback_when_all_zero():
    tables = build_awfd_tables(WeightVector(vip=0, weights={0: 0, 1: 0}, m=2))
    assert tables.fallback
    # fallback degrades to uniform over the pool
    assert {awfd_dispatch(tables, k) for k in range(10)} == {0, 1}


# -- AWFD residue enumeration ---------------------------------------------


def class_counts(wv: WeightVector) -> Counter:
    tables = build_awfd_tables(wv)
    counts: Counter = Counter()
    for residue in range(tables.w_sum):
        inst = awfd_dispatch(tables, residue)
        counts[wv.weights[inst]] += 1
    return counts


def test_worked_example_exact_probabilities():
    wv = quantize_weights({0: 2.0, 1: 1.0, 2: 0.0, 3: 0.0}, m=2)
    assert dispatch_probability(wv, 0) == 2 / 3
    assert dispatch_probability(wv, 1) == 1 / 3
    assert dispatch_probability(wv, 2) == 0.0
    assert dispatch_probability(wv, 3) == 0.0


def test_dispatch_probability_rejects_degenerate():
    with pytest.raises(ValueError):
        dispatch_probability(WeightVector(vip=0, weights={0: 0}, m=2), 0)


@given(weight_vectors)
@settings(max_examples=200)
def test_class_selection_is_exact(wv):
    if wv.w_sum == 0:
        return
    counts = class_counts(wv)
    sizes = Counter(w for w in wv.weights.values() if w >= 1)
    for k, n_k in sizes.items():
        assert counts[k] == k * n_k


@given(weight_vectors, st.integers(0, 2**64 - 1))
@settings(max_examples=200)
def test_zero_weight_instances_never_selected(wv, key):
    if wv.w_sum == 0:
        return
    tables = build_awfd_tables(wv)
    for stage2 in ("faithful", "independent"):
        inst = awfd_dispatch(tables, key, stage2=stage2)
        assert wv.weights[inst] >= 1


@given(weight_vectors, st.integers(0, 2**64 - 1))
def test_awfd_dispatch_is_pure(wv, key):
    tables = build_awfd_tables(wv)
    assert awfd_dispatch(tables, key) == awfd_dispatch(tables, key)


def test_stage2_modes_agree_on_singleton_classes():
    # one member per class: stage II has no freedom, modes must agree
    wv = WeightVector(vip=0, weights={0: 2, 1: 1}, m=2)
    tables = build_awfd_tables(wv)
    for key in range(100):
        assert awfd_dispatch(tables, key) == awfd_dispatch(
            tables, key, stage2=STAGE2_INDEPENDENT
        )


def test_m_one_equal_availability_equals_ecmp():
    # m=1 with equal availability collapses to one class: uniform dispatch.
    # (Unequal availability floors everything below the max to weight 0.)
    vip = Vip(id=0, instances=[Instance(id=i, capacity=1.0) for i in range(5)])
    wv = quantize_weights({i: 1.5 for i in range(5)}, m=1)
    tables = build_awfd_tables(wv)
    for key in range(200):
        assert awfd_dispatch(tables, key) == ecmp_dispatch(vip, key)


def test_m_one_unequal_availability_keeps_only_the_max():
    wv = quantize_weights({0: 1.0, 1: 1.04}, m=1)
    assert wv.weights == {0: 0, 1: 1}


# -- baselines -------------------------------------------------------------


def test_ecmp_uniform_enumeration():
    vip = Vip(id=0, instances=[Instance(id=i, capacity=1.0) for i in range(4)])
    counts = Counter(ecmp_dispatch(vip, k) for k in range(400))
    assert all(c == 100 for c in counts.values())


def test_wcmp_weights_smallest_integer_ratio():
    assert wcmp_weights({0: 1.0, 1: 2.0}) == {0: 1, 1: 2}
    assert wcmp_weights({0: 2.0, 1: 4.0, 2: 4.0}) == {0: 1, 1: 2, 2: 2}
    assert wcmp_weights({0: 1.5, 1: 1.0}) == {0: 3, 1: 2}


def test_wcmp_dispatch_proportional():
    caps = {0: 1.0, 1: 2.0}
    counts = Counter(wcmp_dispatch(caps, k) for k in range(300))
    assert counts[0] == 100
    assert counts[1] == 200


def test_wcmp_rejects_bad_capacities():
    with pytest.raises(ValueError):
        wcmp_weights({})
    with pytest.raises(ValueError):
        wcmp_weights({0: 0.0})


def test_lcf_picks_most_available_lowest_id_ties():
    assert lcf_dispatch({0: 0.5, 1: 2.0, 2: 1.0}) == 1
    assert lcf_dispatch({0: 1.0, 1: 1.0}) == 0
    with pytest.raises(ValueError):
        lcf_dispatch({})


def test_oracle_is_lcf_on_live_state():
    live = {0: 0.1, 1: 0.9, 2: 0.9}
    assert oracle_dispatch(live) == lcf_dispatch(live) == 1
