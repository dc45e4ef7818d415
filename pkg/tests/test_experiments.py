"""Experiment config parsing, presets, calibration, and sweep output."""

import json

import pytest

from flowlb.experiments import (
    M_INFINITY,
    PRESETS,
    SUMMARY_HEADER,
    ExperimentSpec,
    load_spec,
    make_trace,
    parse_dispatcher,
    run_experiment,
    run_points,
)


def write_cfg(tmp_path, **fields):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(fields))
    return path


# -- dispatcher axis -------------------------------------------------------


def test_parse_dispatcher():
    assert parse_dispatcher("ecmp") == ("ecmp", 0)
    assert parse_dispatcher("awfd") == ("awfd", 4)
    assert parse_dispatcher("awfd:2") == ("awfd", 2)
    assert parse_dispatcher("awfd:inf") == ("awfd", M_INFINITY)


def test_parse_dispatcher_rejects_unknown():
    with pytest.raises(ValueError):
        parse_dispatcher("magic")
    with pytest.raises(ValueError):
        parse_dispatcher("ecmp:4")
    with pytest.raises(ValueError):
        parse_dispatcher("awfd:-1")


# -- spec / config ---------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(dispatchers=[])
    with pytest.raises(ValueError):
        ExperimentSpec(replications=0)
    with pytest.raises(ValueError):
        ExperimentSpec(dispatchers=["nope"])


def test_vip_capacity_two_type_pool():
    spec = ExperimentSpec(instances_per_vip=4, base_capacity=1.0, capacity_ratio=2.0)
    assert spec.vip_capacity == 6.0  # 2 * 1 + 2 * 2


def test_calibrated_rate_hits_load_factor():
    spec = ExperimentSpec(load_factor=1.1)
    rate = spec.calibrated_mean_rate()
    lo, hi = spec.chain_len_range
    offered_per_vip = (
        rate * spec.mean_duration * ((lo + hi) / 2)
        / (spec.mean_interarrival * spec.vip_count)
    )
    assert offered_per_vip == pytest.approx(1.1 * spec.vip_capacity)


def test_explicit_mean_rate_wins():
    assert ExperimentSpec(mean_rate=0.123).calibrated_mean_rate() == 0.123


def test_load_spec_applies_preset_with_overrides(tmp_path):
    path = write_cfg(tmp_path, preset="paper-synth", intervals=[0.25], flow_count=100)
    spec = load_spec(path)
    assert spec.dispatchers == PRESETS["paper-synth"]["dispatchers"]
    assert spec.intervals == [0.25]  # explicit field wins over the preset
    assert spec.flow_count == 100


def test_load_spec_rejects_unknown_fields(tmp_path):
    with pytest.raises(ValueError, match="unknown config fields"):
        load_spec(write_cfg(tmp_path, flow_cuont=10))


def test_load_spec_rejects_unknown_preset(tmp_path):
    with pytest.raises(ValueError, match="unknown preset"):
        load_spec(write_cfg(tmp_path, preset="nope"))


def test_load_spec_seed_override(tmp_path):
    spec = load_spec(write_cfg(tmp_path, base_seed=1), seed_override=77)
    assert spec.base_seed == 77


def test_presets_all_parse():
    for name, fields in PRESETS.items():
        for d in fields["dispatchers"]:
            parse_dispatcher(d)


# -- sweep mechanics -------------------------------------------------------


def test_run_points_cross_product_order():
    spec = ExperimentSpec(dispatchers=["ecmp", "awfd:2"], intervals=[0.1, 0.5],
                          drop_probs=[0.0], replications=2, base_seed=10)
    points = run_points(spec)
    assert len(points) == 8
    assert points[0] == ("ecmp", 0, 0.1, 0.0, 10)
    assert points[1] == ("ecmp", 0, 0.1, 0.0, 11)
    assert points[-1] == ("awfd", 2, 0.5, 0.0, 11)


def test_trace_is_shared_across_axes_not_replications():
    spec = ExperimentSpec(flow_count=50)
    a = make_trace(spec, 42)
    b = make_trace(spec, 42)
    c = make_trace(spec, 43)
    assert [f.key for f in a.flows] == [f.key for f in b.flows]
    assert [f.key for f in a.flows] != [f.key for f in c.flows]


def test_run_experiment_writes_summary_and_series(tmp_path):
    spec = ExperimentSpec(
        vip_count=4, instances_per_vip=4, flow_count=80, mean_interarrival=0.01,
        mean_duration=0.5, dispatchers=["ecmp", "awfd:4"], intervals=[0.25],
    )
    out = tmp_path / "results"
    results = run_experiment(spec, out, quiet=True)
    assert len(results) == 2
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0] == SUMMARY_HEADER
    assert len(summary) == 3
    assert summary[1].startswith("ecmp,0,250,0.0,42,")
    assert summary[2].startswith("awfd,4,250,0.0,42,")
    for result in results:
        assert (out / result.series_name()).exists()
