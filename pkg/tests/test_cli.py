"""CLI exit codes and artifact generation."""

import json

from flowlb.cli import EXIT_CONFIG, EXIT_OK, main
from flowlb.traffic import load_trace


def write_cfg(tmp_path, name="cfg.json", **fields):
    path = tmp_path / name
    path.write_text(json.dumps(fields))
    return str(path)


def small_run_cfg(tmp_path):
    return write_cfg(
        tmp_path,
        vip_count=4, instances_per_vip=4, flow_count=60, mean_interarrival=0.01,
        mean_duration=0.5, dispatchers=["ecmp"], intervals=[0.25],
    )


def test_run_ok(tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["run", "--config", small_run_cfg(tmp_path), "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "summary.csv").exists()
    assert "mean_omega" in capsys.readouterr().out


def test_run_quiet(tmp_path, capsys):
    out = tmp_path / "results"
    main(["run", "--config", small_run_cfg(tmp_path), "--out", str(out), "--quiet"])
    assert capsys.readouterr().out == ""


def test_run_missing_config_is_config_error(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_run_invalid_json_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code = main(["run", "--config", str(path), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_run_unknown_field_is_config_error(tmp_path):
    cfg = write_cfg(tmp_path, flow_cuont=10)
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_gen_writes_trace(tmp_path):
    cfg = write_cfg(tmp_path, flow_count=40)
    out = tmp_path / "trace.csv"
    assert main(["gen", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
    assert len(load_trace(out)) == 40


def test_gen_is_deterministic_and_seed_sensitive(tmp_path):
    cfg = write_cfg(tmp_path, flow_count=40)
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    main(["gen", "--config", cfg, "--out", str(a), "--quiet"])
    main(["gen", "--config", cfg, "--out", str(b), "--quiet"])
    main(["gen", "--config", cfg, "--out", str(c), "--seed", "99", "--quiet"])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_seed_override_changes_run_output(tmp_path):
    cfg = small_run_cfg(tmp_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    main(["run", "--config", cfg, "--out", str(out1), "--quiet"])
    main(["run", "--config", cfg, "--out", str(out2), "--seed", "99", "--quiet"])
    assert (out1 / "summary.csv").read_text() != (out2 / "summary.csv").read_text()
