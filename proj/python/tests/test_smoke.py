import os

import pytest

import _mtcsim as sim

BASE = """
[platform]
node-count = 4
cores-per-node = 1

[policy]
provision-mode = static
static-nodes = 4

[workload]
archetype = sweep
tasks = 4
runtime-dist = constant(100)

[run]
name = smoke
seeds = 1
"""


def test_parse_exposes_fields():
    cfg = sim.ExperimentConfig.parse(BASE, "inline")
    cfg.validate()
    assert cfg.name == "smoke"
    assert cfg.seeds == [1]
    assert cfg.node_count == 4
    assert cfg.archetype == "sweep"


def test_simulate_perfectly_parallel_sweep():
    cfg = sim.ExperimentConfig.parse(BASE, "inline")
    report = sim.simulate(cfg, seed=1)
    assert report["completed"]
    assert report["tasks_done"] == 4
    assert report["makespan_s"] == pytest.approx(100.0)
    assert report["busy_core_s"] == pytest.approx(400.0)
    assert report["utilization"] == pytest.approx(1.0)
    assert len(report["decile_utilization"]) == 10
    assert report["bytes_by_route"] == {}


def test_simulate_is_deterministic():
    cfg = sim.ExperimentConfig.parse(BASE, "inline")
    a = sim.simulate(cfg, seed=7)
    b = sim.simulate(cfg, seed=7)
    assert a == b


def test_workload_size():
    cfg = sim.ExperimentConfig.parse(BASE, "inline")
    tasks, _ = sim.workload_size(cfg, seed=1)
    assert tasks == 4


def test_run_experiment_writes_csv(tmp_path):
    text = BASE + f"output-dir = {tmp_path}\ntrace = false\n"
    cfg = sim.ExperimentConfig.parse(text, "inline")
    out = sim.run_experiment(cfg)
    assert out["name"] == "smoke"
    assert os.path.exists(out["csv_path"])
    assert len(out["seeds"]) == 1
    row = out["seeds"][0]
    assert row["seed"] == 1
    assert row["trace_path"] == ""
    assert row["completed"]


def test_bad_config_raises():
    with pytest.raises(RuntimeError):
        sim.ExperimentConfig.parse("[platform]\nnode-count = banana\n", "inline")


def test_validate_rejects_ifs_without_platform_support():
    text = BASE.replace("provision-mode = static",
                        "provision-mode = static\nintermediate = ifs")
    cfg = sim.ExperimentConfig.parse(text, "inline")
    with pytest.raises(RuntimeError):
        cfg.validate()


def test_validate_experiment_checks_working_set():
    text = BASE.replace("node-count = 4",
                        "node-count = 4\nlocal-storage-capacity-bytes = 1000000")
    text = text.replace("runtime-dist = constant(100)",
                        "runtime-dist = constant(100)\ncommon-input-bytes = 2000000")
    cfg = sim.ExperimentConfig.parse(text, "inline")
    with pytest.raises(RuntimeError):
        sim.validate_experiment(cfg)


def test_compare_identical_configs(tmp_path):
    def cfg(name):
        text = BASE.replace("name = smoke", f"name = {name}")
        text += f"output-dir = {tmp_path}\ntrace = false\n"
        return sim.ExperimentConfig.parse(text, "inline")

    out = sim.compare([cfg("a"), cfg("b")])
    assert [r["name"] for r in out["rows"]] == ["a", "b"]
    assert out["rows"][0]["makespan_delta_pct"] == pytest.approx(0.0)
    assert out["rows"][1]["makespan_delta_pct"] == pytest.approx(0.0)
    assert out["table"].count("\n") >= 2
