"""Scenario configs: defaults, overrides, validation, identity, outputs."""

import os

import pytest
import yaml

from dsnetsim.metrics import read_records_csv
from dsnetsim.qos import Color
from dsnetsim.scenario import (
    MODE_BASELINE, MODE_OPTIMISTIC, MODE_SEQUENTIAL, ScenarioError,
    build_profiles, build_scenario_model, build_topology, load_scenario,
    run_scenario, scenario_identity,
)
from dsnetsim.topology import NodeTier

SMALL = {
    "name": "small",
    "topology": {"synthetic": {"n_access": 4, "n_mixed": 2, "n_kernel": 1, "seed": 0}},
    "run": {"end_ns": 200_000},
}


def test_defaults_load_without_a_file():
    cfg = load_scenario()
    assert cfg["run"]["mode"] == MODE_SEQUENTIAL
    assert cfg["traffic"]["rate_pps"] == 25_000
    assert cfg["topology"]["synthetic"]["n_access"] == 40


def test_file_and_overrides_merge_deeply(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    cfg = load_scenario(str(path), {"run": {"seed": 7}})
    assert cfg["name"] == "small"
    assert cfg["run"]["end_ns"] == 200_000
    assert cfg["run"]["seed"] == 7
    assert cfg["run"]["mode"] == MODE_SEQUENTIAL  # default survives the merge
    assert cfg["traffic"]["rate_pps"] == 25_000


def test_mode_validation():
    with pytest.raises(ScenarioError, match="unknown run mode"):
        load_scenario(None, {"run": {"mode": "speculative"}})
    with pytest.raises(ScenarioError, match="requires token_interval"):
        load_scenario(None, {"run": {"mode": MODE_BASELINE}})
    with pytest.raises(ScenarioError, match="only valid in baseline"):
        load_scenario(None, {"run": {"token_interval_ns": 100}})


def test_identity_ignores_execution_choices():
    base = load_scenario(None, {"name": "x"})
    opt = load_scenario(None, {
        "name": "x",
        "run": {"mode": MODE_OPTIMISTIC, "partitions": {"k": 4}},
    })
    baseline = load_scenario(None, {
        "name": "x",
        "run": {"mode": MODE_BASELINE, "token_interval_ns": 1_000},
    })
    assert scenario_identity(base) == scenario_identity(opt)
    assert scenario_identity(base) == scenario_identity(baseline)
    other = load_scenario(None, {"name": "x", "traffic": {"rate_pps": 1}})
    assert scenario_identity(base) != scenario_identity(other)


def test_per_tier_qos_overrides():
    cfg = load_scenario(None, {
        "qos": {
            "default": {"queue_capacity_bytes": 10_000},
            "tiers": {"kernel": {"shaper_rate_bps": 999}},
        },
    })
    profiles = build_profiles(cfg)
    assert profiles[NodeTier.ACCESS].queue_capacity_bytes == 10_000
    assert profiles[NodeTier.ACCESS].shaper_rate_bps == 1_250_000_000
    assert profiles[NodeTier.KERNEL].shaper_rate_bps == 999
    assert profiles[NodeTier.KERNEL].queue_capacity_bytes == 10_000


def test_explicit_red_and_srtcm_blocks():
    cfg = load_scenario(None, {
        "qos": {"default": {
            "num_classes": 2,
            "classifier": {46: 0},
            "default_class": 1,
            "srtcm": [
                {"cir_bps": 1000, "cbs_bytes": 2000, "ebs_bytes": 3000},
                {"cir_bps": 1000, "cbs_bytes": 2000, "ebs_bytes": 3000},
            ],
            "red": {"green": [100, 200, 0.5]},
        }},
    })
    prof = build_profiles(cfg)[NodeTier.ACCESS]
    assert prof.num_classes == 2
    assert prof.srtcm[0].cbs_bytes == 2000
    assert prof.red[0][Color.GREEN].min_th_bytes == 100
    assert prof.red[0][Color.GREEN].max_p == 0.5
    # unspecified colors fall back to the built-in per-color defaults
    assert prof.red[0][Color.RED].max_p == 0.5
    assert prof.red[0][Color.YELLOW].max_p == 0.1


def test_run_scenario_writes_artifacts(tmp_path):
    cfg = load_scenario(None, SMALL)
    out = tmp_path / "out"
    report = run_scenario(cfg, str(out))
    assert (out / "effective_config.yaml").exists()
    assert (out / "summary.txt").exists()
    loaded = read_records_csv(str(out / "records.csv"))
    assert loaded == sorted(report.records, key=lambda r: r.pid)
    echoed = yaml.safe_load((out / "effective_config.yaml").read_text())
    assert echoed["run"]["end_ns"] == 200_000


def test_optimistic_scenario_end_to_end(tmp_path):
    seq = run_scenario(load_scenario(None, SMALL))
    opt_cfg = load_scenario(None, {
        **SMALL,
        "run": {"end_ns": 200_000, "mode": MODE_OPTIMISTIC,
                "partitions": {"k": 2},
                "knobs": {"runtime": "stepped", "gvt_interval": 64}},
    })
    out = tmp_path / "opt"
    rep = run_scenario(opt_cfg, str(out))
    assert sorted(rep.records, key=lambda r: r.pid) == \
        sorted(seq.records, key=lambda r: r.pid)
    assert (out / "gvt_series.csv").exists()


def test_topology_file_beats_synthetic(tmp_path):
    from dsnetsim.topology import save_topology
    cfg = load_scenario(None, SMALL)
    topo = build_topology(cfg)
    path = tmp_path / "t.yaml"
    save_topology(topo, str(path))
    cfg2 = load_scenario(None, {
        "topology": {"path": str(path),
                     "synthetic": {"n_access": 99, "n_mixed": 9, "n_kernel": 9,
                                   "seed": 0}},
    })
    assert build_topology(cfg2).num_nodes == topo.num_nodes
