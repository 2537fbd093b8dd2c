"""Scenario configuration: one structured YAML file describing topology,
traffic, QoS, and run mode, with programmatic overrides. The effective
config is echoed into the output directory so every result is reproducible
from its own artefacts."""

from __future__ import annotations

import copy
import hashlib
import os

import yaml

from . import kernel, metrics, partition as partition_mod, traffic as traffic_mod
from .kernel import Knobs, run_optimistic, run_sequential
from .model import MODE_LAZY, MODE_PERIODIC, Model, build_model
from .qos import QosProfile, SrtcmParams, RedParams, make_profile, default_red_params, Color
from .routing import RouteMetric, compute_routes
from .topology import NodeTier, Topology, generate_synthetic_topology, load_topology
from .traffic import Flow, TrafficSpec

MODE_SEQUENTIAL = "sequential"
MODE_OPTIMISTIC = "optimistic"
MODE_BASELINE = "baseline"


class ScenarioError(Exception):
    pass


DEFAULT_CONFIG = {
    "name": "scenario",
    "topology": {"synthetic": {"n_access": 40, "n_mixed": 8, "n_kernel": 2, "seed": 1}},
    "routing": {"metric": "hop"},
    "traffic": {
        "pattern": "access_to_core",
        "packet_size": 1400,
        "rate_pps": 25_000,
        "ds_probs": dict(traffic_mod.DEFAULT_DS_PROBS),
        "seed": 7,
        "poisson": False,
        "flows": [],
    },
    "qos": {"default": {}, "tiers": {}},
    "run": {
        "end_ns": 10_000_000,
        "mode": MODE_SEQUENTIAL,
        "token_interval_ns": 0,
        "seed": 42,
        "partitions": {"k": 1, "strategy": "no-weights", "plan_path": None, "eps": 0.10},
        "knobs": {},
        "output_dir": None,
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_scenario(path: str | None = None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ScenarioError(f"{path}: expected a mapping")
        cfg = _deep_merge(cfg, doc)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    mode = cfg["run"]["mode"]
    if mode not in (MODE_SEQUENTIAL, MODE_OPTIMISTIC, MODE_BASELINE):
        raise ScenarioError(f"unknown run mode {mode!r}")
    if mode == MODE_BASELINE and cfg["run"]["token_interval_ns"] <= 0:
        raise ScenarioError("baseline mode requires token_interval_ns > 0")
    if mode != MODE_BASELINE and cfg["run"].get("token_interval_ns"):
        raise ScenarioError("token_interval_ns is only valid in baseline mode")
    if mode == MODE_OPTIMISTIC and cfg["run"]["partitions"]["k"] < 1:
        raise ScenarioError("optimistic mode requires k >= 1")


def scenario_identity(cfg: dict) -> str:
    """Stable identity over everything that defines the simulated system —
    mode and partitioning are execution choices, not scenario identity."""
    ident = {
        "name": cfg["name"],
        "topology": cfg["topology"],
        "routing": cfg["routing"],
        "traffic": cfg["traffic"],
        "qos": cfg["qos"],
        "end_ns": cfg["run"]["end_ns"],
        "seed": cfg["run"]["seed"],
    }
    blob = yaml.safe_dump(ident, sort_keys=True).encode()
    return f"{cfg['name']}-{hashlib.sha256(blob).hexdigest()[:12]}"


# --------------------------------------------------------------------------
# construction


def build_topology(cfg: dict) -> Topology:
    tcfg = cfg["topology"]
    if "path" in tcfg and tcfg["path"]:
        return load_topology(tcfg["path"])
    s = tcfg["synthetic"]
    return generate_synthetic_topology(
        s["n_access"], s["n_mixed"], s["n_kernel"], s.get("seed", 0))


def build_traffic_spec(cfg: dict) -> TrafficSpec:
    t = cfg["traffic"]
    flows = tuple(
        Flow(f["src"], f["dst"], f["rate_pps"], f.get("ds"))
        for f in (t.get("flows") or [])
    )
    return TrafficSpec(
        pattern=t["pattern"],
        packet_size=t["packet_size"],
        rate_pps=t["rate_pps"],
        ds_probs={int(k): float(v) for k, v in t["ds_probs"].items()},
        seed=t["seed"],
        poisson=t.get("poisson", False),
        flows=flows,
    )


def _profile_from(block: dict) -> QosProfile:
    num_classes = block.get("num_classes", 3)
    queue_cap = block.get("queue_capacity_bytes", 64 * 1024)
    shaper_rate = block.get("shaper_rate_bps", 1_250_000_000)
    shaper_burst = block.get("shaper_burst_bytes", 16 * 1024)
    classifier = {int(k): int(v) for k, v in block.get("classifier", {46: 0, 26: 1, 0: 2}).items()}
    srtcm_cfg = block.get("srtcm")
    if srtcm_cfg:
        srtcm = [SrtcmParams(s["cir_bps"], s["cbs_bytes"], s["ebs_bytes"]) for s in srtcm_cfg]
        if len(srtcm) != num_classes:
            raise ScenarioError("srtcm list must have one entry per class")
    else:
        srtcm = None
    red_cfg = block.get("red")
    red = None
    if red_cfg:
        per_color = {}
        for color in Color:
            trip = red_cfg.get(color.name.lower())
            if trip:
                per_color[color] = RedParams(
                    int(trip[0]), int(trip[1]), float(trip[2]),
                    weight=float(trip[3]) if len(trip) > 3 else 0.002)
            else:
                per_color[color] = default_red_params(queue_cap, color)
        red = [[per_color[c] for c in Color] for _ in range(num_classes)]
    return make_profile(
        classifier_map=classifier,
        default_class=block.get("default_class", num_classes - 1),
        num_classes=num_classes,
        srtcm=srtcm,
        queue_capacity_bytes=queue_cap,
        shaper_rate_bps=shaper_rate,
        shaper_burst_bytes=shaper_burst,
        red=red,
    )


def build_profiles(cfg: dict) -> dict[NodeTier, QosProfile]:
    qcfg = cfg["qos"]
    default_block = qcfg.get("default", {}) or {}
    profiles = {}
    for tier in NodeTier:
        block = _deep_merge(default_block, (qcfg.get("tiers", {}) or {}).get(tier.value, {}) or {})
        profiles[tier] = _profile_from(block)
    return profiles


def build_scenario_model(cfg: dict, mode: str | None = None,
                         token_interval_ns: int | None = None) -> Model:
    """Fresh model for one run. Models are single-use: running mutates LP
    state, so build a new one per run."""
    mode = mode or cfg["run"]["mode"]
    topo = build_topology(cfg)
    routes = compute_routes(
        topo,
        RouteMetric.LATENCY if cfg["routing"]["metric"] == "latency" else RouteMetric.HOP_COUNT,
    )
    spec = build_traffic_spec(cfg)
    kernel_mode = MODE_PERIODIC if mode == MODE_BASELINE else MODE_LAZY
    interval = token_interval_ns if token_interval_ns is not None \
        else cfg["run"].get("token_interval_ns", 0)
    return build_model(
        topo, routes, spec,
        end_time_ns=cfg["run"]["end_ns"],
        seed=cfg["run"]["seed"],
        profiles=build_profiles(cfg),
        mode=kernel_mode,
        token_interval_ns=interval,
        scenario_id=scenario_identity(cfg),
    )


def build_plan(cfg: dict, topo: Topology) -> partition_mod.PartitionPlan:
    pcfg = cfg["run"]["partitions"]
    k = pcfg["k"]
    eps = pcfg.get("eps", 0.10)
    if pcfg.get("plan_path"):
        return partition_mod.import_plan(pcfg["plan_path"], topo)
    strategy = partition_mod.WeightModel(pcfg.get("strategy", "no-weights"))
    spec = build_traffic_spec(cfg)
    routes = compute_routes(topo)
    flows = traffic_mod.resolve_flows(spec, topo)
    if strategy is partition_mod.WeightModel.NO_WEIGHTS:
        return partition_mod.partition_balanced(topo, k, None, strategy, eps)
    if strategy is partition_mod.WeightModel.VERTEX_THROUGHPUT:
        w = partition_mod.derive_vertex_throughput_weights(flows, routes, topo)
        return partition_mod.partition_balanced(topo, k, w, strategy, eps)
    if strategy is partition_mod.WeightModel.EDGE_THROUGHPUT:
        ew = partition_mod.derive_edge_throughput_weights(flows, routes, topo)
        return partition_mod.partition_min_edgecut(topo, k, ew)
    if strategy is partition_mod.WeightModel.VERTEX_PLUS_EDGE:
        w = partition_mod.derive_vertex_throughput_weights(flows, routes, topo)
        ew = partition_mod.derive_edge_throughput_weights(flows, routes, topo)
        return partition_mod.partition_vertex_plus_edge(topo, k, w, ew, eps)
    if strategy is partition_mod.WeightModel.VERTEX_EVENT:
        # needs a profiling trace; run one sequentially on the fly
        profiling = run_sequential(build_scenario_model(cfg, mode=MODE_SEQUENTIAL))
        w = partition_mod.derive_vertex_event_weights(profiling)
        return partition_mod.partition_balanced(topo, k, w, strategy, eps)
    raise ScenarioError(f"unsupported strategy {strategy}")


# --------------------------------------------------------------------------
# execution


def run_scenario(cfg: dict, output_dir: str | None = None) -> metrics.RunReport:
    """Execute the configured mode and write records, summary, and counter
    series when an output directory is given."""
    mode = cfg["run"]["mode"]
    model = build_scenario_model(cfg)
    if mode == MODE_OPTIMISTIC:
        plan = build_plan(cfg, model.topology)
        knobs = Knobs(**(cfg["run"].get("knobs") or {}))
        report = run_optimistic(model, plan, knobs)
    else:
        report = run_sequential(model)
    out = output_dir or cfg["run"].get("output_dir")
    if out:
        write_outputs(cfg, report, out)
    return report


def write_outputs(cfg: dict, report: metrics.RunReport, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.yaml"), "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)
    metrics.write_records_csv(os.path.join(out_dir, "records.csv"), report.records)
    metrics.write_summary(os.path.join(out_dir, "summary.txt"), report)
    if report.gvt_series:
        metrics.write_gvt_series_csv(os.path.join(out_dir, "gvt_series.csv"), report)
