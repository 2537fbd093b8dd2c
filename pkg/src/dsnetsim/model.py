"""Assembles a runnable simulation model: one LP per network node, wired
with its egress pipelines, routing row, and traffic sources, plus the
bootstrap events that start the run."""

from __future__ import annotations

from dataclasses import dataclass

from . import events
from .qos import QosProfile, make_profile
from .router import RouterLp, EgressPipeline, Effects
from .routing import RoutingTable
from .topology import Topology, NodeTier
from .traffic import TrafficSpec, DsSampler, build_sources

MODE_LAZY = "lazy"
MODE_PERIODIC = "periodic"


class ModelError(Exception):
    pass


class ModelContext:
    """Immutable run-wide context shared by every handler."""

    __slots__ = ("lazy_shaper", "token_interval_ns", "end_time_ns", "_ds_sampler")

    def __init__(self, lazy_shaper: bool, token_interval_ns: int,
                 end_time_ns: int, ds_sampler: DsSampler):
        self.lazy_shaper = lazy_shaper
        self.token_interval_ns = token_interval_ns
        self.end_time_ns = end_time_ns
        self._ds_sampler = ds_sampler

    def sample_ds(self, u: float) -> int:
        return self._ds_sampler.sample(u)


@dataclass
class Model:
    scenario_id: str
    topology: Topology
    lps: dict[int, RouterLp]
    bootstrap: list[events.Event]
    ctx: ModelContext
    end_time_ns: int


def build_model(
    topo: Topology,
    routes: RoutingTable,
    traffic: TrafficSpec,
    end_time_ns: int,
    seed: int,
    profiles: dict[NodeTier, QosProfile] | None = None,
    mode: str = MODE_LAZY,
    token_interval_ns: int = 0,
    scenario_id: str = "scenario",
) -> Model:
    if mode not in (MODE_LAZY, MODE_PERIODIC):
        raise ModelError(f"unknown mode {mode!r}")
    if mode == MODE_PERIODIC and token_interval_ns <= 0:
        raise ModelError("periodic mode requires token_interval_ns > 0")
    if profiles is None:
        profiles = {tier: make_profile() for tier in NodeTier}
    ctx = ModelContext(
        lazy_shaper=(mode == MODE_LAZY),
        token_interval_ns=token_interval_ns,
        end_time_ns=end_time_ns,
        ds_sampler=DsSampler(traffic.ds_probs),
    )

    lps: dict[int, RouterLp] = {}
    for nid in topo.node_ids():
        tier = topo.tiers[nid]
        profile = profiles[tier]
        pipelines = []
        for port in range(topo.port_counts[nid]):
            link = topo.port_link.get((nid, port))
            if link is None:
                continue  # unconnected spare port
            while len(pipelines) < port:
                pipelines.append(None)  # placeholder, never routed to
            pipelines.append(EgressPipeline(port, link, profile))
        lps[nid] = RouterLp(nid, tier, pipelines, routes.row(nid), seed)

    sources = build_sources(traffic, topo)
    for nid, flows in sources.items():
        if flows and topo.port_counts[nid] == 0:
            raise ModelError(f"source node {nid} has no ports")
        lps[nid].flows = flows

    bootstrap: list[events.Event] = []
    fx = Effects()
    for nid in sorted(sources):
        lp = lps[nid]
        for flow_idx in range(len(lp.flows)):
            lp.emit(fx, 0, nid, events.GENERATE, flow_idx)
    if mode == MODE_PERIODIC:
        for nid in topo.node_ids():
            lp = lps[nid]
            for pipe in lp.pipelines:
                if pipe is not None and token_interval_ns <= end_time_ns:
                    lp.emit(fx, token_interval_ns, nid, events.REFILL, pipe.port)
    bootstrap.extend(fx.emitted)
    return Model(scenario_id, topo, lps, bootstrap, ctx, end_time_ns)
