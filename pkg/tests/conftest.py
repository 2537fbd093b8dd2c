"""Shared fixtures: small hand-built topologies and model builders."""

import pytest

from dsnetsim.qos import make_profile
from dsnetsim.routing import compute_routes
from dsnetsim.topology import Link, NodeTier, Topology, generate_synthetic_topology
from dsnetsim.traffic import TrafficSpec, Flow
from dsnetsim.model import build_model


def bidirectional(a, b, pa, pb, bw=25_000_000_000, delay=1_000):
    return [
        Link(a, b, pa, pb, bw, delay),
        Link(b, a, pb, pa, bw, delay),
    ]


def line_topology(n=3, bw=25_000_000_000, delay=1_000):
    """0 - 1 - ... - n-1, all access tier."""
    nodes = []
    links = []
    for i in range(n):
        ports = 1 if i in (0, n - 1) else 2
        nodes.append((i, NodeTier.ACCESS, ports))
    for i in range(n - 1):
        pa = 0 if i == 0 else 1
        links.extend(bidirectional(i, i + 1, pa, 0, bw, delay))
    return Topology(nodes, links)


def square_topology():
    """0-1, 1-2, 2-3, 3-0: two equal-cost paths between opposite corners."""
    nodes = [(i, NodeTier.ACCESS, 2) for i in range(4)]
    links = []
    links.extend(bidirectional(0, 1, 0, 0))
    links.extend(bidirectional(1, 2, 1, 0))
    links.extend(bidirectional(2, 3, 1, 0))
    links.extend(bidirectional(3, 0, 1, 1))
    return Topology(nodes, links)


@pytest.fixture
def synthetic50():
    return generate_synthetic_topology(40, 8, 2, seed=1)


def single_flow_model(topo, src, dst, rate_pps=1_000_000, end_ns=100_000,
                      size=1400, ds=0, seed=42, profiles=None, **kwargs):
    spec = TrafficSpec(pattern="explicit",
                       flows=(Flow(src, dst, rate_pps, ds),),
                       packet_size=size)
    routes = compute_routes(topo)
    return build_model(topo, routes, spec, end_time_ns=end_ns, seed=seed,
                       profiles=profiles, **kwargs)


def tier_profiles(**kwargs):
    return {tier: make_profile(**kwargs) for tier in NodeTier}
