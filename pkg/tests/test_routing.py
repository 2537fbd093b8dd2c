"""Routing tables against hand examples and an independent all-pairs oracle."""

import numpy as np
import pytest

from dsnetsim.routing import RouteMetric, compute_routes, walk_route
from dsnetsim.topology import TopologyError
from conftest import line_topology, square_topology


def test_line_routes_through_middle():
    topo = line_topology(3)
    table = compute_routes(topo)
    # A(0) -> C(2) egresses toward B(1)
    port = table.egress_port(0, 2)
    assert topo.port_link[(0, port)].dst == 1
    assert walk_route(topo, table, 0, 2) == [0, 1, 2]


def test_square_tie_breaks_to_smallest_next_hop():
    topo = square_topology()
    table = compute_routes(topo)
    # 0 -> 2 has two equal-cost paths via 1 and via 3; pick min(1, 3) = 1
    port = table.egress_port(0, 2)
    assert topo.port_link[(0, port)].dst == 1


def _floyd_warshall(topo, metric):
    n = topo.num_nodes
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for l in topo.links:
        cost = 1 if metric is RouteMetric.HOP_COUNT else l.delay_ns
        dist[l.src, l.dst] = min(dist[l.src, l.dst], cost)
    for m in range(n):
        dist = np.minimum(dist, dist[:, m:m + 1] + dist[m:m + 1, :])
    return dist


@pytest.mark.parametrize("metric", [RouteMetric.HOP_COUNT, RouteMetric.LATENCY])
def test_paths_match_all_pairs_oracle(synthetic50, metric):
    topo = synthetic50
    table = compute_routes(topo, metric)
    dist = _floyd_warshall(topo, metric)
    for src in topo.node_ids():
        for dst in topo.node_ids():
            if src == dst:
                continue
            path = walk_route(topo, table, src, dst)
            cost = 0
            for a, b in zip(path, path[1:]):
                port = table.egress_port(a, dst)
                link = topo.port_link[(a, port)]
                assert link.dst == b
                cost += 1 if metric is RouteMetric.HOP_COUNT else link.delay_ns
            assert cost == dist[src, dst]


def test_routes_are_deterministic(synthetic50):
    a = compute_routes(synthetic50)
    b = compute_routes(synthetic50)
    for n in synthetic50.node_ids():
        assert a.row(n) == b.row(n)


def test_walk_route_rejects_missing_route():
    topo = line_topology(3)
    table = compute_routes(topo)
    table.row(0).pop(2)
    with pytest.raises(TopologyError, match="no route"):
        walk_route(topo, table, 0, 2)
