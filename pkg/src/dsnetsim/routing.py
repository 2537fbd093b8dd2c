"""Static shortest-path routing tables.

Routes are precomputed for every (src, dst) pair before the simulation
starts. Ties between equal-cost paths are broken by smallest next-hop node
id (then smallest egress port) so every run, sequential or parallel, uses
identical routes.
"""

from __future__ import annotations

import heapq
from enum import Enum

from .topology import Topology, TopologyError


class RouteMetric(Enum):
    HOP_COUNT = "hop"
    LATENCY = "latency"


class RoutingTable:
    """Per-node map destination -> egress port index."""

    def __init__(self, ports: dict[int, dict[int, int]], metric: RouteMetric):
        self._ports = ports
        self.metric = metric

    def egress_port(self, node: int, dst: int) -> int | None:
        return self._ports[node].get(dst)

    def row(self, node: int) -> dict[int, int]:
        return self._ports[node]


def _link_cost(link, metric: RouteMetric) -> int:
    return 1 if metric is RouteMetric.HOP_COUNT else link.delay_ns


def _dists_to(topo: Topology, dst: int, metric: RouteMetric) -> dict[int, int]:
    # Dijkstra over the reversed graph; link costs are symmetric because
    # links always come in bidirectional pairs with equal attributes.
    in_links: dict[int, list] = {n: [] for n in topo.tiers}
    for l in topo.links:
        in_links[l.dst].append(l)
    dist = {dst: 0}
    heap = [(0, dst)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, 1 << 62):
            continue
        for l in in_links[u]:
            nd = d + _link_cost(l, metric)
            if nd < dist.get(l.src, 1 << 62):
                dist[l.src] = nd
                heapq.heappush(heap, (nd, l.src))
    return dist


def compute_routes(topo: Topology, metric: RouteMetric = RouteMetric.HOP_COUNT) -> RoutingTable:
    """All-pairs next-hop table under the chosen metric."""
    ports: dict[int, dict[int, int]] = {n: {} for n in topo.tiers}
    for dst in topo.node_ids():
        dist = _dists_to(topo, dst, metric)
        if len(dist) != topo.num_nodes:
            raise TopologyError(f"destination {dst} unreachable from some nodes")
        for src in topo.node_ids():
            if src == dst:
                continue
            best = None  # (total cost, next hop id, port)
            for l in topo.out_links[src]:
                cand = (_link_cost(l, metric) + dist[l.dst], l.dst, l.src_port)
                if best is None or cand < best:
                    best = cand
            assert best is not None and best[0] == dist[src]
            ports[src][dst] = best[2]
    return RoutingTable(ports, metric)


def walk_route(topo: Topology, table: RoutingTable, src: int, dst: int) -> list[int]:
    """Follow next-hops from src to dst; raises if a loop is detected."""
    path = [src]
    node = src
    while node != dst:
        port = table.egress_port(node, dst)
        if port is None:
            raise TopologyError(f"no route from {node} to {dst}")
        node = topo.port_link[(node, port)].dst
        path.append(node)
        if len(path) > topo.num_nodes:
            raise TopologyError(f"routing loop on path {src}->{dst}")
    return path
