"""Partition plans for the parallel kernel.

Weighting strategies: no weights, per-link throughput (edge weights,
minimised cut), per-node committed-event counts from a profiling run,
per-node expected ingress throughput derived statically from routes, and
the combination of vertex weights with edge-cut refinement.

The balanced planner grows regions from farthest-point seeds toward the
lightest partition; the min-cut planner refines a balanced plan with
Kernighan-Lin-style moves. Both are deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .routing import RoutingTable, walk_route
from .topology import Topology


class PartitionError(Exception):
    pass


class WeightModel(Enum):
    NO_WEIGHTS = "no-weights"
    EDGE_THROUGHPUT = "edge"
    VERTEX_EVENT = "vertex-event"
    VERTEX_THROUGHPUT = "vertex-throughput"
    VERTEX_PLUS_EDGE = "vertex+edge"


@dataclass
class PartitionPlan:
    k: int
    assignment: dict[int, int]
    strategy: WeightModel
    vertex_weights: dict[int, int] = field(default_factory=dict)
    edge_weights: dict[tuple[int, int], int] = field(default_factory=dict)
    imbalance: float = 1.0
    cut_weight: int = 0
    degraded: bool = False  # True when the balance target was not met

    def partitions(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for node in sorted(self.assignment):
            out[self.assignment[node]].append(node)
        return out


def _node_weight(weights: dict[int, int] | None, node: int) -> int:
    if not weights:
        return 1
    return weights.get(node, 0)


def _imbalance(plan_weights: list[int]) -> float:
    total = sum(plan_weights)
    if total == 0:
        return 1.0
    mean = total / len(plan_weights)
    return max(plan_weights) / mean


def compute_imbalance(assignment: dict[int, int], k: int,
                      weights: dict[int, int] | None) -> float:
    acc = [0] * k
    for node, pid in assignment.items():
        acc[pid] += _node_weight(weights, node)
    return _imbalance(acc)


def cut_weight(topo: Topology, assignment: dict[int, int],
               edge_weights: dict[tuple[int, int], int] | None) -> int:
    total = 0
    for l in topo.links:
        if l.src < l.dst and assignment[l.src] != assignment[l.dst]:
            w = 1 if not edge_weights else edge_weights.get((l.src, l.dst), 0)
            total += w
    return total


# --------------------------------------------------------------------------
# weight derivation


def derive_vertex_event_weights(report) -> dict[int, int]:
    """Vertex weight = committed event count per node, from a prior run."""
    if not getattr(report, "per_lp_events", None):
        raise PartitionError(
            "no per-node event counts available; run a sequential profiling "
            "run first (cmd_run with --mode sequential) and pass its report")
    return dict(report.per_lp_events)


def derive_vertex_throughput_weights(flows, routes: RoutingTable,
                                     topo: Topology) -> dict[int, int]:
    """Vertex weight = expected packets/second traversing or terminating at
    each node, summed over every flow's static route."""
    weights = {n: 0 for n in topo.tiers}
    for f in flows:
        for node in walk_route(topo, routes, f.src, f.dst):
            weights[node] += f.rate_pps
    return weights


def derive_edge_throughput_weights(flows, routes: RoutingTable,
                                   topo: Topology) -> dict[tuple[int, int], int]:
    """Edge weight = packets/second crossing each undirected link."""
    weights: dict[tuple[int, int], int] = {}
    for l in topo.links:
        if l.src < l.dst:
            weights[(l.src, l.dst)] = 0
    for f in flows:
        path = walk_route(topo, routes, f.src, f.dst)
        for a, b in zip(path, path[1:]):
            weights[(min(a, b), max(a, b))] += f.rate_pps
    return weights


# --------------------------------------------------------------------------
# balanced region growing


def _hop_dists(topo: Topology, src: int) -> dict[int, int]:
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topo.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def _farthest_point_seeds(topo: Topology, k: int) -> list[int]:
    seeds = [0]
    dists = [_hop_dists(topo, 0)]
    while len(seeds) < k:
        best = None
        for n in topo.node_ids():
            if n in seeds:
                continue
            d = min(dd.get(n, 0) for dd in dists)
            if best is None or (d, -n) > (best[0], -best[1]):
                best = (d, n)
        seeds.append(best[1])
        dists.append(_hop_dists(topo, best[1]))
    return seeds


def _rebalance(topo: Topology, assignment: dict[int, int], k: int,
               weights: dict[int, int] | None, eps: float,
               max_passes: int = 32) -> None:
    """Move boundary nodes from the heaviest to lighter partitions while the
    move strictly reduces the maximum partition weight."""
    acc = [0] * k
    sizes = [0] * k
    for n, pid in assignment.items():
        acc[pid] += _node_weight(weights, n)
        sizes[pid] += 1
    for _ in range(max_passes):
        improved = False
        heaviest = max(range(k), key=lambda p: (acc[p], p))
        lightest = min(range(k), key=lambda p: (acc[p], p))
        # prefer nodes with few same-partition neighbours: moving them hurts
        # locality the least, and interior nodes become movable once the
        # boundary-only candidates run out
        members = sorted(
            (n for n, pid in assignment.items() if pid == heaviest),
            key=lambda n: (sum(1 for v in topo.neighbors(n)
                               if assignment[v] == heaviest), n))
        for n in members:
            if assignment[n] != heaviest or sizes[heaviest] <= 1:
                continue
            w = _node_weight(weights, n)
            neigh_pids = {assignment[v] for v in topo.neighbors(n)}
            neigh_pids.discard(heaviest)
            candidates = sorted(neigh_pids)
            if lightest not in candidates and lightest != heaviest:
                candidates.append(lightest)
            for pid in candidates:
                if max(acc[heaviest] - w, acc[pid] + w) < acc[heaviest]:
                    assignment[n] = pid
                    acc[heaviest] -= w
                    acc[pid] += w
                    sizes[heaviest] -= 1
                    sizes[pid] += 1
                    improved = True
                    heaviest = max(range(k), key=lambda p: (acc[p], p))
                    lightest = min(range(k), key=lambda p: (acc[p], p))
                    break
        if not improved or _imbalance(acc) <= 1.0 + eps:
            break


def partition_balanced(topo: Topology, k: int,
                       weights: dict[int, int] | None = None,
                       strategy: WeightModel = WeightModel.NO_WEIGHTS,
                       eps: float = 0.10) -> PartitionPlan:
    """Greedy multi-way region growing aimed at equal partition weights."""
    n = topo.num_nodes
    if k < 1:
        raise PartitionError("k must be >= 1")
    if k > n:
        raise PartitionError(f"k={k} exceeds node count {n}")
    if k == 1:
        assignment = {node: 0 for node in topo.node_ids()}
        return PartitionPlan(1, assignment, strategy,
                             vertex_weights=dict(weights or {}), imbalance=1.0)
    seeds = _farthest_point_seeds(topo, k)
    assignment: dict[int, int] = {}
    acc = [0] * k
    frontiers: list[list[int]] = [[] for _ in range(k)]
    for pid, s in enumerate(seeds):
        assignment[s] = pid
        acc[pid] += _node_weight(weights, s)
        frontiers[pid] = sorted(v for v in topo.neighbors(s) if v not in assignment)
    remaining = set(topo.node_ids()) - set(seeds)
    while remaining:
        order = sorted(range(k), key=lambda p: (acc[p], p))
        placed = False
        for pid in order:
            front = [v for v in frontiers[pid] if v in remaining]
            if not front:
                continue
            node = front[0]
            assignment[node] = pid
            acc[pid] += _node_weight(weights, node)
            remaining.discard(node)
            frontiers[pid] = sorted(set(front[1:]) | {
                v for v in topo.neighbors(node) if v in remaining})
            placed = True
            break
        if not placed:
            # disconnected leftovers: dump into the lightest partition
            node = min(remaining)
            pid = order[0]
            assignment[node] = pid
            acc[pid] += _node_weight(weights, node)
            remaining.discard(node)
    _rebalance(topo, assignment, k, weights, eps)
    imb = compute_imbalance(assignment, k, weights)
    return PartitionPlan(
        k, assignment, strategy,
        vertex_weights=dict(weights or {}),
        imbalance=imb,
        cut_weight=cut_weight(topo, assignment, None),
        degraded=imb > 1.0 + eps,
    )


# --------------------------------------------------------------------------
# edge-cut minimisation


def partition_min_edgecut(topo: Topology, k: int,
                          edge_weights: dict[tuple[int, int], int],
                          strategy: WeightModel = WeightModel.EDGE_THROUGHPUT,
                          size_eps: float = 0.30,
                          max_passes: int = 10) -> PartitionPlan:
    """Balanced start, then greedy node moves that reduce the weighted cut
    while keeping partition node counts within ``size_eps`` of even."""
    base = partition_balanced(topo, k, None, strategy)
    assignment = dict(base.assignment)
    if k == 1:
        base.strategy = strategy
        base.edge_weights = dict(edge_weights)
        return base
    n = topo.num_nodes
    max_size = max(1, int(-(-n // k) * (1.0 + size_eps)))
    sizes = [0] * k
    for pid in assignment.values():
        sizes[pid] += 1

    def ew(a: int, b: int) -> int:
        return edge_weights.get((min(a, b), max(a, b)), 0)

    for _ in range(max_passes):
        improved = False
        for node in topo.node_ids():
            cur = assignment[node]
            if sizes[cur] <= 1:
                continue
            # cut change of moving node to each neighbouring partition
            gain_by_pid: dict[int, int] = {}
            internal = 0
            for v in topo.neighbors(node):
                w = ew(node, v)
                pid = assignment[v]
                if pid != cur:
                    gain_by_pid[pid] = gain_by_pid.get(pid, 0) + w
                else:
                    internal += w
            best = None
            for pid in sorted(gain_by_pid):
                if sizes[pid] >= max_size:
                    continue
                gain = gain_by_pid[pid] - internal
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, pid)
            if best:
                sizes[cur] -= 1
                sizes[best[1]] += 1
                assignment[node] = best[1]
                improved = True
        if not improved:
            break
    imb = compute_imbalance(assignment, k, None)
    return PartitionPlan(
        k, assignment, strategy,
        edge_weights=dict(edge_weights),
        imbalance=imb,
        cut_weight=cut_weight(topo, assignment, edge_weights),
        degraded=False,
    )


def partition_vertex_plus_edge(topo: Topology, k: int,
                               vertex_weights: dict[int, int],
                               edge_weights: dict[tuple[int, int], int],
                               eps: float = 0.10) -> PartitionPlan:
    """Balanced vertex weights refined by cut-reducing moves that stay
    within the balance tolerance."""
    base = partition_balanced(topo, k, vertex_weights,
                              WeightModel.VERTEX_PLUS_EDGE, eps)
    assignment = dict(base.assignment)
    if k == 1:
        base.edge_weights = dict(edge_weights)
        return base
    acc = [0] * k
    for n, pid in assignment.items():
        acc[pid] += _node_weight(vertex_weights, n)
    total = sum(acc)
    cap = (total / k) * (1.0 + eps)

    def ew(a: int, b: int) -> int:
        return edge_weights.get((min(a, b), max(a, b)), 0)

    for _ in range(6):
        improved = False
        for node in topo.node_ids():
            cur = assignment[node]
            w = _node_weight(vertex_weights, node)
            external: dict[int, int] = {}
            internal = 0
            for v in topo.neighbors(node):
                we = ew(node, v)
                if assignment[v] == cur:
                    internal += we
                else:
                    external[assignment[v]] = external.get(assignment[v], 0) + we
            for pid in sorted(external):
                if external[pid] - internal > 0 and acc[pid] + w <= cap:
                    acc[cur] -= w
                    acc[pid] += w
                    assignment[node] = pid
                    improved = True
                    break
        if not improved:
            break
    imb = compute_imbalance(assignment, k, vertex_weights)
    return PartitionPlan(
        k, assignment, WeightModel.VERTEX_PLUS_EDGE,
        vertex_weights=dict(vertex_weights),
        edge_weights=dict(edge_weights),
        imbalance=imb,
        cut_weight=cut_weight(topo, assignment, edge_weights),
        degraded=imb > 1.0 + eps,
    )


# --------------------------------------------------------------------------
# plan files: header "k=<int>", then one partition index per node in id order


def export_plan(plan: PartitionPlan, path: str):
    with open(path, "w") as fh:
        fh.write(f"k={plan.k}\n")
        for node in sorted(plan.assignment):
            fh.write(f"{plan.assignment[node]}\n")


def import_plan(path: str, topo: Topology,
                weights: dict[int, int] | None = None) -> PartitionPlan:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("k="):
        raise PartitionError(f"{path}: expected 'k=<int>' header")
    try:
        k = int(lines[0][2:])
    except ValueError as e:
        raise PartitionError(f"{path}: bad header {lines[0]!r}") from e
    body = lines[1:]
    if len(body) != topo.num_nodes:
        raise PartitionError(
            f"{path}: {len(body)} entries for {topo.num_nodes} nodes")
    assignment = {}
    for node, ln in zip(topo.node_ids(), body):
        try:
            pid = int(ln)
        except ValueError as e:
            raise PartitionError(f"{path}: bad entry {ln!r}") from e
        if not 0 <= pid < k:
            raise PartitionError(f"{path}: partition index {pid} out of range 0..{k-1}")
        assignment[node] = pid
    return PartitionPlan(
        k, assignment, WeightModel.NO_WEIGHTS,
        vertex_weights=dict(weights or {}),
        imbalance=compute_imbalance(assignment, k, weights),
        cut_weight=cut_weight(topo, assignment, None),
    )
