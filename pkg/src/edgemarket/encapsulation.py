"""Integrator slices: node-split max-flow capacities and quotient graphs.

Contracting a cluster of internal services to a single integrator node
with capacity equal to its sub-DAG max flow preserves exactly the token
throughput the cluster could ever deliver.  When the contracted quotient
is a tree or has laminar leaf blocks, the agent-facing feasible region
is again a polymatroid — the whole point of encapsulation is to restore
that structure when the raw graph tangles it.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .graph import ServiceDag, is_laminar, leaf_blocks
from .polymatroid import RankFunction, rank_function_from_dag


class EncapsulationError(ValueError):
    """Invalid cluster assignment or non-reducible quotient."""


@dataclass(frozen=True)
class ClusterAssignment:
    """Disjoint internal-node clusters, each inducing a connected sub-DAG."""

    clusters: tuple[frozenset[str], ...]

    def validate(self, dag: ServiceDag) -> None:
        known = set(dag.node_ids)
        seen: set[str] = set()
        for cl in self.clusters:
            if not cl:
                raise EncapsulationError("empty cluster")
            if not cl <= known:
                raise EncapsulationError(
                    f"cluster references unknown nodes: {sorted(cl - known)}")
            bad = cl & dag.leaves
            if bad:
                raise EncapsulationError(
                    f"cluster contains leaves: {sorted(bad)}")
            if cl & seen:
                raise EncapsulationError("clusters overlap")
            seen |= cl
            if not _weakly_connected(cl, dag.edges):
                raise EncapsulationError(
                    f"cluster {sorted(cl)} does not induce a connected sub-DAG")


def _weakly_connected(nodes: frozenset[str], edges) -> bool:
    if len(nodes) == 1:
        return True
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        if a in nodes and b in nodes:
            adj[a].add(b)
            adj[b].add(a)
    start = next(iter(nodes))
    seen, stack = {start}, [start]
    while stack:
        for m in adj[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen == nodes


def max_flow_capacity(subdag: ServiceDag) -> int:
    """Max token throughput of a sub-DAG under node capacities.

    Standard node-splitting: v -> (v_in, v_out) with arc capacity C_v;
    original edges become unbounded v_out -> w_in arcs; a super-source
    feeds every entry and a super-sink drains every exit.
    """
    if not subdag.nodes:
        raise EncapsulationError("empty sub-DAG")
    g = nx.DiGraph()
    entries = set(subdag.node_ids) - {b for _, b in subdag.edges}
    exits = subdag.leaves
    for nid, cap, _ in subdag.nodes:
        g.add_edge(f"{nid}#in", f"{nid}#out", capacity=cap)
    for a, b in subdag.edges:
        g.add_edge(f"{a}#out", f"{b}#in")  # uncapacitated
    for e in entries:
        g.add_edge("#S", f"{e}#in")
    for x in exits:
        g.add_edge(f"{x}#out", "#T")
    value = nx.maximum_flow_value(g, "#S", "#T")
    return int(round(value))


@dataclass(frozen=True)
class QuotientGraph:
    """Contracted service graph: integrator nodes + untouched originals.

    classification: "Tree" (in-degree <= 1 everywhere), "SeriesParallel"
    (leaf blocks laminar), or "Entangled" (neither).
    """

    dag: ServiceDag
    integrators: tuple[tuple[str, int], ...]   # integrator node -> capacity
    classification: str

    @property
    def leaves(self) -> frozenset[str]:
        return self.dag.leaves


def _classify(dag: ServiceDag) -> str:
    indeg: dict[str, int] = {n: 0 for n in dag.node_ids}
    for _, b in dag.edges:
        indeg[b] += 1
    if all(d <= 1 for d in indeg.values()):
        return "Tree"
    if is_laminar(leaf_blocks(dag)):
        return "SeriesParallel"
    return "Entangled"


def contract(dag: ServiceDag, clusters: ClusterAssignment) -> QuotientGraph:
    """Contract each cluster to one integrator node.

    Integrator capacity = max flow of the induced sub-DAG; inherited
    edges are deduplicated and self-loops dropped.
    """
    clusters.validate(dag)
    rep: dict[str, str] = {}
    integrators = []
    for k, cl in enumerate(clusters.clusters):
        name = f"I{k}"
        sub_nodes = tuple(
            (n, c, t) for n, c, t in dag.nodes if n in cl)
        sub_edges = tuple(
            (a, b) for a, b in dag.edges if a in cl and b in cl)
        sub = ServiceDag(nodes=sub_nodes, edges=sub_edges, kind="Custom")
        cap = max_flow_capacity(sub)
        integrators.append((name, cap))
        for n in cl:
            rep[n] = name
    nodes = [(name, cap, "none") for name, cap in integrators]
    for n, c, t in dag.nodes:
        if n not in rep:
            nodes.append((n, c, t))
    edges = set()
    for a, b in dag.edges:
        ra, rb = rep.get(a, a), rep.get(b, b)
        if ra != rb:
            edges.add((ra, rb))
    q = ServiceDag(nodes=tuple(nodes), edges=tuple(sorted(edges)),
                   kind="Custom")
    return QuotientGraph(dag=q, integrators=tuple(integrators),
                         classification=_classify(q))


def agent_facing_region(q: QuotientGraph) -> RankFunction:
    """Polymatroid rank function over the quotient's leaves.

    Only defined when the quotient classifies as Tree or SeriesParallel;
    anything else means the contraction failed to discipline the graph.
    """
    if q.classification not in ("Tree", "SeriesParallel"):
        rep = is_laminar(leaf_blocks(q.dag))
        raise EncapsulationError(
            f"quotient is {q.classification}; leaf-block witness: "
            f"{rep.witness}")
    return rank_function_from_dag(q.dag)
