"""Service-dependency DAGs and their leaf-block set families.

A service graph is a DAG whose nodes are services with integer token
capacities.  Agents consume the *leaves* (terminal services, no outgoing
edges); every internal node v induces a leaf block L_v = the set of
leaves reachable from v.  For trees and series-parallel graphs the
family {L_v} is laminar (any two blocks nested or disjoint), which is
what makes the capacity region of the whole graph a polymatroid; the
entangled topologies here exist precisely to break that property.

Series-parallel composition follows the two-terminal inductive
construction: a primitive edge contributes one capacity-carrying sink
node; series composition glues sink-1 onto source-2 (the glue node
becomes internal and its block absorbs the downstream leaves); parallel
composition shares one source whose block is the union of both branch
leaf fronts.  Sinks are never merged — each carries its own capacity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

TIER_TAGS = ("device", "edge", "cloud", "none")
TOPOLOGY_KINDS = ("Linear", "Tree", "SeriesParallel", "Entangled", "Custom")

# Canonical per-tier node capacities for built topologies.  Small on
# purpose: theory checks enumerate subsets exhaustively.
CANONICAL_CAPACITY = {"device": 2, "edge": 3, "cloud": 5, "none": 4}

# Tier visit sequence whose base-delay sum is the topology's
# zero-congestion critical-path latency (5/15/50 ms per tier).  Sums:
# linear 120, tree 135, SP 135, entangled 140.
_CRITICAL_SEQUENCES = {
    "Linear": ("device", "edge", "cloud", "cloud"),
    "Tree": ("device", "edge", "edge", "cloud", "cloud"),
    "SeriesParallel": ("device", "edge", "edge", "cloud", "cloud"),
    "Entangled": ("device", "device", "edge", "edge", "cloud", "cloud"),
}


class GraphError(ValueError):
    """Structural violation in a service DAG or SP term."""


@dataclass(frozen=True)
class ServiceDag:
    """Immutable service-dependency DAG.

    nodes: tuple of (node_id, capacity, tier_tag); edges directed
    (from, to); leaves = every node without outgoing edges; kind is one
    of TOPOLOGY_KINDS.
    """

    nodes: tuple[tuple[str, int, str], ...]
    edges: tuple[tuple[str, str], ...]
    kind: str
    leaves: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise GraphError(f"unknown topology kind: {self.kind!r}")
        ids = [n for n, _, _ in self.nodes]
        if len(ids) != len(set(ids)):
            raise GraphError("duplicate node ids")
        known = set(ids)
        for nid, cap, tag in self.nodes:
            if cap <= 0:
                raise GraphError(f"capacity of {nid} must be positive")
            if tag not in TIER_TAGS:
                raise GraphError(f"unknown tier tag {tag!r} on {nid}")
        for a, b in self.edges:
            if a not in known or b not in known:
                raise GraphError(f"edge ({a},{b}) references unknown node")
        order = _topological_order(ids, self.edges)  # raises on cycles
        sinks = frozenset(known - {a for a, _ in self.edges})
        if not self.leaves:
            object.__setattr__(self, "leaves", sinks)
        elif self.leaves != sinks:
            raise GraphError("declared leaves differ from sink set")
        # every non-leaf must reach a leaf; in a DAG every node reaches
        # some sink, so this follows from acyclicity checked above.
        del order

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n for n, _, _ in self.nodes)

    def capacity(self, node_id: str) -> int:
        for n, cap, _ in self.nodes:
            if n == node_id:
                return cap
        raise KeyError(node_id)

    def tier(self, node_id: str) -> str:
        for n, _, tag in self.nodes:
            if n == node_id:
                return tag
        raise KeyError(node_id)

    def successors(self, node_id: str) -> tuple[str, ...]:
        return tuple(b for a, b in self.edges if a == node_id)


def _topological_order(ids, edges) -> list[str]:
    out = {i: [] for i in ids}
    indeg = {i: 0 for i in ids}
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    frontier = sorted(i for i in ids if indeg[i] == 0)
    order = []
    while frontier:
        n = frontier.pop()
        order.append(n)
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                frontier.append(m)
        frontier.sort()
    if len(order) != len(ids):
        raise GraphError("edge relation contains a cycle")
    return order


@dataclass(frozen=True)
class LeafBlockFamily:
    """Map internal node -> leaf block over a fixed ground set of leaves."""

    entries: tuple[tuple[str, frozenset[str]], ...]
    ground: tuple[str, ...]

    def __post_init__(self):
        gs = set(self.ground)
        if len(gs) != len(self.ground):
            raise GraphError("duplicate leaves in ground set")
        for node, block in self.entries:
            if not block:
                raise GraphError(f"empty leaf block for {node}")
            if not block <= gs:
                raise GraphError(f"block of {node} leaves the ground set")

    def blocks(self) -> list[frozenset[str]]:
        return [b for _, b in self.entries]


@dataclass(frozen=True)
class LaminarityReport:
    is_laminar: bool
    witness: tuple[tuple[str, frozenset[str]], tuple[str, frozenset[str]]] | None = None

    def __bool__(self) -> bool:
        return self.is_laminar


def is_laminar(family: LeafBlockFamily) -> LaminarityReport:
    """True iff every pair of blocks is nested or disjoint.

    On failure returns one violating pair as a witness.
    """
    entries = family.entries
    for (na, a), (nb, b) in itertools.combinations(entries, 2):
        if a & b and not (a <= b or b <= a):
            return LaminarityReport(False, ((na, a), (nb, b)))
    return LaminarityReport(True)


def leaf_blocks(dag: ServiceDag) -> LeafBlockFamily:
    """Leaf block L_v for every internal (non-leaf) node, by reachability."""
    reach: dict[str, frozenset[str]] = {}
    order = _topological_order(list(dag.node_ids), dag.edges)
    for node in reversed(order):
        if node in dag.leaves:
            reach[node] = frozenset((node,))
        else:
            acc: set[str] = set()
            for succ in dag.successors(node):
                acc |= reach[succ]
            reach[node] = frozenset(acc)
    ground = tuple(sorted(dag.leaves))
    entries = tuple(
        (n, reach[n]) for n in sorted(dag.node_ids) if n not in dag.leaves
    )
    return LeafBlockFamily(entries=entries, ground=ground)


# --------------------------------------------------------------------------
# Series-parallel terms


@dataclass(frozen=True)
class SpTerm:
    """Recursive series-parallel term.

    op: "edge" (capacity set), "series" or "parallel" (left/right set).
    """

    op: str
    capacity: int | None = None
    left: "SpTerm | None" = None
    right: "SpTerm | None" = None

    def __post_init__(self):
        if self.op == "edge":
            if self.capacity is None or self.capacity <= 0:
                raise GraphError("primitive edge needs positive capacity")
            if self.left is not None or self.right is not None:
                raise GraphError("primitive edge takes no children")
        elif self.op in ("series", "parallel"):
            if self.left is None or self.right is None:
                raise GraphError(f"{self.op} composition needs two children")
        else:
            raise GraphError(f"unknown SP op {self.op!r}")


def PrimitiveEdge(capacity: int) -> SpTerm:
    return SpTerm(op="edge", capacity=capacity)


def Series(left: SpTerm, right: SpTerm) -> SpTerm:
    return SpTerm(op="series", left=left, right=right)


def Parallel(left: SpTerm, right: SpTerm) -> SpTerm:
    return SpTerm(op="parallel", left=left, right=right)


def _term_capacity_sum(term: SpTerm) -> int:
    if term.op == "edge":
        return term.capacity
    return _term_capacity_sum(term.left) + _term_capacity_sum(term.right)


class _SpGraph:
    # mutable builder: source id, per-node caps, edges, leaf front
    def __init__(self, source, caps, edges, leaves):
        self.source = source
        self.caps = caps          # node -> capacity
        self.edges = edges        # list of (a, b)
        self.leaves = leaves      # ordered list of current leaf front


def _compose(term: SpTerm, counter: itertools.count) -> _SpGraph:
    if term.op == "edge":
        s = f"s{next(counter)}"
        t = f"t{next(counter)}"
        # the source junction never binds below a real bottleneck
        return _SpGraph(s, {s: term.capacity, t: term.capacity}, [(s, t)], [t])
    g1 = _compose(term.left, counter)
    g2 = _compose(term.right, counter)
    if term.op == "series":
        if len(g1.leaves) != 1:
            # gluing a multi-leaf front onto one source loses the front's
            # identity; route every branch sink into g2's source instead.
            caps = {**g1.caps, **g2.caps}
            edges = g1.edges + g2.edges + [(l, g2.source) for l in g1.leaves]
            return _SpGraph(g1.source, caps, edges, g2.leaves)
        glue = g1.leaves[0]
        # identify sink-1 with source-2: keep the sink's capacity (it is
        # the service node), rewire g2's source edges to start at it.
        caps = {**g1.caps}
        for n, c in g2.caps.items():
            if n != g2.source:
                caps[n] = c
        edges = list(g1.edges)
        for a, b in g2.edges:
            edges.append((glue if a == g2.source else a,
                          glue if b == g2.source else b))
        return _SpGraph(g1.source, caps, edges, g2.leaves)
    # parallel: share one source, keep both leaf fronts
    caps = {**g1.caps, **g2.caps}
    src_cap = _term_capacity_sum(term)
    caps[g1.source] = src_cap
    edges = list(g1.edges)
    for a, b in g2.edges:
        edges.append((g1.source if a == g2.source else a,
                      g1.source if b == g2.source else b))
    caps.pop(g2.source, None)
    return _SpGraph(g1.source, caps, edges, g1.leaves + g2.leaves)


def sp_compose(term: SpTerm) -> tuple[ServiceDag, LeafBlockFamily]:
    """Build the ServiceDag of an SP term and its leaf-block family.

    The family always contains an entry per internal node; laminarity is
    an invariant of the construction (checked by callers/tests, not
    asserted here).
    """
    g = _compose(term, itertools.count())
    node_ids = sorted(g.caps)
    leaves = set(g.leaves)
    nodes = tuple(
        (n, g.caps[n], "none") for n in node_ids
    )
    dag = ServiceDag(nodes=nodes, edges=tuple(sorted(set(g.edges))),
                     kind="SeriesParallel")
    if dag.leaves != frozenset(leaves):
        raise GraphError("SP composition produced stray sinks")
    return dag, leaf_blocks(dag)


# --------------------------------------------------------------------------
# Canonical topology builder


def build_topology(kind: str, scale: int, rng_seed: int = 0) -> ServiceDag:
    """Canonical service DAG of the given kind.

    Pure function of its arguments; rng_seed participates only in
    Custom-kind generation hooks (unused by the four canonical kinds but
    kept for signature stability).
    """
    if scale < 1:
        raise GraphError("scale must be >= 1")
    if kind == "Linear":
        # chain of `scale` nodes, device -> edge -> cloud...
        tags = ["device", "edge"] + ["cloud"] * max(scale - 2, 0)
        tags = tags[:scale]
        nodes = tuple(
            (f"n{i}", CANONICAL_CAPACITY[tags[i]], tags[i]) for i in range(scale)
        )
        edges = tuple((f"n{i}", f"n{i+1}") for i in range(scale - 1))
        return ServiceDag(nodes=nodes, edges=edges, kind="Linear")
    if kind == "Tree":
        # root with `scale` internal children, two leaves each
        nodes = [("root", CANONICAL_CAPACITY["cloud"], "cloud")]
        edges = []
        for i in range(scale):
            mid = f"m{i}"
            nodes.append((mid, CANONICAL_CAPACITY["edge"], "edge"))
            edges.append(("root", mid))
            for j in range(2):
                leaf = f"l{i}{j}"
                nodes.append((leaf, CANONICAL_CAPACITY["device"], "device"))
                edges.append((mid, leaf))
        return ServiceDag(nodes=tuple(nodes), edges=tuple(edges), kind="Tree")
    if kind in ("SeriesParallel", "Entangled"):
        branches = scale + 1 if kind == "SeriesParallel" else scale + 2
        mid_cap = CANONICAL_CAPACITY["edge"]
        leaf_cap = CANONICAL_CAPACITY["device"]
        nodes = [("src", mid_cap * branches, "cloud")]
        edges = []
        for i in range(branches):
            a, b = f"a{i}", f"b{i}"
            nodes.append((a, mid_cap, "edge"))
            nodes.append((b, leaf_cap, "device"))
            edges.append(("src", a))
            edges.append((a, b))
        if kind == "Entangled":
            # cross-cutting edges a_i -> b_{i+1}: consecutive internal
            # nodes get overlapping, non-nested leaf blocks
            for i in range(branches - 1):
                edges.append((f"a{i}", f"b{i+1}"))
        return ServiceDag(nodes=tuple(nodes), edges=tuple(edges), kind=kind)
    raise GraphError(f"unknown topology kind: {kind!r}")


def critical_tier_sequence(kind: str) -> tuple[str, ...]:
    """Deterministic tier-visit sequence for critical-path latency."""
    try:
        return _CRITICAL_SEQUENCES[kind]
    except KeyError:
        raise GraphError(f"no critical tier sequence for kind {kind!r}") from None
