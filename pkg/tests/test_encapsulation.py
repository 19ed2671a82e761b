"""Node-split max flow vs exhaustive vertex-cut oracle; quotient regions."""

import itertools

import pytest

from edgemarket.encapsulation import (
    ClusterAssignment,
    EncapsulationError,
    QuotientGraph,
    agent_facing_region,
    contract,
    max_flow_capacity,
)
from edgemarket.graph import ServiceDag, build_topology, is_laminar, leaf_blocks
from edgemarket.polymatroid import rank, verify_polymatroid


# -- oracle: min vertex cut by exhaustive enumeration -------------------------

def min_vertex_cut_oracle(dag: ServiceDag) -> int:
    """Min over node sets whose removal separates entries from exits.

    By the node-capacity max-flow/min-cut theorem this equals the max
    flow.  Entries/exits may themselves be cut (flow passes through
    their capacity too).  Exponential; test-sized graphs only.
    """
    ids = list(dag.node_ids)
    caps = {n: c for n, c, _ in dag.nodes}
    entries = set(ids) - {b for _, b in dag.edges}
    exits = set(dag.leaves)
    adj = {n: [] for n in ids}
    for a, b in dag.edges:
        adj[a].append(b)

    def connects(removed):
        stack = [e for e in entries if e not in removed]
        seen = set(stack)
        while stack:
            v = stack.pop()
            if v in exits:
                return True
            for w in adj[v]:
                if w not in seen and w not in removed:
                    seen.add(w)
                    stack.append(w)
        return False

    best = None
    for r in range(len(ids) + 1):
        for cut in itertools.combinations(ids, r):
            if not connects(set(cut)):
                cost = sum(caps[n] for n in cut)
                if best is None or cost < best:
                    best = cost
    return best


def _dag(nodes, edges):
    return ServiceDag(nodes=tuple(nodes), edges=tuple(edges), kind="Custom")


# -- max_flow_capacity -------------------------------------------------------

def test_single_node():
    assert max_flow_capacity(_dag([("v", 7, "edge")], [])) == 7


def test_series_chain_bottleneck():
    d = _dag([("a", 4, "edge"), ("b", 9, "cloud")], [("a", "b")])
    assert max_flow_capacity(d) == 4


def test_diamond_hand_value():
    d = _dag([("s", 6, "device"), ("a", 3, "edge"), ("b", 5, "edge"),
              ("t", 10, "cloud")],
             [("s", "a"), ("s", "b"), ("a", "t"), ("b", "t")])
    assert max_flow_capacity(d) == 6
    assert min_vertex_cut_oracle(d) == 6


def test_multi_entry_multi_exit():
    d = _dag([("e1", 2, "device"), ("e2", 3, "device"), ("m", 4, "edge"),
              ("x1", 2, "cloud"), ("x2", 2, "cloud")],
             [("e1", "m"), ("e2", "m"), ("m", "x1"), ("m", "x2")])
    # cut at m = 4, exits = 4, entries = 5
    assert max_flow_capacity(d) == 4
    assert min_vertex_cut_oracle(d) == 4


def test_max_flow_matches_cut_oracle_on_topologies():
    for kind, scale in (("Linear", 4), ("Tree", 2), ("SeriesParallel", 2),
                        ("Entangled", 2)):
        d = build_topology(kind, scale)
        assert max_flow_capacity(d) == min_vertex_cut_oracle(d)


def test_max_flow_bounded_by_single_node_cuts():
    d = build_topology("Entangled", 3)
    v = max_flow_capacity(d)
    # any single node that alone separates the graph upper-bounds flow
    for n, c, _ in d.nodes:
        ids = set(d.node_ids)
        entries = ids - {b for _, b in d.edges}
        if n in entries and len(entries) == 1:
            assert v <= c


def test_empty_subdag_rejected():
    with pytest.raises(EncapsulationError):
        max_flow_capacity(_dag([], []))


# -- contract ------------------------------------------------------------------

def test_contract_no_clusters_is_identity():
    d = build_topology("Tree", 2)
    q = contract(d, ClusterAssignment(clusters=()))
    assert q.dag.nodes == d.nodes
    assert set(q.dag.edges) == set(d.edges)
    assert q.integrators == ()
    assert q.classification == "Tree"


def test_contract_rejects_leaf_in_cluster():
    d = build_topology("Tree", 2)
    leaf = sorted(d.leaves)[0]
    with pytest.raises(EncapsulationError):
        contract(d, ClusterAssignment(clusters=(frozenset({"root", leaf}),)))


def test_contract_rejects_overlap():
    d = build_topology("Tree", 2)
    with pytest.raises(EncapsulationError):
        contract(d, ClusterAssignment(
            clusters=(frozenset({"root", "m0"}), frozenset({"m0"}))))


def test_contract_rejects_disconnected_cluster():
    d = build_topology("Tree", 2)
    with pytest.raises(EncapsulationError):
        contract(d, ClusterAssignment(clusters=(frozenset({"m0", "m1"}),)))


def test_contract_entangled_core_gives_tree_quotient():
    d = build_topology("Entangled", 1)
    core = frozenset(n for n in d.node_ids) - d.leaves
    q = contract(d, ClusterAssignment(clusters=(core,)))
    assert q.classification == "Tree"
    assert len(q.integrators) == 1
    name, cap = q.integrators[0]
    # src cap 9 feeding three 3-cap branches: flow 9
    assert cap == 9
    # every original leaf hangs off the single integrator
    assert q.dag.leaves == d.leaves
    assert all(a == name for a, _ in q.dag.edges)


def test_contract_capacity_is_subdag_max_flow():
    d = build_topology("SeriesParallel", 2)
    cl = frozenset({"src", "a0", "a1", "a2"})
    q = contract(d, ClusterAssignment(clusters=(cl,)))
    sub = _dag([(n, c, t) for n, c, t in d.nodes if n in cl],
               [(a, b) for a, b in d.edges if a in cl and b in cl])
    assert q.integrators[0][1] == max_flow_capacity(sub)
    assert q.integrators[0][1] == min_vertex_cut_oracle(sub)


def test_contract_two_clusters_in_series():
    # w1 -> w2 -> w3 -> w4 -> leaf; clusters {w1,w2}, {w3,w4}
    d = _dag([("w1", 4, "edge"), ("w2", 6, "edge"), ("w3", 2, "edge"),
              ("w4", 5, "edge"), ("leaf", 100, "cloud")],
             [("w1", "w2"), ("w2", "w3"), ("w3", "w4"), ("w4", "leaf")])
    q = contract(d, ClusterAssignment(
        clusters=(frozenset({"w1", "w2"}), frozenset({"w3", "w4"}))))
    assert dict(q.integrators) == {"I0": 4, "I1": 2}
    assert set(q.dag.edges) == {("I0", "I1"), ("I1", "leaf")}
    assert q.classification == "Tree"
    f = agent_facing_region(q)
    # leaf rank = min over the chain above it
    assert rank(f, ("leaf",)) == 2


# -- agent_facing_region -------------------------------------------------------

def test_region_on_two_integrator_chain():
    # quotient constructed directly: I0 -> I1, I1 agent-facing
    dag = _dag([("I0", 4, "none"), ("I1", 2, "none")], [("I0", "I1")])
    q = QuotientGraph(dag=dag, integrators=(("I0", 4), ("I1", 2)),
                      classification="Tree")
    f = agent_facing_region(q)
    assert rank(f, ("I1",)) == 2 == min(4, 2)


def test_region_fails_on_uncontracted_entangled():
    d = build_topology("Entangled", 1)
    q = contract(d, ClusterAssignment(clusters=()))
    assert q.classification == "Entangled"
    with pytest.raises(EncapsulationError) as ei:
        agent_facing_region(q)
    assert "witness" in str(ei.value)
    # the witness pair really is crossing
    rep = is_laminar(leaf_blocks(d))
    (_, x), (_, y) = rep.witness
    assert x & y and not (x <= y or y <= x)


def test_region_after_contraction_passes_axioms():
    for scale in (1, 2):
        d = build_topology("Entangled", scale)
        core = frozenset(d.node_ids) - d.leaves
        q = contract(d, ClusterAssignment(clusters=(core,)))
        f = agent_facing_region(q)
        assert verify_polymatroid(f)


def test_region_values_on_contracted_entangled():
    d = build_topology("Entangled", 1)
    core = frozenset(d.node_ids) - d.leaves
    q = contract(d, ClusterAssignment(clusters=(core,)))
    f = agent_facing_region(q)
    leaves = sorted(d.leaves)
    for l in leaves:
        assert rank(f, (l,)) == 2
    assert rank(f, leaves) == min(9, 3 * 2)
