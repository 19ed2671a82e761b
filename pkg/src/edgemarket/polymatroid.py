"""Rank functions over laminar leaf-block families.

The capacity region of a laminar family with per-block capacities is
the polymatroid {x >= 0 : x(S) <= f(S)} where

    f(S) = min over anti-chains A covering S of sum_{v in A} C_v,

optionally truncated by per-leaf governance bounds u_l:

    f'(S) = min over T subset of S of  f(T) + sum_{l in S\\T} u_l.

On laminar families both are computed by one dynamic program over the
containment forest (bounds enter as virtual singleton blocks); the
explicit minimizations survive in tests as oracles.

greedy_welfare_max is the classic greedy for separable concave
maximization over a polymatroid: sorted marginal values admitted while
feasible, with a fully deterministic tie order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .graph import LeafBlockFamily, ServiceDag, is_laminar, leaf_blocks


class RankError(ValueError):
    """Invalid rank-function construction or query."""


@dataclass(frozen=True)
class RankFunction:
    """Laminar family + capacities, with optional leaf truncation bounds."""

    family: LeafBlockFamily
    capacities: tuple[tuple[str, int], ...]      # internal node -> C_v
    leaf_bounds: tuple[tuple[str, int], ...] = ()  # leaf -> u_l

    def __post_init__(self):
        caps = dict(self.capacities)
        for node, _ in self.family.entries:
            if node not in caps:
                raise RankError(f"no capacity for family node {node}")
        for node, c in self.capacities:
            if c <= 0:
                raise RankError(f"capacity of {node} must be positive")
        gs = set(self.family.ground)
        for leaf, u in self.leaf_bounds:
            if leaf not in gs:
                raise RankError(f"bound on unknown leaf {leaf}")
            if u < 0:
                raise RankError(f"negative bound on leaf {leaf}")

    @property
    def ground(self) -> tuple[str, ...]:
        return self.family.ground

    def _blocks(self) -> list[tuple[frozenset[str], int]]:
        """All capacity blocks, truncation bounds included as singletons."""
        caps = dict(self.capacities)
        out = [(blk, caps[node]) for node, blk in self.family.entries]
        out.extend((frozenset((leaf,)), u) for leaf, u in self.leaf_bounds)
        return out

    def rank(self, subset) -> int:
        return rank(self, subset)

    def feasible(self, values: dict[str, int]) -> bool:
        """x in the polymatroid: per-block sums within capacity, bounds kept."""
        gs = set(self.family.ground)
        for leaf, x in values.items():
            if leaf not in gs:
                raise RankError(f"allocation on unknown leaf {leaf}")
            if x < 0:
                return False
        for blk, cap in self._blocks():
            if sum(values.get(l, 0) for l in blk) > cap:
                return False
        return True


def rank_function_from_dag(dag: ServiceDag) -> RankFunction:
    """Rank function of a service DAG.

    Internal leaf blocks come from reachability; every leaf additionally
    contributes its own singleton block carrying the leaf node's
    capacity so that terminal services bind the allocation.
    """
    fam = leaf_blocks(dag)
    rep = is_laminar(fam)
    if not rep:
        raise RankError(f"leaf blocks are not laminar: witness {rep.witness}")
    entries = list(fam.entries)
    caps = [(node, dag.capacity(node)) for node, _ in entries]
    for leaf in fam.ground:
        name = f"leaf:{leaf}"
        entries.append((name, frozenset((leaf,))))
        caps.append((name, dag.capacity(leaf)))
    family = LeafBlockFamily(entries=tuple(entries), ground=fam.ground)
    return RankFunction(family=family, capacities=tuple(caps))


def _forest(blocks: list[tuple[frozenset[str], int]]):
    """Containment forest over laminar blocks; returns (children, roots).

    Blocks are indexed; equal sets are chained by index so the cheaper
    one can still be chosen on the way down.
    """
    order = sorted(range(len(blocks)), key=lambda i: (len(blocks[i][0]), i))
    parent = [-1] * len(blocks)
    for pos, i in enumerate(order):
        bi = blocks[i][0]
        # smallest block at a later position that contains bi strictly,
        # or an equal set later in `order` (dedup chain)
        for j in order[pos + 1:]:
            if bi <= blocks[j][0]:
                parent[i] = j
                break
    children: dict[int, list[int]] = {i: [] for i in range(len(blocks))}
    roots = []
    for i, p in enumerate(parent):
        if p == -1:
            roots.append(i)
        else:
            children[p].append(i)
    return children, roots


def rank(f: RankFunction, subset) -> int:
    """f(S) (or f'(S) with bounds) by DP over the laminar forest."""
    S = frozenset(subset)
    gs = set(f.family.ground)
    unknown = S - gs
    if unknown:
        raise RankError(f"subset contains unknown leaves: {sorted(unknown)}")
    if not S:
        return 0
    blocks = f._blocks()
    lam = is_laminar(LeafBlockFamily(
        entries=tuple((str(i), b) for i, (b, _) in enumerate(blocks)),
        ground=f.family.ground))
    if not lam:
        raise RankError("rank evaluation requires a laminar family")
    children, roots = _forest(blocks)
    INF = float("inf")

    def cover(i: int, need: frozenset[str]) -> float:
        # min cost to cover `need` using block i or blocks below it
        if not need:
            return 0.0
        blk, cap = blocks[i]
        best = float(cap)  # take the block itself
        child_cost = 0.0
        covered: set[str] = set()
        for c in children[i]:
            cblk = blocks[c][0]
            sub = need & cblk
            if sub - covered:
                child_cost += cover(c, frozenset(sub))
                covered |= cblk
            if child_cost >= best:
                break
        if need <= covered and child_cost < best:
            best = child_cost
        return best

    total = 0.0
    remaining = set(S)
    for r in roots:
        blk = blocks[r][0]
        sub = frozenset(remaining & blk)
        if sub:
            total += cover(r, sub)
            remaining -= blk
    if remaining:
        raise RankError(f"no anti-chain covers leaves {sorted(remaining)}")
    if total == INF:
        raise RankError("subset is not coverable by the family")
    return int(total)


def truncate(f: RankFunction, bounds: dict[str, int]) -> RankFunction:
    """Install per-leaf governance bounds u_l (keeps existing ones)."""
    for leaf, u in bounds.items():
        if u < 0:
            raise RankError(f"negative bound on leaf {leaf}")
    merged = dict(f.leaf_bounds)
    for leaf, u in bounds.items():
        merged[leaf] = min(u, merged.get(leaf, u))
    return RankFunction(
        family=f.family,
        capacities=f.capacities,
        leaf_bounds=tuple(sorted(merged.items())),
    )


@dataclass(frozen=True)
class AxiomReport:
    ok: bool
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_polymatroid(f, ground=None, max_ground: int = 12) -> AxiomReport:
    """Exhaustive polymatroid axiom check.

    f may be a RankFunction or any callable frozenset -> number paired
    with an explicit `ground` tuple.  Checks normalization f(empty)=0,
    monotonicity on all nested pairs, and submodularity in the marginal
    form f(S+e) - f(S) >= f(T+e) - f(T) for all S <= T, e not in T.
    """
    if isinstance(f, RankFunction):
        ground = f.family.ground
        fn = lambda S: rank(f, S)
    else:
        if ground is None:
            raise RankError("callable rank needs an explicit ground set")
        fn = f
    n = len(ground)
    if n > max_ground:
        raise RankError(f"ground set too large for exhaustive check ({n})")
    idx = {e: i for i, e in enumerate(ground)}
    vals: dict[int, float] = {}
    for mask in range(1 << n):
        S = frozenset(e for e in ground if mask >> idx[e] & 1)
        vals[mask] = fn(S)
    if vals[0] != 0:
        return AxiomReport(False, f"f(empty set) = {vals[0]} != 0")
    full = (1 << n) - 1
    for mask in range(1 << n):
        rest = full & ~mask
        sub = rest
        # enumerate supersets T = mask | sub
        while True:
            t = mask | sub
            if vals[t] < vals[mask] - 1e-12:
                return AxiomReport(
                    False,
                    f"monotonicity fails: f({_show(mask, ground)}) > "
                    f"f({_show(t, ground)})")
            for i in range(n):
                e = 1 << i
                if t & e:
                    continue
                gain_t = vals[t | e] - vals[t]
                gain_s = vals[mask | e] - vals[mask]
                if gain_s + 1e-12 < gain_t:
                    return AxiomReport(
                        False,
                        f"submodularity fails at e={ground[i]}, "
                        f"S={_show(mask, ground)}, T={_show(t, ground)}")
            if sub == 0:
                break
            sub = (sub - 1) & rest
    return AxiomReport(True)


def _show(mask: int, ground) -> str:
    return "{" + ",".join(e for i, e in enumerate(ground) if mask >> i & 1) + "}"


# --------------------------------------------------------------------------
# Separable welfare maximization


def _check_marginals(values: dict[str, list]) -> None:
    for leaf, ms in values.items():
        prev = None
        for m in ms:
            if m < 0:
                raise RankError(f"negative marginal value on {leaf}")
            if prev is not None and m > prev:
                raise RankError(f"marginals of {leaf} must be non-increasing")
            prev = m


def greedy_welfare_max(f: RankFunction, values: dict[str, list]):
    """Greedy separable-concave maximization over the polymatroid.

    values: leaf -> non-increasing marginal value list.  Admits units in
    (value desc, leaf index asc, unit index asc) order while the
    allocation stays feasible.  Returns ({leaf: tokens}, total).
    """
    ground = f.family.ground
    for leaf in values:
        if leaf not in set(ground):
            raise RankError(f"values on unknown leaf {leaf}")
    _check_marginals(values)
    leaf_pos = {l: i for i, l in enumerate(ground)}
    units = []
    for leaf, ms in values.items():
        for k, m in enumerate(ms):
            units.append((-m, leaf_pos[leaf], k, leaf, m))
    units.sort()
    alloc = {l: 0 for l in ground}
    # incremental feasibility: track remaining slack per block
    blocks = f._blocks()
    by_leaf: dict[str, list[int]] = {l: [] for l in ground}
    slack = []
    for i, (blk, cap) in enumerate(blocks):
        slack.append(cap)
        for l in blk:
            by_leaf[l].append(i)
    total = 0
    for _, _, k, leaf, m in units:
        if alloc[leaf] != k:   # earlier unit of this leaf was rejected
            continue
        if all(slack[i] >= 1 for i in by_leaf[leaf]):
            for i in by_leaf[leaf]:
                slack[i] -= 1
            alloc[leaf] += 1
            total += m
    return {l: x for l, x in alloc.items()}, total


def brute_force_welfare_max(f: RankFunction, values: dict[str, list],
                            max_states: int = 10 ** 6):
    """Oracle: enumerate all feasible integer allocations.

    Ties resolved toward the lexicographically smallest allocation
    vector (ground-set order).
    """
    ground = f.family.ground
    _check_marginals(values)
    per_leaf_max = []
    for l in ground:
        ms = values.get(l, [])
        per_leaf_max.append(min(len(ms), rank(f, frozenset((l,)))))
    states = 1
    for b in per_leaf_max:
        states *= b + 1
        if states > max_states:
            raise RankError("search space too large for brute force")
    prefix = {}
    for l in ground:
        ms = values.get(l, [])
        acc, run = [0], 0
        for m in ms:
            run += m
            acc.append(run)
        prefix[l] = acc
    best_total, best_vec = -1, None
    for vec in itertools.product(*(range(b + 1) for b in per_leaf_max)):
        x = dict(zip(ground, vec))
        if not f.feasible(x):
            continue
        tot = sum(prefix[l][v] for l, v in zip(ground, vec))
        if tot > best_total:
            best_total, best_vec = tot, vec
    if best_vec is None:   # empty ground set
        return {}, 0
    return dict(zip(ground, best_vec)), best_total
