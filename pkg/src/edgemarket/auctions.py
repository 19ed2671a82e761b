"""Desk-scale slice auctions: GS demand, VCG, DSIC grids, clinching.

Everything here is exhaustive and exact over small integer instances —
these are verification instruments, not production mechanisms.  Demand
ties always break toward the lowest slice index so that price-taking
behaviour (and therefore Walrasian verification) is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .polymatroid import RankFunction


class AuctionError(ValueError):
    """Instance outside the exhaustive regime or malformed market."""


@dataclass(frozen=True)
class SliceType:
    name: str
    latency_ms: float
    quality: float


@dataclass(frozen=True)
class SliceMarket:
    """K slice types, an integer polymatroid supply, unit-demand bidders.

    Each bidder is a length-K tuple of integer values in {0..v_max}.
    """

    types: tuple[SliceType, ...]
    supply: RankFunction
    bidders: tuple[tuple[int, ...], ...]
    v_max: int = 6

    def __post_init__(self):
        k = len(self.types)
        if k < 1:
            raise AuctionError("need at least one slice type")
        names = tuple(t.name for t in self.types)
        if len(set(names)) != k:
            raise AuctionError("duplicate slice-type names")
        if set(self.supply.family.ground) != set(names):
            raise AuctionError("supply ground set must match slice types")
        for i, vals in enumerate(self.bidders):
            if len(vals) != k:
                raise AuctionError(f"bidder {i} has wrong arity")
            for v in vals:
                if not (0 <= v <= self.v_max):
                    raise AuctionError(
                        f"bidder {i} value {v} outside 0..{self.v_max}")

    @property
    def k(self) -> int:
        return len(self.types)

    def type_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.types)

    def counts_feasible(self, counts) -> bool:
        names = self.type_names()
        return self.supply.feasible(
            {names[s]: c for s, c in enumerate(counts)})


@dataclass(frozen=True)
class AuctionOutcome:
    """assignment[i] = slice index or None; payments aligned to bidders."""

    assignment: tuple[int | None, ...]
    payments: tuple[int, ...]
    prices: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.assignment) != len(self.payments):
            raise AuctionError("assignment/payment arity mismatch")
        for a, p in zip(self.assignment, self.payments):
            if a is None and p != 0:
                raise AuctionError("unassigned bidder with nonzero payment")


def demand(valuation, prices) -> int | None:
    """Preferred slice at the given prices.

    Strictly positive surplus required; ties break to the lowest index;
    None when nothing clears the bar.
    """
    if any(p < 0 for p in prices):
        raise AuctionError("negative price")
    best, best_s = None, 0
    for i, (v, p) in enumerate(zip(valuation, prices)):
        s = v - p
        if s > 0 and (best is None or s > best_s):
            best, best_s = i, s
    return best


def _bundle_fn(valuation, k: int):
    if isinstance(valuation, dict):
        table = {frozenset(b): v for b, v in valuation.items()}
        table.setdefault(frozenset(), 0)
        return lambda b: table.get(b, 0)
    vec = tuple(valuation)
    # unit demand with free disposal: a bundle is worth its best item
    return lambda b: max((vec[i] for i in b), default=0)


def _demand_bundles(value_of, k: int, prices) -> list[frozenset[int]]:
    best, out = None, []
    for r in range(k + 1):
        for b in itertools.combinations(range(k), r):
            bs = frozenset(b)
            s = value_of(bs) - sum(prices[i] for i in bs)
            if best is None or s > best:
                best, out = s, [bs]
            elif s == best:
                out.append(bs)
    return out


def gs_check(valuation, price_grid_max: int, k: int | None = None) -> bool:
    """Exhaustive gross-substitutes check over an integer price grid.

    valuation: length-K value vector (unit demand) or bundle dict
    {frozenset of indices: value}.  For every grid price vector and
    every single-item increase, each optimal bundle must keep its
    unchanged-price items inside some optimal bundle at the new prices.
    """
    if k is None:
        if isinstance(valuation, dict):
            k = max((max(b) + 1 for b in valuation if b), default=1)
        else:
            k = len(valuation)
    if k > 4 or price_grid_max > 8:
        raise AuctionError("price grid too large for exhaustive check")
    value_of = _bundle_fn(valuation, k)
    grid = range(price_grid_max + 1)
    for prices in itertools.product(grid, repeat=k):
        before = _demand_bundles(value_of, k, prices)
        for j in range(k):
            bumped = list(prices)
            bumped[j] += 1
            after = _demand_bundles(value_of, k, bumped)
            for b in before:
                keep = b - {j}
                if not any(keep <= b2 for b2 in after):
                    return False
    return True


def _max_welfare(supply_feasible, k: int, value_vectors):
    """Exhaustive welfare max; returns (assignment tuple, total).

    Ties break lexicographically (bidder 0 first) with slice indices
    before None.
    """
    n = len(value_vectors)
    options = list(range(k)) + [None]
    best_total, best_assign = -1, None
    for assign in itertools.product(options, repeat=n):
        counts = [0] * k
        for a in assign:
            if a is not None:
                counts[a] += 1
        if not supply_feasible(counts):
            continue
        total = sum(value_vectors[i][a]
                    for i, a in enumerate(assign) if a is not None)
        if total > best_total:
            best_total, best_assign = total, assign
    if best_assign is None:
        raise AuctionError("no feasible assignment (not even all-None)")
    return best_assign, best_total


def _check_exhaustive_regime(market: SliceMarket) -> None:
    if len(market.bidders) > 6 or market.k > 4:
        raise AuctionError("instance too large for exhaustive solver")
    full = market.supply.rank(market.supply.family.ground)
    if full > 5:
        raise AuctionError("supply rank too large for exhaustive solver")


def welfare_max(market: SliceMarket):
    """Exact welfare-maximising assignment over the polymatroid supply."""
    _check_exhaustive_regime(market)
    return _max_welfare(market.counts_feasible, market.k, market.bidders)


def vcg(market: SliceMarket) -> AuctionOutcome:
    """VCG: efficient assignment, externality payments, never negative."""
    assign, total = welfare_max(market)
    payments = []
    for i in range(len(market.bidders)):
        others = [v for j, v in enumerate(market.bidders) if j != i]
        _, w_without = _max_welfare(market.counts_feasible, market.k, others)
        own = market.bidders[i][assign[i]] if assign[i] is not None else 0
        payments.append(w_without - (total - own))
    return AuctionOutcome(assignment=assign, payments=tuple(payments))


def walrasian_verify(prices, assignment, market: SliceMarket) -> bool:
    """Prices support the assignment as a Walrasian equilibrium.

    Demand optimality for every bidder (assigned surplus maximal and
    non-negative; unassigned bidders see no strictly positive surplus)
    plus supply tightness on every type with a positive price.
    """
    k = market.k
    counts = [0] * k
    for i, a in enumerate(assignment):
        vals = market.bidders[i]
        surpluses = [v - p for v, p in zip(vals, prices)]
        if a is None:
            if max(surpluses) > 0:
                return False
        else:
            s = surpluses[a]
            if s < 0 or s < max(surpluses):
                return False
            counts[a] += 1
    if not market.counts_feasible(counts):
        return False
    for s in range(k):
        if prices[s] > 0:
            bumped = list(counts)
            bumped[s] += 1
            if market.counts_feasible(bumped):
                return False   # positive price but slack supply
    return True


# --------------------------------------------------------------------------
# Polymatroid clinching (single designated type per bidder)


def _designated_types(market: SliceMarket) -> list[int]:
    out = []
    for i, vals in enumerate(market.bidders):
        positive = [s for s, v in enumerate(vals) if v > 0]
        if len(positive) != 1:
            raise AuctionError(
                f"bidder {i} must value exactly one slice type")
        out.append(positive[0])
    return out


def _max_units(market: SliceMarket, members, types, base_counts) -> int:
    """Max total units awardable to `members` on top of base_counts."""
    k = market.k
    want = [0] * k
    for i in members:
        want[types[i]] += 1
    best = 0
    for extra in itertools.product(*(range(w + 1) for w in want)):
        counts = [b + e for b, e in zip(base_counts, extra)]
        if market.counts_feasible(counts):
            best = max(best, sum(extra))
    return best


def clinching_auction(market: SliceMarket,
                      supply: RankFunction | None = None) -> AuctionOutcome:
    """Ascending-clock clinching over a polymatroid supply.

    Unit price steps.  At each price, unclinched bidders whose value the
    clock has reached exit (highest index first, clinch pass after each
    exit); a bidder clinches one unit at the current price as soon as
    the capacity its rivals can absorb leaves a unit over.  Individually
    rational and weakly budget balanced by construction.
    """
    if supply is not None and supply is not market.supply:
        market = SliceMarket(types=market.types, supply=supply,
                             bidders=market.bidders, v_max=market.v_max)
    _check_exhaustive_regime(market)
    types = _designated_types(market)
    n = len(market.bidders)
    values = [market.bidders[i][types[i]] for i in range(n)]
    active = set(range(n))           # in the auction, unclinched
    assignment: list[int | None] = [None] * n
    payments = [0] * n
    counts = [0] * market.k          # clinched units per type

    def clinch_pass(price: int) -> None:
        changed = True
        while changed:
            changed = False
            for i in sorted(active):
                rivals = [j for j in active if j != i]
                total = _max_units(market, list(active), types, counts)
                rival = _max_units(market, rivals, types, counts)
                if total - rival >= 1:
                    assignment[i] = types[i]
                    payments[i] = price
                    bumped = list(counts)
                    bumped[types[i]] += 1
                    if not market.counts_feasible(bumped):
                        raise AuctionError("clinch computed infeasible unit")
                    counts[types[i]] += 1
                    active.remove(i)
                    changed = True
                    break

    price = 0
    clinch_pass(price)
    while active:
        # exits at this price: clock has reached these bidders' values
        exiting = sorted((i for i in active if values[i] <= price),
                         reverse=True)
        for i in exiting:
            if i in active:
                active.remove(i)
                clinch_pass(price)
        if not active:
            break
        clinch_pass(price)
        price += 1
    return AuctionOutcome(assignment=tuple(assignment),
                          payments=tuple(payments))


# --------------------------------------------------------------------------
# DSIC verification


@dataclass(frozen=True)
class DsicViolation:
    bidder: int
    truthful_utility: int
    misreport: tuple[int, ...]
    misreport_utility: int


def _utility(true_values, outcome: AuctionOutcome, i: int) -> int:
    a = outcome.assignment[i]
    if a is None:
        return -outcome.payments[i] if outcome.payments[i] else 0
    return true_values[a] - outcome.payments[i]


def dsic_test(market: SliceMarket, mechanism) -> DsicViolation | None:
    """Exhaustive misreport grids; returns the first violation found.

    mechanism: "vcg", "clinching", or a callable market -> outcome.
    For clinching, misreports range only over the bidder's designated
    type (the single-type shape is part of the format).
    """
    if market.v_max > 6:
        raise AuctionError("value grid too large for exhaustive misreports")
    if mechanism == "vcg":
        run, single_type = vcg, False
    elif mechanism == "clinching":
        run, single_type = clinching_auction, True
        _designated_types(market)
    else:
        run, single_type = mechanism, False
    truthful = run(market)
    grid = range(market.v_max + 1)
    for i, true_vals in enumerate(market.bidders):
        u_true = _utility(true_vals, truthful, i)
        if single_type:
            t = next(s for s, v in enumerate(true_vals) if v > 0)
            reports = []
            for v in grid:
                vec = [0] * market.k
                vec[t] = v
                reports.append(tuple(vec))
            # a zero report on the designated type is an abstention and
            # leaves the single-type shape; model it as value 0 exit
            reports = [r for r in reports if r[t] > 0]
        else:
            reports = list(itertools.product(grid, repeat=market.k))
        for rep in reports:
            if rep == true_vals:
                continue
            bidders = list(market.bidders)
            bidders[i] = rep
            try:
                outcome = run(SliceMarket(
                    types=market.types, supply=market.supply,
                    bidders=tuple(bidders), v_max=market.v_max))
            except AuctionError:
                continue   # misreport leaves the mechanism's domain
            u_dev = _utility(true_vals, outcome, i)
            if u_dev > u_true:
                return DsicViolation(bidder=i, truthful_utility=u_true,
                                     misreport=rep, misreport_utility=u_dev)
    return None
