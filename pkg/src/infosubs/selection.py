"""
SIGNAL-SELECTION: choosing which signals to acquire.

Batch selection maximizes V over a feasible family (cardinality, knapsack or
an explicit list of subsets); adaptive selection observes each chosen signal
before picking the next. The module also builds the reduction from a
monotone set function f to a selection instance with V(S) = f(S), and the
planted supermodular instance on which greedy fails.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar, Protocol, runtime_checkable

import numpy as np

from .decision import ExpectedScoreFunction, PiecewiseMax
from .errors import CapExceededError, MonotonicityError, StructureError
from .fixtures import parse_name
from .info_model import InformationStructure, Partition
from .value import ValueContext, conditional_value, table_value

logger = logging.getLogger(__name__)

DEFAULT_SELECTION_CAP = 20
DEFAULT_POLICY_SIGNAL_CAP = 5
DEFAULT_POLICY_K_CAP = 3
PARTIAL_ENUMERATION_SEED_SIZE = 3
MONOTONICITY_EXHAUSTIVE_CAP = 12
MONOTONICITY_PROBES = 2000


@runtime_checkable
class SetFunction(Protocol):
    """A set function on {0, ..., n-1}, called with a frozenset of indices."""

    n: int

    def __call__(self, subset: frozenset[int]) -> float: ...


@dataclass(frozen=True, eq=False)
class ContextValue:
    """V on the subsets lattice of a value context, as a set function."""

    ctx: ValueContext

    @property
    def n(self) -> int:
        return self.ctx.n

    def __call__(self, subset: frozenset[int]) -> float:
        return self.ctx.subset_value(subset)


def as_set_function(source: ValueContext | SetFunction) -> SetFunction:
    return ContextValue(source) if isinstance(source, ValueContext) else source


@dataclass(frozen=True)
class Cardinality:
    k: int

    def validate(self, n: int) -> None:
        if not 0 <= self.k <= n:
            raise StructureError(f"cardinality {self.k} must lie in [0, {n}]")

    def feasible_sets(self, n: int) -> Iterator[tuple[int, ...]]:
        # V is monotone, so sets of exactly k signals dominate smaller ones
        yield from itertools.combinations(range(n), self.k)


@dataclass(frozen=True)
class Knapsack:
    costs: tuple[float, ...]
    budget: float

    def validate(self, n: int) -> None:
        if len(self.costs) != n:
            raise StructureError(f"knapsack has {len(self.costs)} costs for {n} signals")
        if any(c < 0 or not math.isfinite(c) for c in self.costs):
            raise StructureError("knapsack costs must be finite and nonnegative")
        if self.budget < 0:
            raise StructureError(f"budget must be nonnegative, got {self.budget}")

    def cost(self, subset: Iterable[int]) -> float:
        return math.fsum(self.costs[i] for i in subset)

    def feasible_sets(self, n: int) -> Iterator[tuple[int, ...]]:
        for size in range(n + 1):
            for subset in itertools.combinations(range(n), size):
                if self.cost(subset) <= self.budget:
                    yield subset


@dataclass(frozen=True)
class ExplicitFamily:
    family: tuple[frozenset[int], ...]

    def validate(self, n: int) -> None:
        if not self.family:
            raise StructureError("feasible family is empty")
        for subset in self.family:
            if any(not 0 <= i < n for i in subset):
                raise StructureError(f"family member {sorted(subset)} has an index out of range")

    def feasible_sets(self, n: int) -> Iterator[tuple[int, ...]]:
        yield from (tuple(sorted(subset)) for subset in self.family)


Constraint = Cardinality | Knapsack | ExplicitFamily


@dataclass(frozen=True)
class Selection:
    """A chosen subset (sorted), its value and the order in which it was built."""

    subset: tuple[int, ...]
    value: float
    order: tuple[int, ...] = ()
    queries: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "subset": [i + 1 for i in self.subset],
            "order": [i + 1 for i in self.order],
            "value": self.value,
            "queries": self.queries,
        }


def greedy_bound(k: int) -> float:
    """1 - (1 - 1/k)^k, the greedy guarantee for k picks (1 for k <= 1)."""
    return 1.0 if k <= 1 else 1.0 - (1.0 - 1.0 / k) ** k


def knapsack_bound(partial_enumeration: bool = False) -> float:
    """Guarantee of knapsack_select: 1 - 1/e with partial enumeration, half of it without."""
    bound = 1.0 - 1.0 / math.e
    return bound if partial_enumeration else bound / 2


def approximation_ratio(achieved: float, optimum: float, baseline: float = 0.0) -> float:
    """(achieved - baseline) / (optimum - baseline); 1 when the optimum gains nothing."""
    gain = optimum - baseline
    if gain <= 0:
        return 1.0
    return (achieved - baseline) / gain


def brute_force_select(
    source: ValueContext | SetFunction,
    constraint: Constraint,
    cap: int = DEFAULT_SELECTION_CAP,
) -> Selection:
    """
    Exact argmax of V over the feasible family; ties go to the lexicographically first set.

    Raises:
        CapExceededError: If n exceeds ``cap``.
    """
    f = as_set_function(source)
    n = f.n
    if n > cap:
        raise CapExceededError("subset enumeration", n, cap, f"2^{n} subsets")
    constraint.validate(n)

    best: tuple[int, ...] | None = None
    best_value = -math.inf
    queries = 0
    for subset in sorted(constraint.feasible_sets(n)):
        value = f(frozenset(subset))
        queries += 1
        if best is None or value > best_value:
            best, best_value = subset, value
    if best is None:
        raise StructureError("no feasible subset")
    return Selection(best, best_value, best, queries)


def greedy_select(
    source: ValueContext | SetFunction,
    k: int,
    *,
    lazy: bool = True,
) -> Selection:
    """
    k rounds of largest marginal gain, ties to the lowest index.

    With ``lazy`` stale gains sit in a priority queue and are refreshed only when
    they reach the top. That returns the plain greedy choice whenever marginal
    gains only shrink as the set grows; use ``lazy=False`` otherwise.
    """
    f = as_set_function(source)
    n = f.n
    if not 0 <= k <= n:
        raise StructureError(f"k={k} must lie in [0, {n}]")

    chosen: list[int] = []
    current = f(frozenset())
    queries = 1

    if not lazy:
        for _ in range(k):
            best_i, best_gain = -1, -math.inf
            for i in range(n):
                if i in chosen:
                    continue
                gain = f(frozenset((*chosen, i))) - current
                queries += 1
                if gain > best_gain:
                    best_i, best_gain = i, gain
            chosen.append(best_i)
            current = f(frozenset(chosen))
            queries += 1
        return Selection(tuple(sorted(chosen)), current, tuple(chosen), queries)

    heap: list[tuple[float, int, int]] = []
    for i in range(n):
        heap.append((-(f(frozenset((i,))) - current), i, 0))
        queries += 1
    heapq.heapify(heap)
    for round_ in range(k):
        while True:
            _, i, stamp = heapq.heappop(heap)
            if stamp == round_:
                break
            gain = f(frozenset((*chosen, i))) - current
            queries += 1
            heapq.heappush(heap, (-gain, i, round_))
        chosen.append(i)
        current = f(frozenset(chosen))
        queries += 1
    logger.debug("Greedy selection: %d oracle queries", queries)
    return Selection(tuple(sorted(chosen)), current, tuple(chosen), queries)


def _ratio(gain: float, cost: float) -> float:
    if cost > 0:
        return gain / cost
    return math.inf if gain > 0 else gain


def _cost_benefit_greedy(
    f: SetFunction, costs: Sequence[float], budget: float, seed: tuple[int, ...] = ()
) -> tuple[list[int], float, int]:
    chosen = list(seed)
    spent = math.fsum(costs[i] for i in chosen)
    current = f(frozenset(chosen))
    queries = 1
    while True:
        best_i, best_ratio, best_value = -1, -math.inf, current
        for i in range(f.n):
            if i in chosen or spent + costs[i] > budget:
                continue
            value = f(frozenset((*chosen, i)))
            queries += 1
            gain = value - current
            ratio = _ratio(gain, costs[i])
            if ratio > best_ratio:
                best_i, best_ratio, best_value = i, ratio, value
        if best_i < 0 or best_ratio <= 0:
            return chosen, current, queries
        chosen.append(best_i)
        spent += costs[best_i]
        current = best_value


def knapsack_select(
    source: ValueContext | SetFunction,
    costs: Sequence[float],
    budget: float,
    *,
    partial_enumeration: bool = False,
) -> Selection:
    """
    Better of cost-benefit greedy and the best affordable single signal.

    ``partial_enumeration`` also runs the greedy from every affordable seed of up to
    three signals, at the price of O(n^3) extra greedy runs.
    """
    f = as_set_function(source)
    constraint = Knapsack(tuple(float(c) for c in costs), float(budget))
    constraint.validate(f.n)

    chosen, value, queries = _cost_benefit_greedy(f, constraint.costs, budget)
    best = (tuple(chosen), value)
    for i in range(f.n):
        if constraint.costs[i] <= budget:
            single = f(frozenset((i,)))
            queries += 1
            if single > best[1]:
                best = ((i,), single)

    if partial_enumeration:
        for size in range(1, PARTIAL_ENUMERATION_SEED_SIZE + 1):
            for seed in itertools.combinations(range(f.n), size):
                if constraint.cost(seed) > budget:
                    continue
                chosen, value, extra = _cost_benefit_greedy(f, constraint.costs, budget, seed)
                queries += extra
                if value > best[1]:
                    best = (tuple(chosen), value)
    return Selection(tuple(sorted(best[0])), best[1], best[0], queries)


@dataclass(frozen=True)
class AdaptiveRun:
    """One branch of the adaptive greedy policy."""

    chosen: tuple[int, ...]
    observed: tuple[int, ...]
    posterior: tuple[float, ...]
    decision: str
    utility: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "chosen": [i + 1 for i in self.chosen],
            "observed": list(self.observed),
            "posterior": list(self.posterior),
            "decision": self.decision,
            "utility": self.utility,
        }


def _greedy_step(ctx: ValueContext, given: Partition, cell: int, remaining: Iterable[int]) -> int:
    best_j, best_value = -1, -math.inf
    for j in remaining:
        value = conditional_value(ctx, given, cell, ctx.signal((j,)))
        if value > best_value:
            best_j, best_value = j, value
    return best_j


def adaptive_greedy(
    ctx: ValueContext, k: int, realization: tuple[int, Sequence[int]]
) -> AdaptiveRun:
    """
    Run the adaptive greedy policy on one realization ``(e, a)``.

    At each step pick the signal with the largest value under the current
    posterior (ties to the lowest index), observe it and update. The final
    decision is the best response to the last posterior; for a G that is not a
    decision problem the report is the posterior itself.
    """
    n = ctx.n
    if not 0 <= k <= n:
        raise StructureError(f"k={k} must lie in [0, {n}]")
    e, a = realization[0], tuple(realization[1])
    if a not in ctx.structure.support_index:
        raise StructureError(f"realization {a} is not in the support")

    chosen: list[int] = []
    position = ctx.structure.support_index[a]
    for _ in range(k):
        given = ctx.signal(chosen)
        remaining = [j for j in range(n) if j not in chosen]
        chosen.append(_greedy_step(ctx, given, given.labels[position], remaining))

    final = ctx.signal(chosen)
    rows = list(final.cell_indices[final.labels[position]])
    weights = ctx.structure.joint[rows].sum(axis=0)
    q = weights / weights.sum()
    if isinstance(ctx.g, PiecewiseMax):
        d = ctx.g.best_decision(q)
        label = ctx.g.decisions[d]
        utility = float(ctx.g.utility[d, e])
    else:
        label = "report posterior"
        utility = ctx.g.score(q, e)
    return AdaptiveRun(
        tuple(chosen), tuple(a[j] for j in chosen), tuple(q.tolist()), label, utility
    )


def _leaf_value(ctx: ValueContext, rows: Sequence[int]) -> float:
    return table_value(ctx.g, ctx.structure.joint[list(rows)].sum(axis=0, keepdims=True))


def _split(
    structure: InformationStructure, rows: Sequence[int], j: int
) -> list[tuple[int, ...]]:
    branches: dict[int, list[int]] = {}
    for row in rows:
        branches.setdefault(int(structure.support_array[row, j]), []).append(row)
    return [tuple(branches[key]) for key in sorted(branches)]


def adaptive_greedy_value(ctx: ValueContext, k: int) -> float:
    """Exact expected utility of the adaptive greedy policy, by walking its decision tree."""
    n = ctx.n
    if not 0 <= k <= n:
        raise StructureError(f"k={k} must lie in [0, {n}]")
    structure = ctx.structure
    bottom_rows = tuple(range(len(structure.support)))

    def walk(rows: tuple[int, ...], chosen: tuple[int, ...]) -> float:
        if len(chosen) == k:
            return _leaf_value(ctx, rows)
        given = Partition.from_labels(
            structure.support, [0 if i in rows else 1 for i in range(len(structure.support))]
        )
        remaining = [j for j in range(n) if j not in chosen]
        j = _greedy_step(ctx, given, given.labels[rows[0]], remaining)
        return math.fsum(walk(branch, (*chosen, j)) for branch in _split(structure, rows, j))

    return walk(bottom_rows, ())


def brute_force_policy(
    ctx: ValueContext,
    k: int,
    signal_cap: int = DEFAULT_POLICY_SIGNAL_CAP,
    k_cap: int = DEFAULT_POLICY_K_CAP,
) -> float:
    """
    Optimal expected value over all adaptive policies that observe k signals.

    Raises:
        CapExceededError: If n or k exceeds its cap.
    """
    n = ctx.n
    if n > signal_cap:
        raise CapExceededError("adaptive policy enumeration", n, signal_cap)
    if k > k_cap:
        raise CapExceededError("adaptive policy depth", k, k_cap)
    if not 0 <= k <= n:
        raise StructureError(f"k={k} must lie in [0, {n}]")
    structure = ctx.structure
    memo: dict[tuple[tuple[int, ...], frozenset[int]], float] = {}

    def best(rows: tuple[int, ...], chosen: frozenset[int]) -> float:
        key = (rows, chosen)
        if key not in memo:
            if len(chosen) == k:
                memo[key] = _leaf_value(ctx, rows)
            else:
                memo[key] = max(
                    math.fsum(best(branch, chosen | {j}) for branch in _split(structure, rows, j))
                    for j in range(n)
                    if j not in chosen
                )
        return memo[key]

    return best(tuple(range(len(structure.support))), frozenset())


@dataclass(frozen=True, eq=False)
class ModularSetFunction:
    """f(S) = sum of weights over S."""

    weights: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.weights)

    def __call__(self, subset: frozenset[int]) -> float:
        return math.fsum(self.weights[i] for i in subset)


@dataclass(frozen=True, eq=False)
class OrSetFunction:
    """f(S) = 1 if S is nonempty else 0."""

    n: int

    def __call__(self, subset: frozenset[int]) -> float:
        return 1.0 if subset else 0.0


@dataclass(frozen=True, eq=False)
class TableSetFunction:
    """A set function given by an explicit table over all subsets."""

    n: int
    table: dict[frozenset[int], float]

    def __call__(self, subset: frozenset[int]) -> float:
        return self.table[frozenset(subset)]


def random_monotone_set_function(n: int, rng: np.random.Generator) -> TableSetFunction:
    """Running maximum of random half-integers over subsets, hence monotone."""
    table: dict[frozenset[int], float] = {}
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            key = frozenset(subset)
            h = float(rng.integers(0, 2 * n + 1)) / 2
            below = [table[key - {i}] for i in subset]
            table[key] = max([h, *below])
    return TableSetFunction(n, table)


@dataclass(eq=False)
class HardnessInstance:
    """
    f(S) = 0 for |S| <= k except f(S*) = 0.5, and f(S) = |S| - k above k.

    Every call is counted; the counter is safe to share across threads.
    """

    n: int
    k: int
    planted: frozenset[int]
    queries: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __call__(self, subset: frozenset[int]) -> float:
        with self._lock:
            self.queries += 1
        size = len(subset)
        if size > self.k:
            return float(size - self.k)
        return 0.5 if frozenset(subset) == self.planted else 0.0


def supermodular_hardness_instance(n: int, k: int, seed: int) -> HardnessInstance:
    """A hardness instance with S* drawn uniformly among the k-subsets."""
    if not 0 < k <= n:
        raise StructureError(f"k={k} must lie in (0, {n}]")
    rng = np.random.default_rng(seed)
    planted = frozenset(int(i) for i in rng.choice(n, size=k, replace=False))
    return HardnessInstance(n, k, planted)


def _corners(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float).reshape(2**n, n)


@dataclass(frozen=True, eq=False)
class HypercubeF(ExpectedScoreFunction):
    """
    G for the reduction from a set function: E is a corner of {0,1}^n.

    With mu the posterior mean, G(q) = f({i : mu_i is 0 or 1}). The subgradient is
    the score vector of the report: f(S) on corners that agree with mu on S, -inf
    elsewhere.
    """

    kind: ClassVar[str] = "hypercube-f"

    f: SetFunction

    def __post_init__(self) -> None:
        self.probe_convexity()

    @property
    def n_outcomes(self) -> int:
        return 2**self.f.n

    @cached_property
    def corners(self) -> np.ndarray:
        corners = _corners(self.f.n)
        corners.flags.writeable = False
        return corners

    def fixed_coordinates(self, mu: np.ndarray) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero((mu == 0.0) | (mu == 1.0)))

    def values(self, q: np.ndarray) -> np.ndarray:
        mus = np.atleast_2d(q) @ self.corners
        return np.array([self.f(self.fixed_coordinates(mu)) for mu in mus])

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        mus = np.atleast_2d(q) @ self.corners
        rows = []
        for mu in mus:
            fixed = sorted(self.fixed_coordinates(mu))
            consistent = np.all(self.corners[:, fixed] == mu[fixed], axis=1)
            rows.append(np.where(consistent, self.f(frozenset(fixed)), -math.inf))
        return np.array(rows)

    def F(self, r: Sequence[float]) -> float:
        """The convex function on [0,1]^n: f of the coordinates sitting at 0 or 1."""
        return self.f(self.fixed_coordinates(np.asarray(r, dtype=float)))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "n": self.f.n}


def check_monotone(f: SetFunction, rng: np.random.Generator | None = None) -> None:
    """
    Probe f(S) <= f(S + i); exhaustive for small n, random pairs otherwise.

    Raises:
        MonotonicityError: On the first violating pair found.
    """
    n = f.n
    if n <= MONOTONICITY_EXHAUSTIVE_CAP:
        pairs: Iterable[tuple[frozenset[int], int]] = (
            (frozenset(subset), i)
            for size in range(n)
            for subset in itertools.combinations(range(n), size)
            for i in range(n)
            if i not in subset
        )
    else:
        rng = rng or np.random.default_rng(0)
        pairs = []
        for _ in range(MONOTONICITY_PROBES):
            mask = rng.random(n) < 0.5
            outside = np.flatnonzero(~mask)
            if outside.size:
                pairs.append((frozenset(np.flatnonzero(mask).tolist()), int(rng.choice(outside))))
    for subset, i in pairs:
        low, high = f(subset), f(subset | {i})
        if low > high:
            raise MonotonicityError(subset, i, low, high)


@dataclass(frozen=True, eq=False)
class ReducedInstance:
    """
    A selection instance whose value function equals a given monotone f.

    Signals are n independent uniform bits and E is the whole bit vector.
    """

    f: SetFunction
    structure: InformationStructure
    g: HypercubeF

    @property
    def n(self) -> int:
        return self.f.n

    @cached_property
    def ctx(self) -> ValueContext:
        return ValueContext(self.structure, self.g)

    def F(self, r: Sequence[float]) -> float:
        return self.g.F(r)

    def mu(self, subset: Iterable[int], realization: Sequence[int]) -> np.ndarray:
        """Posterior mean of E given the bits in ``subset``: observed bits fixed, others 1/2."""
        indices = set(subset)
        return np.array([float(realization[i]) if i in indices else 0.5 for i in range(self.n)])

    def R(self, mu: np.ndarray, e: int) -> float:
        """Score of reporting mean ``mu`` when the corner with index ``e`` occurs."""
        fixed = sorted(self.g.fixed_coordinates(mu))
        corner = self.g.corners[e]
        if np.all(corner[fixed] == mu[fixed]):
            return self.f(frozenset(fixed))
        return -math.inf

    def value(self, subset: Iterable[int]) -> float:
        return self.ctx.subset_value(subset)

    def verify(self) -> list[tuple[tuple[int, ...], float, float]]:
        """Every S with V(S) != f(S), as (S, V(S), f(S)); empty when the reduction is exact."""
        mismatches = []
        for size in range(self.n + 1):
            for subset in itertools.combinations(range(self.n), size):
                v, target = self.value(subset), self.f(frozenset(subset))
                if v != target:
                    mismatches.append((subset, v, target))
        return mismatches


def reduce_from_set_function(f: SetFunction, *, check: bool = True) -> ReducedInstance:
    """
    Build the selection instance for a monotone set function.

    Raises:
        MonotonicityError: If the monotonicity probe finds f(S) > f(S + i).
    """
    if check:
        check_monotone(f)
    n = f.n
    labels = tuple("".join(corner) for corner in itertools.product("01", repeat=n))
    structure = InformationStructure.from_table(
        labels,
        [(f"bit{i + 1}", ("0", "1")) for i in range(n)],
        [(label, tuple(label), 1.0 / 2**n) for label in labels],
    )
    return ReducedInstance(f, structure, HypercubeF(f))


def parse_set_function(text: str) -> SetFunction:
    """
    Build a registered set function.

    ``modular:w1,w2,...``, ``cardinality:n``, ``or:n``, ``random:n:seed``,
    ``hardness:n:k:seed``.
    """
    ref = parse_name(text)
    parts = (ref.arg or "").split(":")
    try:
        if ref.name == "modular":
            return ModularSetFunction(tuple(float(w) for w in parts[0].split(",")))
        if ref.name == "cardinality":
            return ModularSetFunction((1.0,) * int(parts[0]))
        if ref.name == "or":
            return OrSetFunction(int(parts[0]))
        if ref.name == "random":
            seed = int(parts[1]) if len(parts) > 1 else 0
            return random_monotone_set_function(int(parts[0]), np.random.default_rng(seed))
        if ref.name == "hardness":
            return supermodular_hardness_instance(int(parts[0]), int(parts[1]), int(parts[2]))
    except (ValueError, IndexError):
        raise StructureError(f"malformed set function '{text}'") from None
    raise StructureError(
        f"unknown set function '{ref.name}'. Available: {sorted(SET_FUNCTIONS)}"
    )


SET_FUNCTIONS = {
    "modular": "modular:w1,w2,...: f(S) = sum of weights",
    "cardinality": "cardinality:n: f(S) = |S|",
    "or": "or:n: f(S) = 1 if S is nonempty",
    "random": "random:n:seed: random monotone f",
    "hardness": "hardness:n:k:seed: planted supermodular instance",
}
