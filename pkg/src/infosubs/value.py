"""
The value function V and marginal values of information.

V(A) is the expected value of G at the posterior given A's realization.
It is computed three ways that must agree: directly, through the
generalized entropy h = -G, and (for marginals) as an expected Bregman
divergence. Sampling estimators cover the oracle model.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .decision import DecisionProblem, ExpectedScoreFunction, bregman, extended_dot
from .errors import CapExceededError, SamplingError, StructureError
from .info_model import (
    Garbling,
    InformationStructure,
    Partition,
    cell_table,
    garbled_joint,
    join,
    subset_signal,
)

logger = logging.getLogger(__name__)

DEFAULT_SUBSET_CAP = 10


def table_value(g: ExpectedScoreFunction, table: np.ndarray) -> float:
    """
    Sum over rows of mass * G(posterior) for a joint table whose rows are signal outcomes.

    Zero-mass rows are skipped.
    """
    masses = table.sum(axis=1)
    keep = masses > 0
    if not np.any(keep):
        raise StructureError("joint table has no mass")
    posteriors = table[keep] / masses[keep, None]
    return extended_dot(masses[keep], g.values(posteriors))


@dataclass(frozen=True, eq=False)
class ValueContext:
    """A structure paired with an expected-score function; memoizes V on the subsets lattice."""

    structure: InformationStructure
    g: ExpectedScoreFunction
    _cache: dict[frozenset[int], float] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.g.check_outcomes(self.structure.n_outcomes)

    @property
    def n(self) -> int:
        return self.structure.n

    @cached_property
    def bottom(self) -> Partition:
        return Partition.bottom(self.structure.support)

    def signal(self, subset: Iterable[int]) -> Partition:
        return subset_signal(self.structure, subset)

    def subset_value(self, subset: Iterable[int]) -> float:
        """V(A_S), memoized by S."""
        key = frozenset(subset)
        if key not in self._cache:
            self._cache[key] = value_exact(self, self.signal(key))
        return self._cache[key]

    def normalized(self, subset: Iterable[int]) -> float:
        """V(A_S) - V(bottom), the gain over acting on the prior."""
        return self.subset_value(subset) - self.subset_value(())


def value_exact(ctx: ValueContext, p: Partition) -> float:
    """V(p) = sum over cells of P(cell) * G(posterior given cell)."""
    if p.support != ctx.structure.support:
        raise StructureError("partition is not over this structure's support")
    return table_value(ctx.g, cell_table(ctx.structure.joint, p))


def conditional_entropy(ctx: ValueContext, p: Partition) -> float:
    """h(E | p) = sum over cells of P(cell) * h(posterior), with h = -G."""
    table = cell_table(ctx.structure.joint, p)
    masses = table.sum(axis=1)
    entropies = -ctx.g.values(table / masses[:, None])
    return extended_dot(masses, entropies)


def value_garbled(ctx: ValueContext, g: Garbling, b: Partition | None = None) -> float:
    """V(A') or V(A' v B) for a garbling A' of a partition."""
    table = garbled_joint(ctx.structure, g, b)
    return table_value(ctx.g, table.reshape(-1, table.shape[-1]))


def marginal(ctx: ValueContext, a: Partition, b: Partition) -> float:
    """V(a v b) - V(a)."""
    return value_exact(ctx, join(a, b)) - value_exact(ctx, a)


def marginal_garbled(ctx: ValueContext, g: Garbling, b: Partition) -> float:
    """V(A' v B) - V(A') for a garbling A'."""
    return value_garbled(ctx, g, b) - value_garbled(ctx, g)


def marginal_bregman(ctx: ValueContext, a: Partition, b: Partition) -> float:
    """E over (a, b) cells of D_G(p_ab, p_a)."""
    joint = ctx.structure.joint
    fine = join(a, b)
    fine_table = cell_table(joint, fine)
    coarse_table = cell_table(joint, a)
    coarse_of_fine = [a.labels[members[0]] for members in fine.cell_indices]

    terms = []
    for row, parent in zip(fine_table, coarse_of_fine, strict=True):
        mass = float(row.sum())
        p_ab = row / mass
        p_a = coarse_table[parent] / coarse_table[parent].sum()
        terms.append(mass * bregman(ctx.g, p_ab, p_a))
    return math.fsum(terms)


def conditional_value(ctx: ValueContext, given: Partition, cell: int, b: Partition) -> float:
    """
    V^Q(B), where Q is the prior restricted to one cell of ``given`` and renormalized.

    ``b`` is any partition of the full support; only its trace on the cell matters.
    """
    if not 0 <= cell < given.n_cells:
        raise StructureError(f"cell {cell} out of range for {given.n_cells} cells")
    rows = list(given.cell_indices[cell])
    restricted = ctx.structure.joint[rows]
    restricted = restricted / restricted.sum()
    table = np.zeros((b.n_cells, restricted.shape[1]))
    np.add.at(table, b.label_array[rows], restricted)
    return table_value(ctx.g, table)


def hoeffding_sample_size(k_range: float, eps: float, delta: float) -> int:
    """Smallest m with 2 exp(-2 m eps^2 / K^2) <= delta, and at least 1."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise SamplingError(f"eps and delta must lie in (0, 1), got eps={eps}, delta={delta}")
    if not math.isfinite(k_range) or k_range < 0:
        raise SamplingError(f"range K must be finite and nonnegative, got {k_range}")
    return max(1, math.ceil(k_range**2 * math.log(2 / delta) / (2 * eps**2)))


def clamp_posteriors(q: np.ndarray, floor: float) -> np.ndarray:
    """Raise every coordinate to at least ``floor`` and renormalize each row."""
    q = np.maximum(np.asarray(q, dtype=float), floor)
    return q / q.sum(axis=-1, keepdims=True)


def probe_range(
    ctx: ValueContext,
    subset_cap: int = DEFAULT_SUBSET_CAP,
    clamp_floor: float | None = None,
) -> float:
    """
    max - min of G over the posteriors of every subset's cells.

    Raises:
        CapExceededError: If 2^n subsets is too many to enumerate.
    """
    n = ctx.n
    if n > subset_cap:
        raise CapExceededError("range probe", n, subset_cap, f"2^{n} subsets")
    joint = ctx.structure.joint
    posteriors = []
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            table = cell_table(joint, ctx.signal(subset))
            posteriors.append(table / table.sum(axis=1, keepdims=True))
    stacked = np.vstack(posteriors)
    if clamp_floor is not None:
        stacked = clamp_posteriors(stacked, clamp_floor)
    values = ctx.g.values(stacked)
    if not np.all(np.isfinite(values)):
        return math.inf
    return float(np.max(values) - np.min(values))


@dataclass(frozen=True)
class SampledValue:
    """A sampled estimate of V(A_S) and the sample budget that produced it."""

    estimate: float
    samples: int
    k_range: float
    clamped: bool = False

    def __float__(self) -> float:
        return self.estimate


def prior_probability(
    structure: InformationStructure, e: int | None, partial: dict[int, int]
) -> float:
    """P(e, a_i = partial[i] for i in partial); ``e=None`` marginalizes E."""
    rows = np.ones(len(structure.support), dtype=bool)
    for i, a_i in partial.items():
        rows &= structure.support_array[:, i] == a_i
    mass = structure.joint[rows]
    return float(mass.sum() if e is None else mass[:, e].sum())


def value_sampled(
    ctx: ValueContext,
    subset: Iterable[int],
    eps: float,
    delta: float,
    seed: int,
    *,
    k_range: float | None = None,
    clamp_floor: float | None = None,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> SampledValue:
    """
    Estimate V(A_S) from m independent prior draws, m given by the Hoeffding bound.

    Each draw's posterior p(e | a_S) = p(e, a_S) / p(a_S) is computed through the
    prior-probability oracle. With S empty the answer is G(prior) and no draws are made.

    Raises:
        SamplingError: If G's range is unbounded and no clamp floor is configured.
    """
    indices = sorted(set(subset))
    if not indices:
        return SampledValue(ctx.g.value(ctx.structure.prior_marginal), 0, 0.0)

    clamped = False
    K = probe_range(ctx, subset_cap) if k_range is None else k_range
    if not math.isfinite(K):
        if clamp_floor is None:
            raise SamplingError(
                f"{ctx.g.kind} is unbounded on reachable posteriors; configure a clamp floor"
            )
        logger.warning("Clamping posteriors at %g for sampling", clamp_floor)
        clamped = True
        K = probe_range(ctx, subset_cap, clamp_floor)
    m = hoeffding_sample_size(K, eps, delta)
    logger.debug("Sampling V(%s) with m=%d (K=%g, eps=%g, delta=%g)", indices, m, K, eps, delta)

    structure = ctx.structure
    rng = np.random.default_rng(seed)
    probs = np.array([entry.p for entry in structure.prior])
    draws = rng.choice(len(structure.prior), size=m, p=probs / probs.sum())

    memo: dict[tuple[int, ...], float] = {}
    total = []
    for index in draws:
        entry = structure.prior[index]
        observed = tuple(entry.a[i] for i in indices)
        if observed not in memo:
            partial = dict(zip(indices, observed, strict=True))
            marginal_mass = prior_probability(structure, None, partial)
            post = np.array(
                [prior_probability(structure, e, partial) for e in range(structure.n_outcomes)]
            ) / marginal_mass
            if clamped and clamp_floor is not None:
                post = clamp_posteriors(post, clamp_floor)
            memo[observed] = ctx.g.value(post)
        total.append(memo[observed])
    return SampledValue(math.fsum(total) / m, m, K, clamped)


@dataclass(frozen=True)
class DecisionOracles:
    """
    Oracle access for the decision-making model.

    ``sample`` draws (e, a) from the prior, ``decide`` returns the optimal decision
    given the observed coordinates of a subset, and ``utility`` is u(d, e).
    ``utility_range`` bounds max u - min u.
    """

    sample: Callable[[np.random.Generator], tuple[int, tuple[int, ...]]]
    decide: Callable[[tuple[int, ...], tuple[int, ...]], int]
    utility: Callable[[int, int], float]
    utility_range: float


def decision_oracles(structure: InformationStructure, dp: DecisionProblem) -> DecisionOracles:
    """Oracles backed by an explicit structure and decision problem."""
    probs = np.array([entry.p for entry in structure.prior])
    probs = probs / probs.sum()
    memo: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}

    def sample(rng: np.random.Generator) -> tuple[int, tuple[int, ...]]:
        entry = structure.prior[int(rng.choice(len(probs), p=probs))]
        return entry.e, entry.a

    def decide(indices: tuple[int, ...], observed: tuple[int, ...]) -> int:
        key = (indices, observed)
        if key not in memo:
            partial = dict(zip(indices, observed, strict=True))
            weights = np.array(
                [prior_probability(structure, e, partial) for e in range(structure.n_outcomes)]
            )
            memo[key] = int(np.argmax(dp.utility @ weights))
        return memo[key]

    def utility(d: int, e: int) -> float:
        return float(dp.utility[d, e])

    return DecisionOracles(
        sample, decide, utility, float(np.max(dp.utility) - np.min(dp.utility))
    )


def value_sampled_decision(
    oracles: DecisionOracles,
    subset: Iterable[int],
    eps: float,
    delta: float,
    seed: int,
) -> SampledValue:
    """
    Estimate V(A_S) by averaging u(d*(a_S), e) over prior draws; no posteriors are formed.

    Raises:
        SamplingError: If the utility range is unbounded.
    """
    if not math.isfinite(oracles.utility_range):
        raise SamplingError("utility is unbounded; the Hoeffding bound does not apply")
    indices = tuple(sorted(set(subset)))
    m = hoeffding_sample_size(oracles.utility_range, eps, delta)
    rng = np.random.default_rng(seed)
    total = []
    for _ in range(m):
        e, a = oracles.sample(rng)
        d = oracles.decide(indices, tuple(a[i] for i in indices))
        total.append(oracles.utility(d, e))
    return SampledValue(math.fsum(total) / m, m, oracles.utility_range)
