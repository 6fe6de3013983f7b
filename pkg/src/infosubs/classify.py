"""
Substitutes and complements at the weak, moderate and strong levels.

A comparison measures the marginal value of B against a coarser signal A'
and against A itself: ``lhs = V(A' v B) - V(A')`` and ``rhs = V(A v B) - V(A)``.
Substitutes need lhs >= rhs everywhere (diminishing marginal value),
complements lhs <= rhs. The strong level searches garblings and can only
refute.

This module also carries the structural tests: triviality, the geometric
universal-complements condition, joint convexity of D_G, the separating
decision problem and the log-rule conditional-independence check.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any

import numpy as np

from .decision import ExpectedScoreFunction, HullDistance, LogRule, bregman
from .errors import CapExceededError, SeparationRefused, StructureError, VerificationError
from .fixtures import ci
from .info_model import (
    POSTERIOR_TOL,
    Garbling,
    InformationStructure,
    Partition,
    cell_table,
    enumerate_coarsenings,
    join,
    meet,
    row_posteriors,
    subset_signal,
)
from .value import (
    DEFAULT_SUBSET_CAP,
    ValueContext,
    conditional_value,
    marginal,
    marginal_garbled,
    value_exact,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MODERATE_CAP = 8
DEFAULT_BUDGET = 50
ASCENT_SWEEPS = 4
ASCENT_STEPS = (0.5, 0.25, 0.1)


class Mode(StrEnum):
    SUBSTITUTES = "substitutes"
    COMPLEMENTS = "complements"


class Level(StrEnum):
    WEAK = "weak"
    MODERATE = "moderate"
    STRONG = "strong-refutation"


class Verdict(StrEnum):
    HOLDS = "yes"
    FAILS = "no"
    NOT_REFUTED = "no violation found"


class Strictness(StrEnum):
    STRICT = "strict"
    SOMEWHAT = "somewhat-strict"
    NON_STRICT = "non-strict"


class WitnessKind(StrEnum):
    VIOLATES_SUBSTITUTES = "violates-substitutes"
    VIOLATES_COMPLEMENTS = "violates-complements"
    CERTIFIES_SUBSTITUTES = "certifies-substitutes"
    CERTIFIES_COMPLEMENTS = "certifies-complements"


@dataclass(frozen=True)
class Witness:
    """
    One comparison (A', A, B) with its two marginals.

    ``coarse`` is a partition for the weak and moderate levels and a garbling
    for the strong level. ``a_subset`` and ``b_subset`` name the subsets-lattice
    elements A and B (0-based signal indices).
    """

    coarse: Partition | Garbling
    fine: Partition
    other: Partition
    lhs: float
    rhs: float
    a_subset: tuple[int, ...]
    b_subset: tuple[int, ...]
    kind: WitnessKind | None = None

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def replay(self, ctx: ValueContext) -> tuple[float, float]:
        """Recompute (lhs, rhs) from the value function."""
        if isinstance(self.coarse, Garbling):
            lhs = marginal_garbled(ctx, self.coarse, self.other)
        else:
            lhs = marginal(ctx, self.coarse, self.other)
        return lhs, marginal(ctx, self.fine, self.other)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind) if self.kind else None,
            "a-subset": [i + 1 for i in self.a_subset],
            "b-subset": [i + 1 for i in self.b_subset],
            "coarse": self.coarse.to_dict(),
            "fine": self.fine.to_dict(),
            "other": self.other.to_dict(),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
        }


@dataclass
class _Tally:
    """Running extremes of comparison margins, first-in-order on ties within tol."""

    tol: float
    count: int = 0
    positive: int = 0
    negative: int = 0
    lowest: Witness | None = None
    highest: Witness | None = None

    def add(self, witness: Witness) -> None:
        self.count += 1
        if witness.margin > self.tol:
            self.positive += 1
        elif witness.margin < -self.tol:
            self.negative += 1
        self._consider(witness)

    def _consider(self, witness: Witness) -> None:
        margin = witness.margin
        if self.lowest is None or margin < self.lowest.margin - self.tol:
            self.lowest = witness
        if self.highest is None or margin > self.highest.margin + self.tol:
            self.highest = witness

    def merge(self, other: _Tally) -> None:
        """Fold in a tally of comparisons that come later in enumeration order."""
        self.count += other.count
        self.positive += other.positive
        self.negative += other.negative
        for witness in (other.lowest, other.highest):
            if witness is not None:
                self._consider(witness)


@dataclass(frozen=True)
class ClassificationReport:
    """Verdicts, strictness grade and witnesses for one level."""

    level: Level
    substitutes: Verdict
    complements: Verdict
    strictness: Strictness | None
    witnesses: tuple[Witness, ...]
    tolerance: float
    comparisons: int
    bounded: bool = False
    notes: tuple[str, ...] = ()

    @property
    def is_substitutes(self) -> bool:
        return self.substitutes is Verdict.HOLDS

    @property
    def is_complements(self) -> bool:
        return self.complements is Verdict.HOLDS

    def witness(self, kind: WitnessKind) -> Witness | None:
        return next((w for w in self.witnesses if w.kind is kind), None)

    @property
    def summary(self) -> str:
        if self.level is Level.STRONG:
            parts = [f"{mode}: {verdict}" for mode, verdict in self._verdicts()]
            return "; ".join(parts)
        grade = f" ({self.strictness})" if self.strictness else ""
        if self.is_substitutes and self.is_complements:
            return f"substitutes and complements{grade}"
        if self.is_substitutes:
            return f"substitutes{grade}"
        if self.is_complements:
            return f"complements{grade}"
        return "neither substitutes nor complements"

    def _verdicts(self) -> list[tuple[str, Verdict]]:
        return [("substitutes", self.substitutes), ("complements", self.complements)]

    def replay(self, ctx: ValueContext) -> None:
        """
        Check every witness against the value function.

        Raises:
            VerificationError: If a witness does not reproduce its margins.
        """
        for witness in self.witnesses:
            lhs, rhs = witness.replay(ctx)
            if abs(lhs - witness.lhs) > self.tolerance or abs(rhs - witness.rhs) > self.tolerance:
                raise VerificationError(
                    f"witness {witness.kind} replays to ({lhs}, {rhs}), "
                    f"recorded ({witness.lhs}, {witness.rhs})"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": str(self.level),
            "substitutes": str(self.substitutes),
            "complements": str(self.complements),
            "strictness": str(self.strictness) if self.strictness else None,
            "summary": self.summary,
            "tolerance": self.tolerance,
            "comparisons": self.comparisons,
            "bounded-enumeration": self.bounded,
            "notes": list(self.notes),
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _report(level: Level, tally: _Tally, bounded: bool = False) -> ClassificationReport:
    subs = tally.negative == 0
    comps = tally.positive == 0

    def grade(strict_count: int) -> Strictness:
        if strict_count == tally.count and tally.count > 0:
            return Strictness.STRICT
        return Strictness.SOMEWHAT if strict_count else Strictness.NON_STRICT

    strictness: Strictness | None
    if subs and comps:
        strictness = Strictness.NON_STRICT
    elif subs:
        strictness = grade(tally.positive)
    elif comps:
        strictness = grade(tally.negative)
    else:
        strictness = None

    witnesses = []
    if not subs and tally.lowest is not None:
        witnesses.append(replace(tally.lowest, kind=WitnessKind.VIOLATES_SUBSTITUTES))
    if not comps and tally.highest is not None:
        witnesses.append(replace(tally.highest, kind=WitnessKind.VIOLATES_COMPLEMENTS))
    if subs and tally.positive and tally.highest is not None:
        witnesses.append(replace(tally.highest, kind=WitnessKind.CERTIFIES_SUBSTITUTES))
    if comps and tally.negative and tally.lowest is not None:
        witnesses.append(replace(tally.lowest, kind=WitnessKind.CERTIFIES_COMPLEMENTS))

    notes = ("bounded enumeration",) if bounded else ()
    return ClassificationReport(
        level,
        Verdict.HOLDS if subs else Verdict.FAILS,
        Verdict.HOLDS if comps else Verdict.FAILS,
        strictness,
        tuple(witnesses),
        tally.tol,
        tally.count,
        bounded,
        notes,
    )


def _subsets(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def classify_weak(
    ctx: ValueContext,
    tol: float = DEFAULT_TOLERANCE,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> ClassificationReport:
    """
    Submodularity test on the subsets lattice.

    Compares the marginal of each signal i against every S' strictly inside S,
    with i outside S.

    Raises:
        CapExceededError: If n exceeds ``subset_cap``.
    """
    n = ctx.n
    if n > subset_cap:
        raise CapExceededError("subset enumeration", n, subset_cap, f"2^{n} subsets")

    tally = _Tally(tol)
    for s in _subsets(range(n)):
        if not s:
            continue
        for s_prime in _subsets(s):
            if len(s_prime) == len(s):
                continue
            for i in range(n):
                if i in s:
                    continue
                lhs = ctx.subset_value((*s_prime, i)) - ctx.subset_value(s_prime)
                rhs = ctx.subset_value((*s, i)) - ctx.subset_value(s)
                tally.add(
                    Witness(ctx.signal(s_prime), ctx.signal(s), ctx.signal((i,)), lhs, rhs, s, (i,))
                )
    logger.debug("Weak classification: %d comparisons", tally.count)
    return _report(Level.WEAK, tally)


def _bounded_coarsenings(
    ctx: ValueContext, subset: tuple[int, ...], a: Partition
) -> Iterator[Partition]:
    """Subset-induced coarsenings plus every single merge of two cells."""
    for s_prime in _subsets(subset):
        if len(s_prime) < len(subset):
            yield ctx.signal(s_prime)
    for x, y in itertools.combinations(range(a.n_cells), 2):
        yield Partition.from_labels(a.support, [x if label == y else label for label in a.labels])


def _moderate_pair(
    ctx: ValueContext,
    s: tuple[int, ...],
    t: tuple[int, ...],
    tol: float,
    moderate_cap: int,
    meet_lower_bound: bool,
) -> tuple[_Tally, bool]:
    a, b = ctx.signal(s), ctx.signal(t)
    rhs = marginal(ctx, a, b)
    bounded = a.n_cells > moderate_cap
    candidates = (
        _bounded_coarsenings(ctx, s, a) if bounded else enumerate_coarsenings(a, a.n_cells)
    )
    floor = meet(a, b) if meet_lower_bound else None

    tally = _Tally(tol)
    seen: set[tuple[int, ...]] = set()
    for coarse in candidates:
        if coarse.labels == a.labels or coarse.labels in seen:
            continue
        seen.add(coarse.labels)
        if floor is not None and not floor.is_coarser_than(coarse):
            continue
        lhs = value_exact(ctx, join(coarse, b)) - value_exact(ctx, coarse)
        tally.add(Witness(coarse, a, b, lhs, rhs, s, t))
    return tally, bounded


def classify_moderate(
    ctx: ValueContext,
    tol: float = DEFAULT_TOLERANCE,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
    *,
    meet_lower_bound: bool = False,
    threads: int = 1,
) -> ClassificationReport:
    """
    Diminishing or increasing marginal value against every coarsening of A.

    A and B range over disjoint nonempty subsets of signals. When A has more
    than ``moderate_cap`` cells only subset-induced coarsenings and single
    merges are tried and the report is flagged as a bounded enumeration.
    ``meet_lower_bound`` keeps only coarsenings A' with meet(A, B) ⪯ A'.
    """
    n = ctx.n
    pairs = [
        (s, t)
        for s in _subsets(range(n))
        if s
        for t in _subsets([j for j in range(n) if j not in s])
        if t
    ]

    def run(pair: tuple[tuple[int, ...], tuple[int, ...]]) -> tuple[_Tally, bool]:
        return _moderate_pair(ctx, pair[0], pair[1], tol, moderate_cap, meet_lower_bound)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(pair) for pair in pairs]

    tally = _Tally(tol)
    bounded = False
    for partial, partial_bounded in results:
        tally.merge(partial)
        bounded |= partial_bounded
    if bounded:
        logger.warning("Moderate classification used a bounded coarsening enumeration")
    logger.debug("Moderate classification: %d comparisons over %d pairs", tally.count, len(pairs))
    return _report(Level.MODERATE, tally, bounded)


@dataclass(frozen=True)
class StrongRefutation:
    """Result of a garbling search; ``witness`` is None when nothing was found."""

    mode: Mode
    witness: Witness | None
    budget: int
    restarts: int

    @property
    def found(self) -> bool:
        return self.witness is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": str(self.mode),
            "found": self.found,
            "budget": self.budget,
            "restarts": self.restarts,
            "witness": self.witness.to_dict() if self.witness else None,
        }


def _violation(mode: Mode, lhs: float, rhs: float) -> float:
    return rhs - lhs if mode is Mode.SUBSTITUTES else lhs - rhs


@dataclass(frozen=True)
class _GarblingObjective:
    """Violation margin of a candidate garbling matrix of ``a`` against ``b``."""

    ctx: ValueContext
    mode: Mode
    a: Partition
    b: Partition
    rhs: float

    def garbling(self, matrix: np.ndarray) -> Garbling:
        return Garbling(self.a, matrix / matrix.sum(axis=1, keepdims=True))

    def __call__(self, matrix: np.ndarray) -> float:
        lhs = marginal_garbled(self.ctx, self.garbling(matrix), self.b)
        return _violation(self.mode, lhs, self.rhs)


def _ascend(
    score: Callable[[np.ndarray], float], matrix: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Coordinate ascent over garbling rows, moving each row toward random targets."""
    best = score(matrix)
    for _ in range(ASCENT_SWEEPS):
        improved = False
        for row in range(matrix.shape[0]):
            targets = [np.eye(matrix.shape[1])[o] for o in range(matrix.shape[1])]
            targets.append(rng.dirichlet(np.ones(matrix.shape[1])))
            for target in targets:
                for step in ASCENT_STEPS:
                    trial = matrix.copy()
                    trial[row] = (1 - step) * trial[row] + step * target
                    value = score(trial)
                    if value > best:
                        matrix, best, improved = trial, value, True
        if not improved:
            break
    return matrix, best


def refute_strong(
    ctx: ValueContext,
    mode: Mode,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    *,
    tol: float = DEFAULT_TOLERANCE,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
) -> StrongRefutation:
    """
    Search garblings A' of A for a violation of the strong inequality.

    Deterministic coarsenings are tried first (they are garblings); then
    ``budget`` random restarts with coordinate ascent on the violation margin.
    Finding nothing is not a certification.
    """
    if budget < 1:
        raise StructureError(f"budget must be at least 1, got {budget}")

    moderate = classify_moderate(ctx, tol, moderate_cap)
    kind = (
        WitnessKind.VIOLATES_SUBSTITUTES
        if mode is Mode.SUBSTITUTES
        else WitnessKind.VIOLATES_COMPLEMENTS
    )
    found = moderate.witness(kind)
    if found is not None and isinstance(found.coarse, Partition):
        garbling = Garbling.from_coarsening(found.fine, found.coarse)
        return StrongRefutation(mode, replace(found, coarse=garbling), budget, 0)

    n = ctx.n
    pairs = [
        (s, t)
        for s in _subsets(range(n))
        if s
        for t in _subsets([j for j in range(n) if j not in s])
        if t
    ]
    pairs = [(s, t) for s, t in pairs if ctx.signal(s).n_cells >= 2]
    if not pairs:
        return StrongRefutation(mode, None, budget, 0)

    rng = np.random.default_rng(seed)
    best: Witness | None = None
    best_violation = tol
    for restart in range(budget):
        s, t = pairs[restart % len(pairs)]
        a, b = ctx.signal(s), ctx.signal(t)
        rhs = marginal(ctx, a, b)
        objective = _GarblingObjective(ctx, mode, a, b, rhs)
        m = int(rng.integers(2, a.n_cells + 1))
        matrix, violation = _ascend(objective, Garbling.random(a, m, rng).matrix.copy(), rng)
        if violation > best_violation:
            garbling = objective.garbling(matrix)
            lhs = marginal_garbled(ctx, garbling, b)
            best = Witness(garbling, a, b, lhs, rhs, s, t, kind)
            best_violation = violation
    logger.debug("Strong refutation (%s): %d restarts", mode, budget)
    return StrongRefutation(mode, best, budget, budget)


def classify_strong(
    ctx: ValueContext,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    *,
    tol: float = DEFAULT_TOLERANCE,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
) -> ClassificationReport:
    """Refutation-only report for both modes; never claims the strong property holds."""
    results = [
        refute_strong(ctx, mode, budget, seed, tol=tol, moderate_cap=moderate_cap)
        for mode in Mode
    ]
    witnesses = tuple(r.witness for r in results if r.witness is not None)
    subs, comps = (Verdict.FAILS if r.found else Verdict.NOT_REFUTED for r in results)
    return ClassificationReport(
        Level.STRONG,
        subs,
        comps,
        None,
        witnesses,
        tol,
        sum(r.restarts for r in results),
        notes=(f"budget {budget}, seed {seed}",),
    )


@dataclass(frozen=True)
class PointwiseWitness:
    """A realization pair (a', a) at which B's conditional marginal grows."""

    coarse_subset: tuple[int, ...]
    fine_subset: tuple[int, ...]
    other: int
    coarse_realization: tuple[int, ...]
    fine_realization: tuple[int, ...]
    lhs: float
    rhs: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "coarse-subset": [i + 1 for i in self.coarse_subset],
            "fine-subset": [i + 1 for i in self.fine_subset],
            "other": self.other + 1,
            "coarse-realization": list(self.coarse_realization),
            "fine-realization": list(self.fine_realization),
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass(frozen=True)
class PointwiseReport:
    holds: bool
    witness: PointwiseWitness | None
    comparisons: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "holds": self.holds,
            "comparisons": self.comparisons,
            "witness": self.witness.to_dict() if self.witness else None,
        }


def check_pointwise_substitutes(
    ctx: ValueContext,
    tol: float = DEFAULT_TOLERANCE,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> PointwiseReport:
    """
    Diminishing marginal value of each single signal, conditional on every realization.

    For S' strictly inside S, i outside S and every cell a of A_S inside the cell a'
    of A_S', the marginal of A_i under the prior restricted to a' must be at least
    its marginal under the prior restricted to a. The worst violation is returned.
    """
    n = ctx.n
    if n > subset_cap:
        raise CapExceededError("subset enumeration", n, subset_cap, f"2^{n} subsets")
    support = ctx.structure.support

    def local_marginal(given: Partition, cell: int, i: int) -> float:
        bottom = Partition.bottom(support)
        return conditional_value(ctx, given, cell, ctx.signal((i,))) - conditional_value(
            ctx, given, cell, bottom
        )

    worst: PointwiseWitness | None = None
    worst_gap = tol
    count = 0
    for s in _subsets(range(n)):
        if not s:
            continue
        fine = ctx.signal(s)
        for s_prime in _subsets(s):
            if len(s_prime) == len(s):
                continue
            coarse = ctx.signal(s_prime)
            for i in range(n):
                if i in s:
                    continue
                for cell, members in enumerate(fine.cell_indices):
                    parent = coarse.labels[members[0]]
                    lhs = local_marginal(coarse, parent, i)
                    rhs = local_marginal(fine, cell, i)
                    count += 1
                    if rhs - lhs > worst_gap:
                        a = support[members[0]]
                        worst = PointwiseWitness(
                            s_prime,
                            s,
                            i,
                            tuple(a[j] for j in s_prime),
                            tuple(a[j] for j in s),
                            lhs,
                            rhs,
                        )
                        worst_gap = rhs - lhs
    return PointwiseReport(worst is None, worst, count)


class Triviality(StrEnum):
    SUBSTITUTES = "trivial-substitutes"
    COMPLEMENTS = "trivial-complements"
    NEITHER = "neither"


def check_trivial(structure: InformationStructure) -> Triviality:
    """
    Trivial substitutes: every single signal already gives the full posterior.
    Trivial complements: any n-1 signals leave the prior unchanged.
    """
    n = structure.n
    full = row_posteriors(structure.joint, subset_signal(structure, range(n)))
    if all(
        np.max(np.abs(row_posteriors(structure.joint, subset_signal(structure, (i,))) - full))
        <= POSTERIOR_TOL
        for i in range(n)
    ):
        return Triviality.SUBSTITUTES

    prior = structure.prior_marginal
    if all(
        np.max(
            np.abs(
                row_posteriors(
                    structure.joint, subset_signal(structure, [j for j in range(n) if j != i])
                )
                - prior
            )
        )
        <= POSTERIOR_TOL
        for i in range(n)
    ):
        return Triviality.COMPLEMENTS
    return Triviality.NEITHER


@dataclass(frozen=True)
class GeometricReport:
    holds: bool
    radius: float
    min_joint_distance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "holds": self.holds,
            "radius": self.radius,
            "min-joint-distance": self.min_joint_distance,
        }


def universal_complements_geometric(
    structure: InformationStructure, tol: float = DEFAULT_TOLERANCE
) -> GeometricReport:
    """
    Sufficient condition for universal moderate complements of two signals on a binary event.

    r is the largest distance from the prior to a single-signal posterior; the
    test holds when every two-signal posterior is at least 2r from the prior.
    Distances are measured on P(E = second outcome).

    Raises:
        StructureError: Unless E is binary and there are exactly two signals.
    """
    if structure.n_outcomes != 2 or structure.n != 2:
        raise StructureError("geometric test needs a binary event and exactly two signals")

    prior = structure.prior_marginal[1]
    joint = structure.joint

    def distances(partition: Partition) -> np.ndarray:
        table = cell_table(joint, partition)
        return np.abs(table[:, 1] / table.sum(axis=1) - prior)

    radius = max(float(distances(subset_signal(structure, (i,))).max()) for i in range(2))
    closest = float(distances(subset_signal(structure, (0, 1))).min())
    return GeometricReport(closest >= 2 * radius - tol, radius, closest)


@dataclass(frozen=True)
class JointConvexityReport:
    holds: bool
    worst_gap: float
    worst_chord: dict[str, Any] | None = field(default=None)

    def to_dict(self) -> dict[str, Any]:
        return {"holds": self.holds, "worst-gap": self.worst_gap, "worst-chord": self.worst_chord}


def probe_joint_convexity(
    g: ExpectedScoreFunction,
    samples: int = 1000,
    seed: int = 0,
    tol: float = DEFAULT_TOLERANCE,
) -> JointConvexityReport:
    """
    Sample chords in (p, q) space and test D_G for joint convexity.

    A chord violates when D_G at the mixed pair exceeds the mixed divergences by more
    than ``tol``; the worst violation is reported.
    """
    k = g.n_outcomes or 3
    rng = np.random.default_rng(seed)
    worst_gap = -math.inf
    worst: dict[str, Any] | None = None
    for _ in range(samples):
        p1, q1, p2, q2 = rng.dirichlet(np.ones(k), size=4)
        lam = float(rng.random())
        chord = lam * bregman(g, p1, q1) + (1 - lam) * bregman(g, p2, q2)
        mixed = bregman(g, lam * p1 + (1 - lam) * p2, lam * q1 + (1 - lam) * q2)
        gap = mixed - chord
        if gap > worst_gap:
            worst_gap = gap
            worst = {
                "p1": p1.tolist(),
                "q1": q1.tolist(),
                "p2": p2.tolist(),
                "q2": q2.tolist(),
                "lambda": lam,
            }
    holds = worst_gap <= tol
    return JointConvexityReport(holds, worst_gap, None if holds else worst)


def single_signal_posteriors(structure: InformationStructure) -> np.ndarray:
    """Every posterior reachable by observing exactly one signal."""
    rows = []
    for i in range(structure.n):
        table = cell_table(structure.joint, subset_signal(structure, (i,)))
        rows.append(table / table.sum(axis=1, keepdims=True))
    return np.vstack(rows)


def separating_decision_problem(
    structure: InformationStructure,
    tol: float = DEFAULT_TOLERANCE,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> HullDistance:
    """
    G(q) = distance from q to the hull of single-signal posteriors.

    G vanishes on every single-signal posterior, so any single signal is worthless
    while some multi-signal posterior outside the hull has positive value.

    Raises:
        SeparationRefused: If every multi-signal posterior lies inside the hull, or
            the resulting G does not break substitutes.
    """
    g = HullDistance(single_signal_posteriors(structure))
    outside = False
    for size in range(2, structure.n + 1):
        for subset in itertools.combinations(range(structure.n), size):
            table = cell_table(structure.joint, subset_signal(structure, subset))
            if np.any(g.values(table / table.sum(axis=1, keepdims=True)) > tol):
                outside = True
                break
        if outside:
            break
    if not outside:
        raise SeparationRefused(
            "every multi-signal posterior lies in the hull of single-signal posteriors; "
            "the structure is trivial substitutes in this sense"
        )

    report = classify_weak(ValueContext(structure, g), tol, subset_cap)
    if report.is_substitutes:
        raise SeparationRefused("hull-distance G leaves the signals weak substitutes")
    return g


def verify_log_ci_substitutes(
    r: float,
    s: float | Sequence[float],
    n: int = 2,
    tol: float = DEFAULT_TOLERANCE,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
) -> ClassificationReport:
    """
    Conditionally independent signals under the log rule must be substitutes.

    Returns the moderate report after checking both levels.

    Raises:
        VerificationError: If either level fails to report substitutes.
    """
    ctx = ValueContext(ci(r, s, n), LogRule())
    weak = classify_weak(ctx, tol)
    moderate = classify_moderate(ctx, tol, moderate_cap)
    for report in (weak, moderate):
        if not report.is_substitutes:
            witness = report.witness(WitnessKind.VIOLATES_SUBSTITUTES)
            raise VerificationError(
                f"CI(r={r}, s={s}) under the log rule is not {report.level} substitutes; "
                f"margin {witness.margin if witness else float('nan'):.3g}"
            )
    return moderate
