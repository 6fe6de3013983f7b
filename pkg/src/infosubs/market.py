"""
Finite market-scoring-rule games.

Traders hold subsets of the signals and move in a fixed order; at each slot
the mover posts a new prediction and is paid S(new, e) - S(old, e). Runs are
replayed exactly: observers invert each report through the price map of the
profile they believe is being played, so a Truthful trader reports the
posterior on their own signal plus everything inferable from the history.

Equilibrium checks enumerate single-trader deviations drawn from a finite
class (truthful, silent, coarsened and seeded garbled reports per slot); a
passing check means "deviation-proof within the class", not a certified
equilibrium.
"""

from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar

import numpy as np

from .classify import (
    DEFAULT_BUDGET,
    DEFAULT_MODERATE_CAP,
    DEFAULT_TOLERANCE,
    Mode,
    Witness,
    WitnessKind,
    classify_moderate,
    refute_strong,
)
from .decision import extended_dot
from .errors import ProfileError, StructureError
from .info_model import (
    DEFAULT_COARSENING_CAP,
    Distinguishability,
    Garbling,
    Partition,
    enumerate_coarsenings,
    is_distinguishable,
)
from .value import ValueContext

logger = logging.getLogger(__name__)

PRICE_TOL = 1e-12
DEFAULT_GARBLED_DEVIATIONS = 20


class ReportRule(ABC):
    """How a trader turns what they know at a slot into a report."""

    name: ClassVar[str] = "abstract"

    def validate(self, own: Partition) -> None:
        """Raise ProfileError if the rule uses information the trader does not hold."""

    @property
    def n_draws(self) -> int:
        return 1

    def draw_probability(self, row: int, draw: int) -> float:
        return 1.0

    @abstractmethod
    def weights(self, own: Partition, row: int, draw: int) -> np.ndarray | None:
        """Likelihood over support rows of what is revealed; None repeats the current price."""

    @property
    def label(self) -> str:
        return self.name

    def to_dict(self) -> dict[str, Any]:
        return {"rule": self.name}


@dataclass(frozen=True)
class Truthful(ReportRule):
    name: ClassVar[str] = "truthful"

    def weights(self, own: Partition, row: int, draw: int) -> np.ndarray:
        return (own.label_array == own.labels[row]).astype(float)


@dataclass(frozen=True)
class Silent(ReportRule):
    name: ClassVar[str] = "silent"

    def weights(self, own: Partition, row: int, draw: int) -> None:
        return None


@dataclass(frozen=True, eq=False)
class CoarsenedTruthful(ReportRule):
    """Truthful about the cell of a coarsening A' of the trader's own signal."""

    name: ClassVar[str] = "coarsened"

    partition: Partition
    description: str = ""

    def validate(self, own: Partition) -> None:
        if not self.partition.is_coarser_than(own):
            raise ProfileError("coarsened report uses a partition finer than the trader's signal")

    def weights(self, own: Partition, row: int, draw: int) -> np.ndarray:
        return (self.partition.label_array == self.partition.labels[row]).astype(float)

    @property
    def label(self) -> str:
        return f"coarsened({self.description or self.partition.n_cells})"

    def to_dict(self) -> dict[str, Any]:
        return {"rule": self.name, "partition": self.partition.to_dict()}


@dataclass(frozen=True, eq=False)
class GarbledTruthful(ReportRule):
    """Truthful about a random garbled outcome of the trader's own signal."""

    name: ClassVar[str] = "garbled"

    garbling: Garbling
    description: str = ""

    def validate(self, own: Partition) -> None:
        if not self.garbling.source.is_coarser_than(own):
            raise ProfileError("garbled report is built on a partition finer than the signal")

    @property
    def n_draws(self) -> int:
        return self.garbling.n_outcomes

    def draw_probability(self, row: int, draw: int) -> float:
        return float(self.garbling.matrix[self.garbling.source.labels[row], draw])

    def weights(self, own: Partition, row: int, draw: int) -> np.ndarray:
        return self.garbling.matrix[self.garbling.source.label_array, draw]

    @property
    def label(self) -> str:
        return f"garbled({self.description})" if self.description else "garbled"

    def to_dict(self) -> dict[str, Any]:
        return {"rule": self.name, "garbling": self.garbling.to_dict()}


@dataclass(frozen=True, eq=False)
class MarketGame:
    """
    Traders' signal subsets and a trading order, over a value context.

    ``traders[i]`` lists the 0-based signals trader i observes; ``order`` lists
    the trader moving at each slot.
    """

    ctx: ValueContext
    traders: tuple[tuple[int, ...], ...]
    order: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "traders", tuple(tuple(sorted(t)) for t in self.traders))
        object.__setattr__(self, "order", tuple(self.order))
        n = self.ctx.n
        if not self.traders:
            raise StructureError("market needs at least one trader")
        for i, signals in enumerate(self.traders):
            if any(not 0 <= j < n for j in signals):
                raise StructureError(f"trader {i + 1} holds a signal index out of range")
        if not self.order:
            raise StructureError("trading order is empty")
        for t, trader in enumerate(self.order):
            if not 0 <= trader < len(self.traders):
                raise StructureError(f"slot {t + 1} names unknown trader {trader + 1}")
            if t and self.order[t - 1] == trader:
                raise StructureError(f"trader {trader + 1} trades twice in a row at slot {t + 1}")
        missing = [i + 1 for i in range(len(self.traders)) if i not in self.order]
        if missing:
            raise StructureError(f"traders {missing} never trade")

        nontrivial = self.ctx.structure.nontrivial_signals()
        held = sorted({j for signals in self.traders for j in signals})
        trivial = [j + 1 for j in held if not nontrivial[j]]
        if trivial:
            logger.warning("Signals %s never change the posterior given the others", trivial)

    @property
    def n_traders(self) -> int:
        return len(self.traders)

    @property
    def horizon(self) -> int:
        return len(self.order)

    @cached_property
    def signals(self) -> tuple[Partition, ...]:
        return tuple(self.ctx.signal(t) for t in self.traders)

    def slots_of(self, trader: int) -> tuple[int, ...]:
        return tuple(t for t, i in enumerate(self.order) if i == trader)

    @cached_property
    def prior(self) -> np.ndarray:
        return self.ctx.structure.prior_marginal

    def to_dict(self) -> dict[str, Any]:
        return {
            "traders": [[j + 1 for j in signals] for signals in self.traders],
            "order": [i + 1 for i in self.order],
            "rule": self.ctx.g.to_dict(),
        }


@dataclass(frozen=True)
class StrategyProfile:
    """One report rule per trading slot."""

    rules: tuple[ReportRule, ...]

    def validate(self, game: MarketGame) -> None:
        if len(self.rules) != game.horizon:
            raise ProfileError(f"profile has {len(self.rules)} rules for {game.horizon} slots")
        for t, rule in enumerate(self.rules):
            if not isinstance(rule, ReportRule):
                raise ProfileError(f"slot {t + 1} holds {rule!r}, not a report rule")
            rule.validate(game.signals[game.order[t]])

    def with_rules(self, slots: Sequence[int], rules: Sequence[ReportRule]) -> StrategyProfile:
        updated = list(self.rules)
        for t, rule in zip(slots, rules, strict=True):
            updated[t] = rule
        return StrategyProfile(tuple(updated))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(rule.label for rule in self.rules)

    def to_dict(self) -> list[dict[str, Any]]:
        return [rule.to_dict() for rule in self.rules]


def truthful_profile(game: MarketGame) -> StrategyProfile:
    return StrategyProfile((Truthful(),) * game.horizon)


def silent_profile(game: MarketGame) -> StrategyProfile:
    return StrategyProfile((Silent(),) * game.horizon)


def all_rush_profile(game: MarketGame) -> StrategyProfile:
    """Truthful at every slot."""
    return truthful_profile(game)


def all_delay_profile(game: MarketGame) -> StrategyProfile:
    """Silent everywhere except each trader's final slot."""
    finals = {game.slots_of(i)[-1] for i in range(game.n_traders)}
    return StrategyProfile(
        tuple(Truthful() if t in finals else Silent() for t in range(game.horizon))
    )


def _by_first_slot(game: MarketGame) -> list[int]:
    return sorted(range(game.n_traders), key=lambda i: game.slots_of(i)[0])


def _by_final_slot(game: MarketGame) -> list[int]:
    return sorted(range(game.n_traders), key=lambda i: game.slots_of(i)[-1])


def is_all_rush(game: MarketGame, profile: StrategyProfile) -> bool:
    """Each trader is Truthful at some slot before the next trader's first slot."""
    profile.validate(game)
    ranked = _by_first_slot(game)
    for position, trader in enumerate(ranked):
        deadline = (
            game.slots_of(ranked[position + 1])[0] if position + 1 < len(ranked) else game.horizon
        )
        if not any(
            isinstance(profile.rules[t], Truthful) for t in game.slots_of(trader) if t < deadline
        ):
            return False
    return True


def is_all_delay(game: MarketGame, profile: StrategyProfile) -> bool:
    """
    Ranked by final slot, each trader is Silent until the previous trader's final
    slot has passed and Truthful at their own final slot.
    """
    profile.validate(game)
    ranked = _by_final_slot(game)
    for position, trader in enumerate(ranked):
        slots = game.slots_of(trader)
        if not isinstance(profile.rules[slots[-1]], Truthful):
            return False
        if position == 0:
            continue
        previous_final = game.slots_of(ranked[position - 1])[-1]
        if any(not isinstance(profile.rules[t], Silent) for t in slots if t < previous_final):
            return False
    return True


@dataclass(frozen=True)
class MarketRun:
    """Price path and per-trader payoffs for one realization."""

    realization: tuple[int, tuple[int, ...]]
    prices: tuple[tuple[float, ...], ...]
    payoffs: tuple[float, ...]
    draws: tuple[int | None, ...]
    unexplained: tuple[int, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        e, a = self.realization
        return {
            "event": e,
            "signals": list(a),
            "prices": [list(p) for p in self.prices],
            "payoffs": list(self.payoffs),
            "unexplained-slots": [t + 1 for t in self.unexplained],
        }


def _posterior(joint: np.ndarray, likelihood: np.ndarray) -> np.ndarray | None:
    weights = likelihood @ joint
    total = weights.sum()
    return weights / total if total > 0 else None


def _report(
    game: MarketGame,
    rule: ReportRule,
    slot: int,
    public: np.ndarray,
    price: np.ndarray,
    row: int,
    draw: int,
) -> np.ndarray:
    own = game.signals[game.order[slot]]
    weights = rule.weights(own, row, draw)
    if weights is None:
        return price
    report = _posterior(game.ctx.structure.joint, public * weights)
    return price if report is None else report


def _explained(
    game: MarketGame,
    rule: ReportRule,
    slot: int,
    public: np.ndarray,
    price: np.ndarray,
    observed: np.ndarray,
) -> np.ndarray:
    """P(observed report | row) under ``rule``'s price map."""
    rows = len(game.ctx.structure.support)
    likelihood = np.zeros(rows)
    for row in range(rows):
        for draw in range(rule.n_draws):
            probability = rule.draw_probability(row, draw)
            if probability <= 0:
                continue
            candidate = _report(game, rule, slot, public, price, row, draw)
            if np.max(np.abs(candidate - observed)) <= PRICE_TOL:
                likelihood[row] += probability
    return likelihood


@dataclass
class _Path:
    prices: list[np.ndarray] = field(default_factory=list)
    unexplained: list[int] = field(default_factory=list)


def _replay(
    game: MarketGame,
    profile: StrategyProfile,
    believed: StrategyProfile,
    row: int,
    draws: Sequence[int | None],
) -> _Path:
    public = np.ones(len(game.ctx.structure.support))
    price = game.prior
    path = _Path([price])
    for slot in range(game.horizon):
        played = profile.rules[slot]
        report = _report(game, played, slot, public, price, row, draws[slot] or 0)
        expected = believed.rules[slot]
        if isinstance(expected, Silent):
            if np.max(np.abs(report - price)) > PRICE_TOL:
                path.unexplained.append(slot)
        else:
            likelihood = _explained(game, expected, slot, public, price, report)
            if np.any(public * likelihood > 0):
                public = public * likelihood
            else:
                path.unexplained.append(slot)
        price = report
        path.prices.append(price)
    return path


def _increment(new: float, old: float) -> float:
    return 0.0 if new == old else new - old


def _payoffs(game: MarketGame, prices: Sequence[np.ndarray]) -> np.ndarray:
    """Per-trader payoff for every outcome e, as an n_traders x |E| array."""
    scores = [game.ctx.g.scores(p) for p in prices]
    payoffs = np.zeros((game.n_traders, game.ctx.structure.n_outcomes))
    for slot, trader in enumerate(game.order):
        for e in range(payoffs.shape[1]):
            payoffs[trader, e] += _increment(scores[slot + 1][e], scores[slot][e])
    return payoffs


def run_market(
    game: MarketGame,
    profile: StrategyProfile,
    realization: tuple[int, Sequence[int]],
    *,
    draws: Mapping[int, int] | None = None,
    believed: StrategyProfile | None = None,
    rng: np.random.Generator | None = None,
) -> MarketRun:
    """
    Replay the market on one realization ``(e, a)``.

    ``draws`` fixes the garbled outcome at a slot (0-based); missing draws are
    sampled from ``rng``. Observers invert reports with ``believed`` (default:
    the played profile); a report the believed price map cannot explain is
    ignored and recorded in ``unexplained``.

    Raises:
        ProfileError: If the profile does not fit the game.
        StructureError: If the realization is not in the support.
    """
    profile.validate(game)
    believed = believed or profile
    believed.validate(game)
    e, a = realization[0], tuple(realization[1])
    structure = game.ctx.structure
    if a not in structure.support_index or structure.joint[structure.support_index[a], e] <= 0:
        raise StructureError(f"realization ({e}, {a}) is not in the support")
    row = structure.support_index[a]

    draws = dict(draws or {})
    rng = rng or np.random.default_rng(0)
    chosen: list[int | None] = []
    for slot, rule in enumerate(profile.rules):
        if isinstance(rule, GarbledTruthful):
            if slot not in draws:
                probabilities = [rule.draw_probability(row, o) for o in range(rule.n_draws)]
                draws[slot] = int(rng.choice(rule.n_draws, p=probabilities))
            chosen.append(draws[slot])
        else:
            chosen.append(None)

    path = _replay(game, profile, believed, row, chosen)
    payoffs = _payoffs(game, path.prices)[:, e]
    return MarketRun(
        (e, a),
        tuple(tuple(float(x) for x in p) for p in path.prices),
        tuple(float(x) for x in payoffs),
        tuple(chosen),
        tuple(path.unexplained),
    )


def expected_payoffs(
    game: MarketGame,
    profile: StrategyProfile,
    *,
    believed: StrategyProfile | None = None,
) -> tuple[float, ...]:
    """
    Exact expected payoff per trader over the prior and every garbled draw.

    A report that puts zero mass on a realizable outcome yields -inf.
    """
    profile.validate(game)
    believed = believed or profile
    believed.validate(game)
    joint = game.ctx.structure.joint
    garbled = [t for t, rule in enumerate(profile.rules) if isinstance(rule, GarbledTruthful)]

    masses: list[float] = []
    values: list[np.ndarray] = []
    for row in range(joint.shape[0]):
        options = [range(profile.rules[t].n_draws) for t in garbled]
        for combo in itertools.product(*options):
            probability = math.prod(
                profile.rules[t].draw_probability(row, o) for t, o in zip(garbled, combo)
            )
            if probability <= 0:
                continue
            draws: list[int | None] = [None] * game.horizon
            for t, o in zip(garbled, combo, strict=True):
                draws[t] = o
            path = _replay(game, profile, believed, row, draws)
            payoffs = _payoffs(game, path.prices)
            for e in np.flatnonzero(joint[row] > 0):
                masses.append(probability * joint[row, e])
                values.append(payoffs[:, e])

    weights = np.array(masses)
    table = np.array(values)
    return tuple(extended_dot(weights, table[:, i]) for i in range(game.n_traders))


@dataclass(frozen=True)
class TraderMargin:
    """A trader's payoff under the profile against their best deviation in the class."""

    trader: int
    payoff: float
    deviation: tuple[ReportRule, ...] | None
    deviation_payoff: float
    deviations: int

    @property
    def margin(self) -> float:
        if self.deviation is None:
            return math.inf
        return self.payoff - self.deviation_payoff

    @property
    def gain(self) -> float:
        return -self.margin

    def to_dict(self) -> dict[str, Any]:
        return {
            "trader": self.trader + 1,
            "payoff": self.payoff,
            "best-deviation": [r.label for r in self.deviation] if self.deviation else None,
            "deviation-payoff": self.deviation_payoff,
            "margin": self.margin,
            "deviations": self.deviations,
        }


@dataclass(frozen=True)
class EquilibriumReport:
    """Per-trader margins; ``verified`` iff every margin is at least -tol."""

    observers: ClassVar[str] = "on-path: each deviation is replayed with its own price map"

    profile: StrategyProfile
    margins: tuple[TraderMargin, ...]
    tolerance: float
    distinguishable: Distinguishability

    @property
    def verified(self) -> bool:
        return all(m.margin >= -self.tolerance for m in self.margins)

    @property
    def summary(self) -> str:
        if self.verified:
            return "deviation-proof within class"
        worst = min(self.margins, key=lambda m: m.margin)
        return f"rejected: trader {worst.trader + 1} gains {worst.gain:.6g} by deviating"

    def to_dict(self) -> dict[str, Any]:
        return {
            "verified": self.verified,
            "summary": self.summary,
            "tolerance": self.tolerance,
            "distinguishable": self.distinguishable.holds,
            "profile": list(self.profile.labels),
            "observers": self.observers,
            "margins": [m.to_dict() for m in self.margins],
        }


def deviation_rules(
    own: Partition,
    garbled: int = DEFAULT_GARBLED_DEVIATIONS,
    seed: int = 0,
    coarsening_cap: int = DEFAULT_COARSENING_CAP,
) -> list[ReportRule]:
    """
    Single-slot alternatives for a trader holding ``own``.

    Truthful, Silent, every proper coarsening of ``own`` and ``garbled`` seeded
    random garblings with as many outcomes as ``own`` has cells.
    """
    rules: list[ReportRule] = [Truthful(), Silent()]
    for index, coarse in enumerate(enumerate_coarsenings(own, coarsening_cap)):
        if coarse.labels != own.labels:
            rules.append(CoarsenedTruthful(coarse, f"#{index}"))
    if own.n_cells >= 2:
        for k in range(garbled):
            rng = np.random.default_rng([seed, k])
            rules.append(GarbledTruthful(Garbling.random(own, own.n_cells, rng), f"seed {k}"))
    return rules


def _best_deviation(
    game: MarketGame,
    profile: StrategyProfile,
    trader: int,
    options: list[ReportRule],
    threads: int,
) -> TraderMargin:
    slots = game.slots_of(trader)
    payoff = expected_payoffs(game, profile)[trader]
    current = tuple(profile.rules[t] for t in slots)
    candidates = [
        combo for combo in itertools.product(options, repeat=len(slots)) if combo != current
    ]

    def evaluate(combo: tuple[ReportRule, ...]) -> float:
        return expected_payoffs(game, profile.with_rules(slots, combo))[trader]

    if threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, candidates))
    else:
        results = [evaluate(combo) for combo in candidates]

    best: tuple[ReportRule, ...] | None = None
    best_payoff = -math.inf
    for combo, value in zip(candidates, results, strict=True):
        if best is None or value > best_payoff:
            best, best_payoff = combo, value
    return TraderMargin(trader, payoff, best, best_payoff, len(candidates))


def verify_equilibrium(
    game: MarketGame,
    profile: StrategyProfile,
    *,
    tol: float = DEFAULT_TOLERANCE,
    garbled: int = DEFAULT_GARBLED_DEVIATIONS,
    seed: int = 0,
    coarsening_cap: int = DEFAULT_COARSENING_CAP,
    threads: int = 1,
) -> EquilibriumReport:
    """
    Compare each trader's payoff against every deviation in the class.

    Deviations replace all of one trader's slot rules at once, drawn from
    ``deviation_rules``. Observers in a deviated market invert reports with the
    deviated profile, not with ``profile``. Ties keep the first deviation in
    enumeration order.

    Raises:
        ProfileError: If the profile gives some trader a non-finite expected payoff.
    """
    profile.validate(game)
    payoffs = expected_payoffs(game, profile)
    if not all(math.isfinite(p) for p in payoffs):
        raise ProfileError(f"profile has non-finite expected payoffs {list(payoffs)}")
    distinguishable = is_distinguishable(game.ctx.structure)
    if not distinguishable:
        logger.warning("Structure is not distinguishable; market theorems do not apply")

    margins = []
    for trader in range(game.n_traders):
        options = deviation_rules(game.signals[trader], garbled, seed + trader, coarsening_cap)
        margins.append(_best_deviation(game, profile, trader, options, threads))
        logger.debug("Trader %d: %d deviations", trader + 1, margins[-1].deviations)
    return EquilibriumReport(profile, tuple(margins), tol, distinguishable)


@dataclass(frozen=True)
class MarketRefutation:
    """
    An Alice-Bob-Alice market in which Alice profits from a deviation.

    ``baseline`` and ``deviation`` are Alice's first-slot rules; ``gain`` is the
    market payoff difference and ``predicted_gain`` the value-function margin.
    """

    mode: Mode
    distinguishable: Distinguishability
    witness: Witness | None
    baseline: ReportRule | None = None
    deviation: ReportRule | None = None
    baseline_payoffs: tuple[float, ...] = ()
    deviation_payoffs: tuple[float, ...] = ()

    @property
    def found(self) -> bool:
        return self.witness is not None

    @property
    def skipped(self) -> bool:
        return not self.distinguishable

    @property
    def gain(self) -> float:
        if not self.baseline_payoffs:
            return 0.0
        return self.deviation_payoffs[0] - self.baseline_payoffs[0]

    @property
    def predicted_gain(self) -> float:
        if self.witness is None:
            return 0.0
        margin = self.witness.margin
        return -margin if self.mode is Mode.SUBSTITUTES else margin

    @property
    def summary(self) -> str:
        if self.skipped:
            return "skipped: structure is not distinguishable"
        if not self.found:
            return "no violation found"
        profile = "all-rush" if self.mode is Mode.SUBSTITUTES else "all-delay"
        return f"{profile} refuted: Alice gains {self.gain:.6g} by deviating"

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": str(self.mode),
            "summary": self.summary,
            "distinguishable": self.distinguishable.holds,
            "witness": self.witness.to_dict() if self.witness else None,
            "baseline": self.baseline.label if self.baseline else None,
            "deviation": self.deviation.label if self.deviation else None,
            "baseline-payoffs": list(self.baseline_payoffs),
            "deviation-payoffs": list(self.deviation_payoffs),
            "gain": self.gain,
            "predicted-gain": self.predicted_gain,
        }


def _find_witness(
    ctx: ValueContext, mode: Mode, tol: float, moderate_cap: int, budget: int, seed: int
) -> Witness | None:
    kind = (
        WitnessKind.VIOLATES_SUBSTITUTES
        if mode is Mode.SUBSTITUTES
        else WitnessKind.VIOLATES_COMPLEMENTS
    )
    witness = classify_moderate(ctx, tol, moderate_cap).witness(kind)
    if witness is None and budget > 0:
        witness = refute_strong(ctx, mode, budget, seed, tol=tol, moderate_cap=moderate_cap).witness
    return witness


def _coarse_rule(witness: Witness) -> ReportRule:
    if isinstance(witness.coarse, Garbling):
        return GarbledTruthful(witness.coarse, "witness")
    return CoarsenedTruthful(witness.coarse, "witness")


def _refute(
    ctx: ValueContext, mode: Mode, tol: float, moderate_cap: int, budget: int, seed: int
) -> MarketRefutation:
    distinguishable = is_distinguishable(ctx.structure)
    if not distinguishable:
        logger.warning("Skipping %s refutation: structure is not distinguishable", mode)
        return MarketRefutation(mode, distinguishable, None)
    witness = _find_witness(ctx, mode, tol, moderate_cap, budget, seed)
    if witness is None:
        return MarketRefutation(mode, distinguishable, None)

    game = MarketGame(ctx, (witness.a_subset, witness.b_subset), (0, 1, 0))
    coarse = _coarse_rule(witness)
    if mode is Mode.SUBSTITUTES:
        baseline, deviation = Truthful(), coarse
    else:
        baseline, deviation = coarse, Truthful()
    rest = (Truthful(), Truthful())
    baseline_payoffs = expected_payoffs(game, StrategyProfile((baseline, *rest)))
    deviation_payoffs = expected_payoffs(game, StrategyProfile((deviation, *rest)))
    return MarketRefutation(
        mode, distinguishable, witness, baseline, deviation, baseline_payoffs, deviation_payoffs
    )


def rush_refutation(
    ctx: ValueContext,
    tol: float = DEFAULT_TOLERANCE,
    *,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> MarketRefutation:
    """
    Look for A' ⪯ A with V(A' v B) - V(A') < V(A v B) - V(A) - tol.

    On success Alice (holding A) moves first in an Alice-Bob-Alice market and
    gains by reporting A' instead of A at the first slot. Coarsenings are
    searched exhaustively, then ``budget`` garbling restarts.
    """
    return _refute(ctx, Mode.SUBSTITUTES, tol, moderate_cap, budget, seed)


def delay_refutation(
    ctx: ValueContext,
    tol: float = DEFAULT_TOLERANCE,
    *,
    moderate_cap: int = DEFAULT_MODERATE_CAP,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> MarketRefutation:
    """
    Look for A' ⪯ A with V(A' v B) - V(A') > V(A v B) - V(A) + tol.

    On success Alice gains by revealing A at the first slot instead of A'
    (with A' = bottom this is the all-delay first move).
    """
    return _refute(ctx, Mode.COMPLEMENTS, tol, moderate_cap, budget, seed)
