"""
Named information structures and expected-score functions.

Fixtures and rules are addressable by strings such as ``xor2?q=0.6``,
``ci?r=0.5,s=0.9/0.6`` or ``custom1d:kink075`` so the CLI, config files and
tests share one vocabulary.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .decision import (
    Custom1D,
    DecisionProblem,
    ExpectedScoreFunction,
    LogRule,
    QuadraticRule,
    revelation,
)
from .errors import StructureError
from .info_model import InformationStructure

BITS = ("0", "1")
KINK075_BREAKPOINTS = ((0.0, 0.0), (0.75, 0.0), (1.0, 0.25))


@dataclass(frozen=True)
class ParsedName:
    """A registry reference: ``name``, optional ``:arg`` and ``?key=value,...`` params."""

    name: str
    arg: str | None
    params: dict[str, str]

    def float_param(self, key: str, default: float) -> float:
        try:
            return float(self.params.get(key, default))
        except ValueError:
            raise StructureError(f"parameter '{key}' of '{self.name}' must be a number") from None

    def floats_param(self, key: str, default: Sequence[float]) -> tuple[float, ...]:
        raw = self.params.get(key)
        if raw is None:
            return tuple(default)
        try:
            return tuple(float(part) for part in raw.split("/"))
        except ValueError:
            raise StructureError(f"parameter '{key}' of '{self.name}' must be numbers") from None

    def int_param(self, key: str, default: int) -> int:
        try:
            return int(self.params.get(key, default))
        except ValueError:
            raise StructureError(f"parameter '{key}' of '{self.name}' must be an integer") from None


def parse_name(text: str) -> ParsedName:
    """Split ``name:arg?key=value,key=value``."""
    head, _, query = text.strip().partition("?")
    name, _, arg = head.partition(":")
    params: dict[str, str] = {}
    if query:
        for item in query.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise StructureError(f"malformed parameter '{item}' in '{text}'")
            params[key.strip()] = value.strip()
    return ParsedName(name.strip().lower(), arg or None, params)


def _check_probability(value: float, label: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise StructureError(f"{label} must lie in [0, 1], got {value}")


def dup2() -> InformationStructure:
    """Uniform bit E observed exactly by both signals."""
    return InformationStructure.from_table(
        BITS,
        [("A1", BITS), ("A2", BITS)],
        [(e, (e, e), 0.5) for e in BITS],
    )


def xor2(q: float = 0.5) -> InformationStructure:
    """Independent Bernoulli(q) signals; E is their XOR."""
    _check_probability(q, "q")
    entries = []
    for a1, a2 in itertools.product((0, 1), repeat=2):
        p = (q if a1 else 1 - q) * (q if a2 else 1 - q)
        entries.append((str(a1 ^ a2), (str(a1), str(a2)), p))
    return InformationStructure.from_table(BITS, [("A1", BITS), ("A2", BITS)], entries)


def ci(r: float = 0.5, s: float | Sequence[float] = 0.8, n: int = 2) -> InformationStructure:
    """
    Conditionally independent signals: P(E=1) = r and signal i equals E with probability s_i.

    A scalar ``s`` is shared by ``n`` signals; a sequence sets one accuracy per signal.
    """
    accuracies = tuple(s) if isinstance(s, Sequence) else (float(s),) * n
    _check_probability(r, "r")
    for value in accuracies:
        _check_probability(value, "s")
    entries = []
    for e in (0, 1):
        for a in itertools.product((0, 1), repeat=len(accuracies)):
            p = r if e else 1 - r
            for a_i, s_i in zip(a, accuracies, strict=True):
                p *= s_i if a_i == e else 1 - s_i
            entries.append((str(e), tuple(str(x) for x in a), p))
    names = [(f"A{i + 1}", BITS) for i in range(len(accuracies))]
    return InformationStructure.from_table(BITS, names, entries)


def or2() -> InformationStructure:
    """Independent uniform bits; E is their OR."""
    entries = [
        (str(a | b), (str(a), str(b)), 0.25) for a, b in itertools.product((0, 1), repeat=2)
    ]
    return InformationStructure.from_table(BITS, [("A", BITS), ("B", BITS)], entries)


PAIR_LABELS = ("b0c0", "b0c1", "b1c0", "b1c1")


def pair() -> InformationStructure:
    """
    E = (E_b, E_c). Both signals see E_b; each sees one of two uniform bits whose XOR is E_c.

    Signal outcome ``bXcY`` means B_i = X and C_i = Y; E outcomes use the same labels.
    """
    entries = []
    for eb, c1, c2 in itertools.product((0, 1), repeat=3):
        ec = c1 ^ c2
        entries.append(
            (
                PAIR_LABELS[2 * eb + ec],
                (PAIR_LABELS[2 * eb + c1], PAIR_LABELS[2 * eb + c2]),
                0.125,
            )
        )
    return InformationStructure.from_table(
        PAIR_LABELS, [("A1", PAIR_LABELS), ("A2", PAIR_LABELS)], entries
    )


def pair_problem(eps: float = 0.1, weight: str = "first") -> DecisionProblem:
    """
    Predict both components of PAIR's E, one point each; one component is worth 1 + eps.

    ``weight`` is ``first`` (the shared component) or ``second`` (the XOR component).
    """
    if weight not in ("first", "second"):
        raise StructureError(f"weight must be 'first' or 'second', got '{weight}'")
    w_b, w_c = (1 + eps, 1.0) if weight == "first" else (1.0, 1 + eps)
    utility = np.zeros((4, 4))
    for (db, dc), (eb, ec) in itertools.product(itertools.product((0, 1), repeat=2), repeat=2):
        utility[2 * db + dc, 2 * eb + ec] = w_b * (db == eb) + w_c * (dc == ec)
    return DecisionProblem(tuple(f"predict {label}" for label in PAIR_LABELS), utility)


def dice() -> InformationStructure:
    """A single fair die observed exactly; E is the face."""
    faces = tuple(str(face) for face in range(1, 7))
    return InformationStructure.from_table(
        faces, [("die", faces)], [(face, (face,), 1 / 6) for face in faces]
    )


def erasure(r: float = 0.5, s: Sequence[float] = (0.5, 0.7)) -> InformationStructure:
    """
    Each signal reveals E with probability s_i and is blank (``?``) otherwise.

    Once E is revealed nothing else matters, so these signals are pointwise
    substitutes for every decision problem.
    """
    _check_probability(r, "r")
    outcomes = ("0", "1", "?")
    entries = []
    for e in (0, 1):
        for revealed in itertools.product((True, False), repeat=len(s)):
            p = r if e else 1 - r
            for flag, s_i in zip(revealed, s, strict=True):
                _check_probability(s_i, "s")
                p *= s_i if flag else 1 - s_i
            a = tuple(str(e) if flag else "?" for flag in revealed)
            entries.append((str(e), a, p))
    return InformationStructure.from_table(
        BITS, [(f"A{i + 1}", outcomes) for i in range(len(s))], entries
    )


def random_structure(
    rng: np.random.Generator,
    n: int = 2,
    n_events: int = 2,
    n_signal_outcomes: int = 2,
    sparsity: float = 0.0,
) -> InformationStructure:
    """
    A random prior over all (e, a) combinations with Dirichlet(1) weights.

    With ``sparsity`` > 0 that fraction of entries is zeroed (at least one survives).
    """
    events = tuple(str(i) for i in range(n_events))
    outcomes = tuple(str(i) for i in range(n_signal_outcomes))
    cells = list(itertools.product(range(n_events), *[range(n_signal_outcomes)] * n))
    weights = rng.dirichlet(np.ones(len(cells)))
    if sparsity > 0:
        keep = rng.random(len(cells)) >= sparsity
        keep[int(np.argmax(weights))] = True
        weights = np.where(keep, weights, 0.0)
        weights = weights / weights.sum()
    entries = [
        (events[cell[0]], tuple(outcomes[x] for x in cell[1:]), float(w))
        for cell, w in zip(cells, weights, strict=True)
    ]
    total = sum(p for _, _, p in entries)
    entries = [(e, a, p / total) for e, a, p in entries]
    return InformationStructure.from_table(
        events, [(f"A{i + 1}", outcomes) for i in range(n)], entries
    )


@dataclass(frozen=True)
class RegistryEntry:
    """A named factory and a one-line description of its parameters."""

    build: Callable[[ParsedName], Any]
    description: str


def _build_ci(ref: ParsedName) -> InformationStructure:
    accuracies = ref.floats_param("s", (0.8,))
    if len(accuracies) == 1:
        return ci(ref.float_param("r", 0.5), accuracies[0], ref.int_param("n", 2))
    return ci(ref.float_param("r", 0.5), accuracies)


FIXTURES: dict[str, RegistryEntry] = {
    "dup2": RegistryEntry(lambda ref: dup2(), "uniform bit E, A1 = A2 = E"),
    "xor2": RegistryEntry(
        lambda ref: xor2(ref.float_param("q", 0.5)), "q=0.5: A1, A2 ~ Bernoulli(q), E = A1 xor A2"
    ),
    "ci": RegistryEntry(
        _build_ci,
        "r=0.5,s=0.8[/0.7...],n=2: signals equal E with probability s_i",
    ),
    "ci3": RegistryEntry(lambda ref: ci(0.5, (0.9, 0.8, 0.7)), "ci with r=0.5, s=0.9/0.8/0.7"),
    "or2": RegistryEntry(lambda ref: or2(), "independent uniform bits, E = A OR B"),
    "pair": RegistryEntry(lambda ref: pair(), "E = (E_b, E_c); A_i = (E_b, C_i), E_c = C1 xor C2"),
    "dice": RegistryEntry(lambda ref: dice(), "one fair die, E = face"),
    "erasure": RegistryEntry(
        lambda ref: erasure(ref.float_param("r", 0.5), ref.floats_param("s", (0.5, 0.7))),
        "r=0.5,s=0.5/0.7: signal i reveals E with probability s_i",
    ),
    "random": RegistryEntry(
        lambda ref: random_structure(
            np.random.default_rng(ref.int_param("seed", 0)),
            ref.int_param("n", 2),
            ref.int_param("e", 2),
            ref.int_param("k", 2),
        ),
        "n=2,e=2,k=2,seed=0: Dirichlet prior over all outcomes",
    ),
}


def parse_fixture(text: str) -> InformationStructure:
    """
    Build a registered structure from ``name?key=value,...``.

    Raises:
        StructureError: For unknown names or bad parameters.
    """
    ref = parse_name(text)
    if ref.name not in FIXTURES:
        raise StructureError(f"unknown fixture '{ref.name}'. Available: {sorted(FIXTURES)}")
    return FIXTURES[ref.name].build(ref)


def _rule_custom1d(ref: ParsedName, structure: InformationStructure) -> ExpectedScoreFunction:
    if ref.arg != "kink075":
        raise StructureError(f"unknown custom1d preset '{ref.arg}'. Available: ['kink075']")
    return Custom1D(KINK075_BREAKPOINTS)


RuleBuilder = Callable[[ParsedName, InformationStructure], ExpectedScoreFunction]

RULES: dict[str, tuple[RuleBuilder, str]] = {
    "log": (lambda ref, s: LogRule(), "G(q) = sum q log2 q (Shannon)"),
    "quadratic": (lambda ref, s: QuadraticRule(), "G(q) = ||q||^2 (Brier)"),
    "guess": (
        lambda ref, s: revelation(DecisionProblem.guess(s.event_outcomes)),
        "reward 1 for predicting E",
    ),
    "custom1d": (_rule_custom1d, "custom1d:kink075 = max(0, P(E=1) - 0.75)"),
    "pair": (
        lambda ref, s: revelation(
            pair_problem(ref.float_param("eps", 0.1), ref.params.get("weight", "first"))
        ),
        "eps=0.1,weight=first|second: predict both PAIR components",
    ),
}


def parse_rule(text: str, structure: InformationStructure) -> ExpectedScoreFunction:
    """
    Build a registered expected-score function for ``structure``'s event.

    Raises:
        StructureError: For unknown names, bad parameters or an outcome-count mismatch.
    """
    ref = parse_name(text)
    if ref.name not in RULES:
        raise StructureError(f"unknown rule '{ref.name}'. Available: {sorted(RULES)}")
    g = RULES[ref.name][0](ref, structure)
    g.check_outcomes(structure.n_outcomes)
    return g
