"""
Finite Bayesian information structures and their signal lattices.

An information structure is a joint prior over an event E and n base
signals. Signals are represented three ways:

1. Subsets of base signals (``subset_signal``)
2. Partitions of the support Gamma (the discrete lattice, ``Partition``)
3. Garblings of partitions (stochastic matrices, ``Garbling``)

All objects are immutable; derived arrays are computed once and cached.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Hashable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from .errors import CapExceededError, StructureError

logger = logging.getLogger(__name__)

PROB_TOL = 1e-12
POSTERIOR_TOL = 1e-12
DEFAULT_COARSENING_CAP = 12


@dataclass(frozen=True)
class Signal:
    """A base signal: a name and its ordered outcome labels."""

    name: str
    outcomes: tuple[str, ...]


@dataclass(frozen=True)
class PriorEntry:
    """One positive-probability entry of the prior, stored as outcome indices."""

    e: int
    a: tuple[int, ...]
    p: float


@dataclass(frozen=True)
class InformationStructure:
    """
    Joint prior over an event E and n base signals.

    The prior is support-sparse: only positive-probability entries are listed,
    so the support Gamma is exactly the set of realizations that occur.
    """

    event_outcomes: tuple[str, ...]
    signals: tuple[Signal, ...]
    prior: tuple[PriorEntry, ...]

    def __post_init__(self) -> None:
        if not self.event_outcomes:
            raise StructureError("event must have at least one outcome")
        if not self.prior:
            raise StructureError("prior has no entries")

        n = len(self.signals)
        seen: set[tuple[int, tuple[int, ...]]] = set()
        for entry in self.prior:
            if not 0 <= entry.e < len(self.event_outcomes):
                raise StructureError(f"event index {entry.e} out of range")
            if len(entry.a) != n:
                raise StructureError(f"realization {entry.a} does not have {n} coordinates")
            for i, a_i in enumerate(entry.a):
                if not 0 <= a_i < len(self.signals[i].outcomes):
                    raise StructureError(
                        f"outcome index {a_i} out of range for signal '{self.signals[i].name}'"
                    )
            if not (math.isfinite(entry.p) and entry.p > 0):
                raise StructureError(f"probability must be positive and finite, got {entry.p}")
            key = (entry.e, entry.a)
            if key in seen:
                raise StructureError(f"duplicate prior entry for e={entry.e}, a={entry.a}")
            seen.add(key)

        total = math.fsum(entry.p for entry in self.prior)
        if abs(total - 1.0) > PROB_TOL:
            raise StructureError(f"prior sums to {total!r}, expected 1")

    @classmethod
    def from_table(
        cls,
        event_outcomes: Sequence[str],
        signals: Sequence[tuple[str, Sequence[str]]],
        entries: Iterable[tuple[str, Sequence[str], float]],
    ) -> InformationStructure:
        """
        Build a structure from outcome labels.

        Args:
            event_outcomes: Ordered labels of E.
            signals: ``(name, outcome labels)`` per base signal.
            entries: ``(e label, realization labels, probability)``; zero-probability
                entries are dropped.

        Raises:
            StructureError: On unknown labels, duplicates, or a prior that does not sum to 1.
        """
        e_index = {label: i for i, label in enumerate(event_outcomes)}
        sig = tuple(Signal(name, tuple(outcomes)) for name, outcomes in signals)
        a_index = [{label: j for j, label in enumerate(s.outcomes)} for s in sig]

        prior: list[PriorEntry] = []
        for e_label, a_labels, p in entries:
            if p == 0:
                continue
            if e_label not in e_index:
                raise StructureError(f"unknown event outcome '{e_label}'")
            if len(a_labels) != len(sig):
                raise StructureError(
                    f"realization {list(a_labels)} does not have {len(sig)} labels"
                )
            try:
                a = tuple(a_index[i][label] for i, label in enumerate(a_labels))
            except KeyError as exc:
                raise StructureError(f"unknown signal outcome {exc.args[0]!r}") from None
            prior.append(PriorEntry(e_index[e_label], a, float(p)))

        return cls(tuple(event_outcomes), sig, tuple(prior))

    @property
    def n(self) -> int:
        """Number of base signals."""
        return len(self.signals)

    @property
    def n_outcomes(self) -> int:
        """Number of outcomes of E."""
        return len(self.event_outcomes)

    @cached_property
    def support(self) -> tuple[tuple[int, ...], ...]:
        """Gamma: realization tuples with positive mass, in lexicographic order."""
        return tuple(sorted({entry.a for entry in self.prior}))

    @cached_property
    def support_index(self) -> dict[tuple[int, ...], int]:
        return {a: i for i, a in enumerate(self.support)}

    @cached_property
    def joint(self) -> np.ndarray:
        """P(a, e) as a |Gamma| x |E| array."""
        table = np.zeros((len(self.support), self.n_outcomes))
        for entry in self.prior:
            table[self.support_index[entry.a], entry.e] = entry.p
        table.flags.writeable = False
        return table

    @cached_property
    def support_array(self) -> np.ndarray:
        """Realizations as a |Gamma| x n integer array."""
        array = np.array(self.support, dtype=np.int64).reshape(len(self.support), self.n)
        array.flags.writeable = False
        return array

    @cached_property
    def prior_marginal(self) -> np.ndarray:
        """Prior distribution of E."""
        marginal = self.joint.sum(axis=0)
        marginal.flags.writeable = False
        return marginal

    def partition_by(self, key: Callable[[tuple[int, ...]], Hashable]) -> Partition:
        """Partition Gamma by the value of ``key`` on each realization tuple."""
        return Partition.from_labels(self.support, [key(a) for a in self.support])

    def nontrivial_signals(self) -> tuple[bool, ...]:
        """For each signal, whether it moves the posterior given all the other signals."""
        full = row_posteriors(self.joint, subset_signal(self, range(self.n)))
        flags = []
        for i in range(self.n):
            rest = subset_signal(self, [j for j in range(self.n) if j != i])
            others = row_posteriors(self.joint, rest)
            flags.append(bool(np.max(np.abs(full - others)) > POSTERIOR_TOL))
        return tuple(flags)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to the structure file format."""
        return {
            "event_outcomes": list(self.event_outcomes),
            "signals": [{"name": s.name, "outcomes": list(s.outcomes)} for s in self.signals],
            "prior": [
                {
                    "e": self.event_outcomes[entry.e],
                    "a": [self.signals[i].outcomes[a_i] for i, a_i in enumerate(entry.a)],
                    "p": entry.p,
                }
                for entry in self.prior
            ],
        }


def _canonical_labels(raw: Sequence[Hashable]) -> tuple[int, ...]:
    """Renumber labels by order of first appearance."""
    mapping: dict[Hashable, int] = {}
    return tuple(mapping.setdefault(label, len(mapping)) for label in raw)


@dataclass(frozen=True)
class Partition:
    """
    A partition of a finite support, stored as one cell label per support element.

    Labels are canonical (numbered by first appearance in support order), so two
    partitions of the same support are equal exactly when their cells are equal.
    """

    support: tuple[Hashable, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.support):
            raise StructureError(
                f"partition has {len(self.labels)} labels for {len(self.support)} support elements"
            )
        if not self.support:
            raise StructureError("partition of an empty support")
        object.__setattr__(self, "labels", _canonical_labels(self.labels))

    @classmethod
    def from_labels(cls, support: Sequence[Hashable], labels: Sequence[Hashable]) -> Partition:
        return cls(tuple(support), _canonical_labels(labels))

    @classmethod
    def from_cells(
        cls, support: Sequence[Hashable], cells: Iterable[Iterable[Hashable]]
    ) -> Partition:
        """Build a partition from explicit cells, checking disjointness and coverage."""
        support = tuple(support)
        position = {key: i for i, key in enumerate(support)}
        labels: list[int | None] = [None] * len(support)
        for c, cell in enumerate(cells):
            members = list(cell)
            if not members:
                raise StructureError(f"cell {c} is empty")
            for key in members:
                if key not in position:
                    raise StructureError(f"{key!r} is not in the support")
                if labels[position[key]] is not None:
                    raise StructureError(f"{key!r} appears in more than one cell")
                labels[position[key]] = c
        missing = [support[i] for i, label in enumerate(labels) if label is None]
        if missing:
            raise StructureError(f"cells do not cover the support; missing {missing}")
        return cls.from_labels(support, [label for label in labels if label is not None])

    @classmethod
    def bottom(cls, support: Sequence[Hashable]) -> Partition:
        """The single-cell partition (no information)."""
        return cls(tuple(support), (0,) * len(support))

    @classmethod
    def top(cls, support: Sequence[Hashable]) -> Partition:
        """The all-singletons partition (full information)."""
        return cls(tuple(support), tuple(range(len(support))))

    @cached_property
    def n_cells(self) -> int:
        return max(self.labels) + 1

    @cached_property
    def label_array(self) -> np.ndarray:
        array = np.asarray(self.labels, dtype=np.int64)
        array.flags.writeable = False
        return array

    @cached_property
    def cell_indices(self) -> tuple[tuple[int, ...], ...]:
        """Support positions in each cell, cells in label order."""
        cells: list[list[int]] = [[] for _ in range(self.n_cells)]
        for i, label in enumerate(self.labels):
            cells[label].append(i)
        return tuple(tuple(cell) for cell in cells)

    @property
    def cells(self) -> tuple[tuple[Hashable, ...], ...]:
        """Support elements in each cell."""
        return tuple(tuple(self.support[i] for i in cell) for cell in self.cell_indices)

    def cell_of(self, key: Hashable) -> int:
        return self.labels[self.support.index(key)]

    def is_coarser_than(self, other: Partition) -> bool:
        """Whether self ⪯ other, i.e. every cell of ``other`` lies inside one cell of self."""
        _check_same_support(self, other)
        seen: dict[int, int] = {}
        return all(
            seen.setdefault(finer, coarser) == coarser
            for coarser, finer in zip(self.labels, other.labels, strict=True)
        )

    def to_dict(self) -> dict[str, Any]:
        return {"cells": [[_jsonable(key) for key in cell] for cell in self.cells]}


def _jsonable(key: Hashable) -> Any:
    if isinstance(key, tuple):
        return [_jsonable(part) for part in key]
    return key


def _check_same_support(a: Partition, b: Partition) -> None:
    if a.support is not b.support and a.support != b.support:
        raise StructureError("partitions are over different supports")


@dataclass(frozen=True, eq=False)
class Garbling:
    """
    A stochastic map from the cells of a partition to garbled outcomes.

    ``matrix[c, o]`` is the probability of reporting outcome ``o`` when the
    realization lies in cell ``c`` of ``source``.
    """

    source: Partition
    matrix: np.ndarray
    outcomes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != self.source.n_cells:
            raise StructureError(
                f"garbling matrix must have {self.source.n_cells} rows, got shape {matrix.shape}"
            )
        if matrix.shape[1] == 0:
            raise StructureError("garbling must have at least one outcome")
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
            raise StructureError("garbling entries must be finite and nonnegative")
        row_sums = matrix.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > PROB_TOL):
            raise StructureError(f"garbling rows must sum to 1, got {row_sums.tolist()}")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        if not self.outcomes:
            object.__setattr__(self, "outcomes", tuple(str(o) for o in range(matrix.shape[1])))
        elif len(self.outcomes) != matrix.shape[1]:
            raise StructureError("garbling outcome labels do not match matrix columns")

    @property
    def n_outcomes(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, source: Partition) -> Garbling:
        return cls(source, np.eye(source.n_cells))

    @classmethod
    def uninformative(cls, source: Partition) -> Garbling:
        return cls(source, np.ones((source.n_cells, 1)))

    @classmethod
    def from_coarsening(cls, source: Partition, coarse: Partition) -> Garbling:
        """The deterministic garbling mapping each cell of ``source`` to its cell in ``coarse``."""
        if not coarse.is_coarser_than(source):
            raise StructureError("target partition is not a coarsening of the source")
        matrix = np.zeros((source.n_cells, coarse.n_cells))
        for cell, members in enumerate(source.cell_indices):
            matrix[cell, coarse.labels[members[0]]] = 1.0
        return cls(source, matrix)

    @classmethod
    def random(cls, source: Partition, n_outcomes: int, rng: np.random.Generator) -> Garbling:
        """A garbling with Dirichlet(1) rows."""
        return cls(source, rng.dirichlet(np.ones(n_outcomes), size=source.n_cells))

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source.to_dict(),
            "outcomes": list(self.outcomes),
            "matrix": self.matrix.tolist(),
        }


def compute_support(structure: InformationStructure) -> tuple[tuple[int, ...], ...]:
    """Gamma in lexicographic order of outcome indices."""
    return structure.support


def subset_signal(structure: InformationStructure, subset: Iterable[int]) -> Partition:
    """
    The partition A_S: support tuples grouped by their coordinates in ``subset``.

    Raises:
        StructureError: If an index is out of range.
    """
    indices = sorted(set(subset))
    for i in indices:
        if not 0 <= i < structure.n:
            raise StructureError(f"signal index {i} out of range for {structure.n} signals")
    return Partition.from_labels(
        structure.support, [tuple(a[i] for i in indices) for a in structure.support]
    )


def join(a: Partition, b: Partition) -> Partition:
    """Coarsest common refinement: cellwise intersection."""
    _check_same_support(a, b)
    return Partition.from_labels(a.support, list(zip(a.labels, b.labels, strict=True)))


def meet(a: Partition, b: Partition) -> Partition:
    """Finest common coarsening: connected components of the cell-overlap graph."""
    _check_same_support(a, b)
    parent = list(range(a.n_cells + b.n_cells))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for label_a, label_b in zip(a.labels, b.labels, strict=True):
        root_a, root_b = find(label_a), find(a.n_cells + label_b)
        if root_a != root_b:
            parent[max(root_a, root_b)] = min(root_a, root_b)

    return Partition.from_labels(a.support, [find(label) for label in a.labels])


def bell_number(k: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(k - 1):
        next_row = [row[-1]]
        for value in row:
            next_row.append(next_row[-1] + value)
        row = next_row
    return row[-1]


def _set_partitions(k: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length k, in lexicographic order."""
    if k == 0:
        yield ()
        return
    rgs = [0] * k
    maxima = [0] * k
    while True:
        yield tuple(rgs)
        i = k - 1
        while i > 0 and rgs[i] > maxima[i - 1]:
            i -= 1
        if i == 0:
            return
        rgs[i] += 1
        maxima[i] = max(maxima[i - 1], rgs[i])
        for j in range(i + 1, k):
            rgs[j] = 0
            maxima[j] = maxima[i]


def enumerate_coarsenings(
    p: Partition, cap: int = DEFAULT_COARSENING_CAP
) -> Iterator[Partition]:
    """
    Yield every coarsening of ``p`` (Bell(#cells) of them), from bottom up to p itself.

    Raises:
        CapExceededError: If p has more cells than ``cap``.
    """
    if p.n_cells > cap:
        raise CapExceededError(
            "coarsening enumeration",
            p.n_cells,
            cap,
            f"Bell({p.n_cells}) = {bell_number(p.n_cells)} coarsenings",
        )
    for grouping in _set_partitions(p.n_cells):
        yield Partition.from_labels(p.support, [grouping[label] for label in p.labels])


def posterior(
    structure: InformationStructure, p: Partition, cell: int
) -> tuple[np.ndarray, float]:
    """Posterior on E given a cell of ``p``, and the cell's probability."""
    _check_structure_support(structure, p)
    if not 0 <= cell < p.n_cells:
        raise StructureError(f"cell {cell} out of range for {p.n_cells} cells")
    rows = structure.joint[list(p.cell_indices[cell])]
    mass = float(rows.sum())
    return rows.sum(axis=0) / mass, mass


def cell_table(joint: np.ndarray, p: Partition) -> np.ndarray:
    """Joint P(cell, e) as an n_cells x |E| array."""
    table = np.zeros((p.n_cells, joint.shape[1]))
    np.add.at(table, p.label_array, joint)
    return table


def row_posteriors(joint: np.ndarray, p: Partition) -> np.ndarray:
    """For each support row, the posterior on E given its cell of p."""
    table = cell_table(joint, p)
    posts = table / table.sum(axis=1, keepdims=True)
    return posts[p.label_array]


def _check_structure_support(structure: InformationStructure, p: Partition) -> None:
    if p.support is not structure.support and p.support != structure.support:
        raise StructureError("partition is not over this structure's support")


def garbled_joint(
    structure: InformationStructure, g: Garbling, b: Partition | None = None
) -> np.ndarray:
    """
    Joint table over (garbled outcome, b-cell, e).

    With ``b`` omitted the middle axis has a single cell.
    """
    _check_structure_support(structure, g.source)
    b = b if b is not None else Partition.bottom(structure.support)
    _check_structure_support(structure, b)

    emit = g.matrix[g.source.label_array]
    b_onehot = np.eye(b.n_cells)[b.label_array]
    return np.einsum("go,gb,ge->obe", emit, b_onehot, structure.joint)


@dataclass(frozen=True)
class Distinguishability:
    """Outcome of ``is_distinguishable``; ``witness`` is (S, realization, realization)."""

    holds: bool
    witness: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]] | None = None

    def __bool__(self) -> bool:
        return self.holds


def is_distinguishable(
    structure: InformationStructure, *, strict: bool = False
) -> Distinguishability:
    """
    Check that realizations of every signal subset induce distinct posteriors.

    By default only realizations of S that differ in a single coordinate are
    compared: a trader who already knows every other coordinate must be able to
    recover the remaining one from a truthful report. This is weaker than the
    usual definition, which asks for distinct posteriors whenever the
    realizations differ in some coordinate; ``strict`` applies that definition
    and compares every pair of distinct realizations of S.
    """
    for size in range(1, structure.n + 1):
        for subset in itertools.combinations(range(structure.n), size):
            partition = subset_signal(structure, subset)
            table = cell_table(structure.joint, partition)
            posts = table / table.sum(axis=1, keepdims=True)
            keys = [
                tuple(structure.support[cell[0]][i] for i in subset)
                for cell in partition.cell_indices
            ]
            order = sorted(range(len(keys)), key=keys.__getitem__)
            for x, y in itertools.combinations(order, 2):
                if not strict and sum(u != v for u, v in zip(keys[x], keys[y], strict=True)) != 1:
                    continue
                if np.max(np.abs(posts[x] - posts[y])) <= POSTERIOR_TOL:
                    return Distinguishability(False, (subset, keys[x], keys[y]))
    return Distinguishability(True)
