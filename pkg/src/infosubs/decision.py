"""
Decision problems and the convex expected-score function G.

Every finite decision problem is encoded by a convex function G on
distributions over E: G(q) is the best expected utility under belief q.
The scoring rule, the generalized entropy h = -G and the Bregman divergence
D_G all derive from G and a chosen subgradient.

Extended reals follow two rules: a -inf term dominates any sum, and
0 * (+/-inf) is 0 inside expectations.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import ConvexityError, StructureError

LN2 = math.log(2.0)
CONVEXITY_TOL = 1e-9
DEFAULT_PROBE_SAMPLES = 1000
PROBE_SEED = 0


def extended_dot(weights: np.ndarray, values: np.ndarray) -> float:
    """Sum of weights * values with 0 * inf = 0 and -inf dominating."""
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = weights != 0
    terms = weights[mask] * values[mask]
    if np.any(np.isneginf(terms)):
        return -math.inf
    return math.fsum(terms.tolist())


def _as_batch(q: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(q, dtype=float))


class ExpectedScoreFunction(ABC):
    """
    A convex function G on the probability simplex over E, with a chosen subgradient.

    Subclasses implement the batched ``values`` and ``subgradients``; scalar
    helpers, the induced scoring rule and the convexity probe are shared.
    """

    kind: ClassVar[str] = "abstract"
    probe_samples: ClassVar[int] = DEFAULT_PROBE_SAMPLES

    @property
    def n_outcomes(self) -> int | None:
        """Number of outcomes of E this G is defined for, or None for any."""
        return None

    @abstractmethod
    def values(self, q: np.ndarray) -> np.ndarray:
        """G evaluated on each row of an m x |E| array."""

    @abstractmethod
    def subgradients(self, q: np.ndarray) -> np.ndarray:
        """The chosen subgradient at each row of an m x |E| array."""

    def value(self, q: Sequence[float] | np.ndarray) -> float:
        return float(self.values(_as_batch(q))[0])

    def subgradient(self, q: Sequence[float] | np.ndarray) -> np.ndarray:
        return self.subgradients(_as_batch(q))[0]

    def scores(self, report: Sequence[float] | np.ndarray) -> np.ndarray:
        """S(report, e) for every outcome e: G(r) + <g(r), delta_e - r>."""
        r = np.asarray(report, dtype=float)
        g = self.subgradient(r)
        inner = extended_dot(r, g)
        if not math.isfinite(inner):
            return np.full(r.shape, -math.inf)
        with np.errstate(invalid="ignore"):
            return self.value(r) + g - inner

    def score(self, report: Sequence[float] | np.ndarray, e: int) -> float:
        return float(self.scores(report)[e])

    def check_outcomes(self, k: int) -> None:
        if self.n_outcomes is not None and self.n_outcomes != k:
            raise StructureError(
                f"{self.kind} is defined for {self.n_outcomes} outcomes, event has {k}"
            )

    def probe_convexity(self, samples: int | None = None, seed: int = PROBE_SEED) -> None:
        """
        Check convexity and subgradient support on random chords.

        Raises:
            ConvexityError: On the worst violation beyond tolerance.
        """
        samples = samples or self.probe_samples
        k = self.n_outcomes or 3
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(k), size=samples)
        q = rng.dirichlet(np.ones(k), size=samples)
        lam = rng.random(samples)[:, None]

        g_p, g_q = self.values(p), self.values(q)
        mid = self.values(lam * p + (1 - lam) * q)
        chord = lam[:, 0] * g_p + (1 - lam[:, 0]) * g_q
        gap = mid - chord
        worst = int(np.argmax(gap))
        if gap[worst] > CONVEXITY_TOL:
            raise ConvexityError(
                self.kind,
                f"chord between {p[worst].round(6).tolist()} and {q[worst].round(6).tolist()} "
                f"lies below G by {gap[worst]:.3g}",
            )

        support = g_q + np.einsum("ij,ij->i", self.subgradients(q), p - q)
        gap = support - g_p
        worst = int(np.argmax(gap))
        if gap[worst] > CONVEXITY_TOL:
            raise ConvexityError(
                self.kind,
                f"subgradient at {q[worst].round(6).tolist()} does not support G "
                f"(gap {gap[worst]:.3g})",
            )

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """A finite decision problem: decisions and a utility matrix u(d, e)."""

    decisions: tuple[str, ...]
    utility: np.ndarray

    def __post_init__(self) -> None:
        utility = np.array(self.utility, dtype=float)
        if utility.ndim != 2 or utility.shape[0] == 0:
            raise StructureError("utility must be a nonempty decisions x outcomes matrix")
        if utility.shape[0] != len(self.decisions):
            raise StructureError(
                f"{len(self.decisions)} decisions but utility has {utility.shape[0]} rows"
            )
        if not np.all(np.isfinite(utility)):
            raise StructureError("utility must be finite")
        utility.flags.writeable = False
        object.__setattr__(self, "utility", utility)

    @classmethod
    def from_matrix(cls, utility: Sequence[Sequence[float]] | np.ndarray) -> DecisionProblem:
        matrix = np.asarray(utility, dtype=float)
        return cls(tuple(f"d{i}" for i in range(matrix.shape[0])), matrix)

    @classmethod
    def guess(cls, outcomes: Sequence[str]) -> DecisionProblem:
        """Predict E: utility 1 for the correct outcome, else 0."""
        return cls(tuple(f"guess {label}" for label in outcomes), np.eye(len(outcomes)))

    @property
    def n_outcomes(self) -> int:
        return self.utility.shape[1]


@dataclass(frozen=True, eq=False)
class PiecewiseMax(ExpectedScoreFunction):
    """G(q) = max_d <q, u_d>: the revelation of a finite decision problem."""

    kind: ClassVar[str] = "piecewise-max"

    utility: np.ndarray
    decisions: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        utility = np.array(self.utility, dtype=float)
        if utility.ndim != 2 or utility.shape[0] == 0 or not np.all(np.isfinite(utility)):
            raise StructureError("utility must be a finite nonempty matrix")
        utility.flags.writeable = False
        object.__setattr__(self, "utility", utility)
        if not self.decisions:
            object.__setattr__(
                self, "decisions", tuple(f"d{i}" for i in range(utility.shape[0]))
            )
        self.probe_convexity()

    @property
    def n_outcomes(self) -> int:
        return self.utility.shape[1]

    def best_decisions(self, q: np.ndarray) -> np.ndarray:
        """Index of the optimal decision for each belief row; ties go to the lowest index."""
        return np.argmax(_as_batch(q) @ self.utility.T, axis=1)

    def best_decision(self, q: Sequence[float] | np.ndarray) -> int:
        return int(self.best_decisions(_as_batch(q))[0])

    def values(self, q: np.ndarray) -> np.ndarray:
        return np.max(_as_batch(q) @ self.utility.T, axis=1)

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        return self.utility[self.best_decisions(q)]

    def scores(self, report: Sequence[float] | np.ndarray) -> np.ndarray:
        return self.utility[self.best_decision(report)].copy()

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "decisions": list(self.decisions),
            "utility": self.utility.tolist(),
        }


@dataclass(frozen=True, eq=False)
class LogRule(ExpectedScoreFunction):
    """G(q) = sum_e q(e) log2 q(e); the induced score is log2 of the reported probability."""

    kind: ClassVar[str] = "log"

    def __post_init__(self) -> None:
        self.probe_convexity()

    def values(self, q: np.ndarray) -> np.ndarray:
        q = _as_batch(q)
        return xlogy(q, q).sum(axis=1) / LN2

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(_as_batch(q)) + 1.0 / LN2

    def scores(self, report: Sequence[float] | np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(np.asarray(report, dtype=float))


@dataclass(frozen=True, eq=False)
class QuadraticRule(ExpectedScoreFunction):
    """G(q) = ||q||^2; the induced score is 2 q(e) - ||q||^2."""

    kind: ClassVar[str] = "quadratic"

    def __post_init__(self) -> None:
        self.probe_convexity()

    def values(self, q: np.ndarray) -> np.ndarray:
        q = _as_batch(q)
        return np.einsum("ij,ij->i", q, q)

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        return 2.0 * _as_batch(q)

    def scores(self, report: Sequence[float] | np.ndarray) -> np.ndarray:
        r = np.asarray(report, dtype=float)
        return 2.0 * r - float(r @ r)


@dataclass(frozen=True, eq=False)
class Custom1D(ExpectedScoreFunction):
    """
    Convex piecewise-linear G in the probability of the second outcome (binary E).

    ``breakpoints`` are (x, y) pairs with x strictly increasing from 0 to 1.
    At a breakpoint the subgradient is the slope of the segment to its right.
    """

    kind: ClassVar[str] = "custom1d"

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        points = tuple((float(x), float(y)) for x, y in self.breakpoints)
        object.__setattr__(self, "breakpoints", points)
        xs = np.array([x for x, _ in points])
        if len(points) < 2 or xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise StructureError("breakpoints must have x strictly increasing from 0 to 1")
        slopes = self.slopes
        if np.any(np.diff(slopes) < -CONVEXITY_TOL):
            raise ConvexityError(self.kind, f"segment slopes {slopes.tolist()} decrease")
        self.probe_convexity()

    @property
    def n_outcomes(self) -> int:
        return 2

    @property
    def xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.breakpoints])

    @property
    def ys(self) -> np.ndarray:
        return np.array([y for _, y in self.breakpoints])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.ys) / np.diff(self.xs)

    def values(self, q: np.ndarray) -> np.ndarray:
        return np.interp(_as_batch(q)[:, 1], self.xs, self.ys)

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        x = _as_batch(q)[:, 1]
        segment = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.slopes) - 1)
        grads = np.zeros((len(x), 2))
        grads[:, 1] = self.slopes[segment]
        return grads

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "breakpoints": [list(point) for point in self.breakpoints]}


@dataclass(frozen=True, eq=False)
class HullDistance(ExpectedScoreFunction):
    """
    G(q) = Euclidean distance from q to the convex hull of ``vertices``.

    Projection is exact: every affinely spanned subset of at most |E| vertices
    is tried and the nearest feasible point kept.
    """

    kind: ClassVar[str] = "hull-distance"

    vertices: np.ndarray

    def __post_init__(self) -> None:
        vertices = np.atleast_2d(np.array(self.vertices, dtype=float))
        unique: list[np.ndarray] = []
        for v in vertices:
            if all(np.max(np.abs(v - u)) > 1e-12 for u in unique):
                unique.append(v)
        vertices = np.array(unique)
        vertices.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)
        self.probe_convexity()

    @property
    def n_outcomes(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def _solvers(self) -> list[tuple[tuple[int, ...], np.ndarray]]:
        """Pseudo-inverse of the equality-constrained least-squares system per vertex subset."""
        solvers = []
        count, k = self.vertices.shape
        for size in range(1, min(count, k) + 1):
            for subset in itertools.combinations(range(count), size):
                vs = self.vertices[list(subset)]
                kkt = np.zeros((size + 1, size + 1))
                kkt[:size, :size] = 2.0 * vs @ vs.T
                kkt[:size, size] = 1.0
                kkt[size, :size] = 1.0
                solvers.append((subset, np.linalg.pinv(kkt)))
        return solvers

    def project(self, q: np.ndarray) -> np.ndarray:
        """Nearest hull point for each row of q."""
        q = _as_batch(q)
        best = np.full(len(q), math.inf)
        points = np.zeros_like(q)
        for subset, inverse in self._solvers:
            vs = self.vertices[list(subset)]
            rhs = np.hstack([2.0 * q @ vs.T, np.ones((len(q), 1))])
            lam = (rhs @ inverse.T)[:, : len(subset)]
            feasible = np.all(lam >= -1e-12, axis=1)
            lam = np.clip(lam, 0.0, None)
            lam = lam / lam.sum(axis=1, keepdims=True)
            candidate = lam @ vs
            dist = np.linalg.norm(q - candidate, axis=1)
            better = feasible & (dist < best)
            best[better] = dist[better]
            points[better] = candidate[better]
        return points

    def values(self, q: np.ndarray) -> np.ndarray:
        q = _as_batch(q)
        dist = np.linalg.norm(q - self.project(q), axis=1)
        return np.where(dist > 1e-12, dist, 0.0)

    def subgradients(self, q: np.ndarray) -> np.ndarray:
        q = _as_batch(q)
        diff = q - self.project(q)
        dist = np.linalg.norm(diff, axis=1, keepdims=True)
        return np.where(dist > 1e-12, diff / np.where(dist > 0, dist, 1.0), 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "vertices": self.vertices.tolist()}


def revelation(dp: DecisionProblem) -> PiecewiseMax:
    """The expected-score function of a decision problem: G(q) = max_d <q, u_d>."""
    return PiecewiseMax(dp.utility, dp.decisions)


def score(g: ExpectedScoreFunction, report: Sequence[float] | np.ndarray, e: int) -> float:
    """S(report, e); may be -inf."""
    return g.score(report, e)


def expected_score(
    g: ExpectedScoreFunction,
    report: Sequence[float] | np.ndarray,
    belief: Sequence[float] | np.ndarray,
) -> float:
    """S(report; belief) = E_{e ~ belief} S(report, e)."""
    return extended_dot(np.asarray(belief, dtype=float), g.scores(report))


def bregman(
    g: ExpectedScoreFunction,
    p: Sequence[float] | np.ndarray,
    q: Sequence[float] | np.ndarray,
) -> float:
    """D_G(p, q) = S(p; p) - S(q; p); +inf when q rules out an outcome p allows under log."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if isinstance(g, LogRule):
        return float(rel_entr(p, q).sum() / LN2)
    divergence = g.value(p) - expected_score(g, q, p)
    return max(divergence, 0.0)


def entropy(g: ExpectedScoreFunction, q: Sequence[float] | np.ndarray) -> float:
    """Generalized entropy h(q) = -G(q)."""
    return -g.value(q)
