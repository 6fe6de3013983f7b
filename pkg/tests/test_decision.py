"""Tests for decision problems and expected-score functions."""

import math

import numpy as np
import pytest

from infosubs.decision import (
    Custom1D,
    DecisionProblem,
    HullDistance,
    LogRule,
    PiecewiseMax,
    QuadraticRule,
    bregman,
    entropy,
    expected_score,
    extended_dot,
    revelation,
)
from infosubs.errors import ConvexityError, StructureError


class TestExtendedDot:
    """Tests for expectations over extended reals."""

    def test_zero_weight_cancels_infinity(self) -> None:
        """Test that 0 * -inf contributes nothing."""
        assert extended_dot(np.array([1.0, 0.0]), np.array([2.0, -math.inf])) == 2.0

    def test_negative_infinity_dominates(self) -> None:
        """Test that a weighted -inf term makes the sum -inf."""
        assert extended_dot(np.array([0.5, 0.5]), np.array([math.inf, -math.inf])) == -math.inf


class TestLogRule:
    """Tests for the logarithmic rule."""

    def test_value_is_negative_entropy(self) -> None:
        """Test G on the uniform and degenerate beliefs."""
        g = LogRule()

        assert g.value([0.5, 0.5]) == pytest.approx(-1.0, abs=1e-12)
        assert g.value([1.0, 0.0]) == 0.0
        assert entropy(g, [0.25, 0.25, 0.25, 0.25]) == pytest.approx(2.0, abs=1e-12)

    def test_score_is_log_of_reported_probability(self) -> None:
        """Test that ruling out the realized outcome scores -inf."""
        g = LogRule()

        assert g.score([0.25, 0.75], 1) == pytest.approx(math.log2(0.75))
        assert g.score([1.0, 0.0], 1) == -math.inf

    def test_bregman_is_kl_in_bits(self) -> None:
        """Test D_G against the Kullback-Leibler divergence."""
        g = LogRule()

        assert bregman(g, [1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)
        assert bregman(g, [0.5, 0.5], [1.0, 0.0]) == math.inf


class TestQuadraticRule:
    """Tests for the Brier rule."""

    def test_scores(self) -> None:
        """Test S(r, e) = 2 r(e) - ||r||^2."""
        np.testing.assert_allclose(QuadraticRule().scores([0.25, 0.75]), [-0.125, 0.875])

    def test_bregman_is_squared_distance(self) -> None:
        """Test D_G(p, q) = ||p - q||^2."""
        p, q = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])

        assert bregman(QuadraticRule(), p, q) == pytest.approx(float((p - q) @ (p - q)))


class TestProperness:
    """Tests that truthful reports maximize expected score."""

    @pytest.mark.parametrize("g", [LogRule(), QuadraticRule()], ids=["log", "quadratic"])
    def test_truth_maximizes_expected_score(self, g) -> None:
        """Test S(p; p) >= S(q; p) on random beliefs."""
        rng = np.random.default_rng(3)
        for _ in range(200):
            p, q = rng.dirichlet(np.ones(3), size=2)
            assert expected_score(g, p, p) >= expected_score(g, q, p) - 1e-12

    def test_decision_problem_scores_are_utilities(self) -> None:
        """Test that a decision problem pays the utility of its best response."""
        g = revelation(DecisionProblem.guess(("0", "1")))

        np.testing.assert_array_equal(g.scores([0.3, 0.7]), [0.0, 1.0])
        assert g.value([0.3, 0.7]) == pytest.approx(0.7)


class TestPiecewiseMax:
    """Tests for the revelation of a decision problem."""

    def test_ties_go_to_the_lowest_decision(self) -> None:
        """Test tie-breaking on a belief where both decisions are optimal."""
        g = PiecewiseMax(np.eye(2))

        assert g.best_decision([0.5, 0.5]) == 0

    def test_utility_must_be_finite(self) -> None:
        """Test that infinite utilities are rejected."""
        with pytest.raises(StructureError, match="finite"):
            PiecewiseMax(np.array([[0.0, math.inf]]))

    def test_decision_count_must_match_rows(self) -> None:
        """Test that names and utility rows line up."""
        with pytest.raises(StructureError, match="2 decisions"):
            DecisionProblem(("a", "b"), np.eye(3))


class TestCustom1D:
    """Tests for piecewise-linear G on binary events."""

    def test_kink(self) -> None:
        """Test G(q) = max(0, q - 0.75) and its right subgradient."""
        g = Custom1D(((0.0, 0.0), (0.75, 0.0), (1.0, 0.25)))

        assert g.value([0.5, 0.5]) == 0.0
        assert g.value([0.0, 1.0]) == pytest.approx(0.25)
        np.testing.assert_allclose(g.subgradient([0.25, 0.75]), [0.0, 1.0])

    def test_concave_breakpoints_are_rejected(self) -> None:
        """Test that decreasing slopes fail the convexity check."""
        with pytest.raises(ConvexityError, match="decrease") as exc_info:
            Custom1D(((0.0, 0.0), (0.5, 1.0), (1.0, 0.0)))

        assert exc_info.value.kind == "custom1d"

    def test_breakpoints_must_span_the_unit_interval(self) -> None:
        """Test that x must run from 0 to 1."""
        with pytest.raises(StructureError, match="strictly increasing"):
            Custom1D(((0.0, 0.0), (0.5, 1.0)))

    def test_outcome_count_is_checked(self) -> None:
        """Test that a binary-event G refuses three outcomes."""
        with pytest.raises(StructureError, match="2 outcomes"):
            Custom1D(((0.0, 0.0), (1.0, 1.0))).check_outcomes(3)


class TestHullDistance:
    """Tests for the distance-to-hull G."""

    def test_zero_inside_and_positive_outside(self) -> None:
        """Test G on a hull spanned by two interior points of the binary simplex."""
        g = HullDistance(np.array([[0.4, 0.6], [0.6, 0.4]]))

        assert g.value([0.5, 0.5]) == 0.0
        assert g.value([1.0, 0.0]) == pytest.approx(math.sqrt(2) * 0.4)

    def test_duplicate_vertices_are_merged(self) -> None:
        """Test that repeated vertices collapse to one."""
        g = HullDistance(np.array([[0.5, 0.5], [0.5, 0.5]]))

        assert g.vertices.shape == (1, 2)
