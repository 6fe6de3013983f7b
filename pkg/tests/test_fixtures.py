"""Tests for the fixture and rule registries."""

import numpy as np
import pytest

from infosubs.decision import Custom1D, LogRule, PiecewiseMax
from infosubs.errors import StructureError
from infosubs.fixtures import (
    FIXTURES,
    RULES,
    ci,
    erasure,
    pair,
    pair_problem,
    parse_fixture,
    parse_name,
    parse_rule,
    random_structure,
    xor2,
)


class TestParseName:
    """Tests for registry reference parsing."""

    def test_name_arg_and_params(self) -> None:
        """Test that all three parts are split out."""
        ref = parse_name(" Custom1D:kink075?eps=0.2, weight=second ")

        assert ref.name == "custom1d"
        assert ref.arg == "kink075"
        assert ref.params == {"eps": "0.2", "weight": "second"}

    def test_malformed_parameter(self) -> None:
        """Test that a parameter without '=' is rejected."""
        with pytest.raises(StructureError, match="malformed parameter"):
            parse_name("xor2?q")

    def test_non_numeric_parameter(self) -> None:
        """Test that a bad number names the parameter."""
        with pytest.raises(StructureError, match="'q' of 'xor2'"):
            parse_fixture("xor2?q=abc")


class TestFixtures:
    """Tests for building named structures."""

    def test_every_fixture_builds(self) -> None:
        """Test that each registered fixture builds with its defaults."""
        for name, entry in FIXTURES.items():
            structure = parse_fixture(name)
            assert structure.joint.sum() == pytest.approx(1.0, abs=1e-12), name
            assert entry.description

    def test_ci_with_per_signal_accuracies(self) -> None:
        """Test that s=0.9/0.6 builds two signals with distinct accuracies."""
        structure = parse_fixture("ci?r=0.3,s=0.9/0.6")

        assert structure.n == 2
        assert structure.prior_marginal[1] == pytest.approx(0.3)
        assert structure.joint.sum() == pytest.approx(1.0)

    def test_ci_with_shared_accuracy(self) -> None:
        """Test that n sets the number of signals when s is a scalar."""
        assert parse_fixture("ci?s=0.7,n=4").n == 4

    def test_xor_parameter(self) -> None:
        """Test that xor2?q=0.6 matches the direct constructor."""
        np.testing.assert_array_equal(parse_fixture("xor2?q=0.6").joint, xor2(0.6).joint)

    def test_unknown_fixture(self) -> None:
        """Test that an unknown name lists the available fixtures."""
        with pytest.raises(StructureError, match="unknown fixture 'nope'"):
            parse_fixture("nope")

    def test_probabilities_are_checked(self) -> None:
        """Test that accuracies outside [0, 1] are rejected."""
        with pytest.raises(StructureError, match="must lie in"):
            ci(0.5, 1.2)
        with pytest.raises(StructureError, match="must lie in"):
            erasure(0.5, (0.5, -0.1))

    def test_pair_event_is_the_component_pair(self) -> None:
        """Test that PAIR has four event outcomes, each with probability 1/4."""
        structure = pair()

        assert structure.n_outcomes == 4
        np.testing.assert_allclose(structure.prior_marginal, [0.25] * 4)

    def test_random_structure_sparsity(self) -> None:
        """Test that sparse random structures keep a normalized, nonempty support."""
        structure = random_structure(np.random.default_rng(0), n=2, sparsity=0.9)

        assert len(structure.support) >= 1
        assert structure.joint.sum() == pytest.approx(1.0)


class TestRules:
    """Tests for building named expected-score functions."""

    def test_every_rule_has_a_description(self) -> None:
        """Test that the registry documents each rule."""
        assert all(description for _, description in RULES.values())

    def test_log_and_kink(self) -> None:
        """Test that names resolve to the expected classes."""
        structure = xor2(0.5)

        assert isinstance(parse_rule("log", structure), LogRule)
        assert isinstance(parse_rule("custom1d:kink075", structure), Custom1D)

    def test_unknown_custom1d_preset(self) -> None:
        """Test that only the kink075 preset exists."""
        with pytest.raises(StructureError, match="unknown custom1d preset"):
            parse_rule("custom1d:kink050", xor2(0.5))

    def test_kink_needs_a_binary_event(self) -> None:
        """Test that a binary-event G refuses PAIR's four outcomes."""
        with pytest.raises(StructureError, match="2 outcomes"):
            parse_rule("custom1d:kink075", pair())

    def test_pair_rule_weights(self) -> None:
        """Test that pair?weight=second weighs the XOR component."""
        g = parse_rule("pair?eps=0.2,weight=second", pair())

        assert isinstance(g, PiecewiseMax)
        np.testing.assert_allclose(g.utility, pair_problem(0.2, "second").utility)

    def test_bad_pair_weight(self) -> None:
        """Test that the weighting must be first or second."""
        with pytest.raises(StructureError, match="'first' or 'second'"):
            pair_problem(0.1, "both")

    def test_unknown_rule(self) -> None:
        """Test that an unknown rule lists the available ones."""
        with pytest.raises(StructureError, match="unknown rule 'spherical'"):
            parse_rule("spherical", xor2(0.5))
