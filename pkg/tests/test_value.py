"""Tests for the value function and its estimators."""

import numpy as np
import pytest
from scipy.stats import binom

from infosubs.decision import Custom1D, DecisionProblem, LogRule, QuadraticRule, revelation
from infosubs.errors import SamplingError, StructureError
from infosubs.fixtures import ci, pair, random_structure, xor2
from infosubs.info_model import Garbling, Partition
from infosubs.value import (
    ValueContext,
    clamp_posteriors,
    conditional_entropy,
    conditional_value,
    decision_oracles,
    hoeffding_sample_size,
    marginal,
    marginal_bregman,
    marginal_garbled,
    prior_probability,
    probe_range,
    value_exact,
    value_garbled,
    value_sampled,
    value_sampled_decision,
)


class TestExactValue:
    """Tests for V on the subsets lattice."""

    def test_xor_entropy_values(self, xor_log: ValueContext) -> None:
        """Test that XOR inputs are worthless alone and decisive together."""
        assert xor_log.subset_value(()) == pytest.approx(-1.0, abs=1e-12)
        assert xor_log.subset_value((0,)) == pytest.approx(-1.0, abs=1e-12)
        assert xor_log.subset_value((1,)) == pytest.approx(-1.0, abs=1e-12)
        assert xor_log.subset_value((0, 1)) == pytest.approx(0.0, abs=1e-12)

    def test_or_kink_values(self, or_kink: ValueContext) -> None:
        """Test the kinked G on OR: 0, 1/8, 1/8 and 3/16."""
        assert or_kink.subset_value(()) == pytest.approx(0.0, abs=1e-12)
        assert or_kink.subset_value((0,)) == pytest.approx(0.125, abs=1e-12)
        assert or_kink.subset_value((1,)) == pytest.approx(0.125, abs=1e-12)
        assert or_kink.subset_value((0, 1)) == pytest.approx(0.1875, abs=1e-12)

    def test_normalized_value(self, dup_guess: ValueContext) -> None:
        """Test that one copy of the bit already earns the full gain."""
        assert dup_guess.normalized(()) == 0.0
        assert dup_guess.normalized((0,)) == pytest.approx(0.5)
        assert dup_guess.normalized((0, 1)) == pytest.approx(0.5)

    def test_value_is_monotone(self) -> None:
        """Test V(S) <= V(S + i) on random structures."""
        rng = np.random.default_rng(11)
        for _ in range(20):
            ctx = ValueContext(random_structure(rng, n=3, n_events=3), QuadraticRule())
            for i in range(3):
                assert ctx.subset_value(()) <= ctx.subset_value((i,)) + 1e-12
                assert ctx.subset_value((i,)) <= ctx.subset_value(range(3)) + 1e-12

    def test_partition_must_match_support(self, xor_log: ValueContext) -> None:
        """Test that a partition of another support is rejected."""
        with pytest.raises(StructureError, match="support"):
            value_exact(xor_log, Partition.bottom((0, 1)))

    def test_wrong_outcome_count(self) -> None:
        """Test that G must fit E's outcome count."""
        binary_g = Custom1D(((0.0, 0.0), (1.0, 1.0)))
        with pytest.raises(StructureError, match="outcomes"):
            ValueContext(pair(), binary_g)


class TestThreeWayAgreement:
    """Direct, entropy and Bregman computations must agree."""

    def test_agreement_on_random_structures(self, random_piecewise_max) -> None:
        """Test the three computations on 200 random structures and three rules."""
        rng = np.random.default_rng(2024)
        for trial in range(200):
            n_events = int(rng.integers(2, 4))
            structure = random_structure(rng, n=2, n_events=n_events)
            rules = [LogRule(), QuadraticRule(), random_piecewise_max(rng, n_events)]
            for g in rules:
                ctx = ValueContext(structure, g)
                a, b = ctx.signal((0,)), ctx.signal((1,))
                for p in (ctx.bottom, a, ctx.signal((0, 1))):
                    assert value_exact(ctx, p) == pytest.approx(
                        -conditional_entropy(ctx, p), abs=1e-9
                    ), (trial, g.kind)
                assert marginal(ctx, a, b) == pytest.approx(
                    marginal_bregman(ctx, a, b), abs=1e-9
                ), (trial, g.kind)
                assert marginal(ctx, ctx.bottom, a) == pytest.approx(
                    marginal_bregman(ctx, ctx.bottom, a), abs=1e-9
                ), (trial, g.kind)


class TestGarbledValue:
    """Tests for values of garbled signals."""

    def test_identity_garbling_keeps_the_value(self, ci_log: ValueContext) -> None:
        """Test that the identity garbling changes nothing."""
        a, b = ci_log.signal((0,)), ci_log.signal((1,))
        identity = Garbling.identity(a)

        assert value_garbled(ci_log, identity) == pytest.approx(value_exact(ci_log, a))
        assert marginal_garbled(ci_log, identity, b) == pytest.approx(marginal(ci_log, a, b))

    def test_uninformative_garbling_is_bottom(self, ci_log: ValueContext) -> None:
        """Test that a constant report is worth V(bottom)."""
        garbling = Garbling.uninformative(ci_log.signal((0,)))

        assert value_garbled(ci_log, garbling) == pytest.approx(ci_log.subset_value(()))

    def test_noisy_garbling_lies_between(self, ci_log: ValueContext) -> None:
        """Test V(bottom) <= V(A') <= V(A) for a random garbling."""
        a = ci_log.signal((0,))
        garbling = Garbling.random(a, 2, np.random.default_rng(5))
        value = value_garbled(ci_log, garbling)

        assert ci_log.subset_value(()) - 1e-12 <= value <= ci_log.subset_value((0,)) + 1e-12


class TestConditionalValue:
    """Tests for values under a restricted prior."""

    def test_cell_of_a_revealing_signal(self, dup_guess: ValueContext) -> None:
        """Test that once A1 is known, A2 adds nothing inside the cell."""
        given = dup_guess.signal((0,))
        inside = conditional_value(dup_guess, given, 0, dup_guess.signal((1,)))

        assert inside == pytest.approx(1.0)
        assert conditional_value(dup_guess, given, 0, dup_guess.bottom) == pytest.approx(1.0)

    def test_cell_out_of_range(self, dup_guess: ValueContext) -> None:
        """Test that a bad cell index is rejected."""
        with pytest.raises(StructureError, match="out of range"):
            conditional_value(dup_guess, dup_guess.bottom, 1, dup_guess.bottom)


class TestSampling:
    """Tests for the Hoeffding-budgeted estimators."""

    def test_sample_size(self) -> None:
        """Test m = ceil(K^2 ln(2/delta) / (2 eps^2))."""
        assert hoeffding_sample_size(1.0, 0.1, 0.05) == 185
        assert hoeffding_sample_size(0.0, 0.1, 0.05) == 1

    @pytest.mark.parametrize(("eps", "delta"), [(0.0, 0.1), (0.1, 1.0), (1.5, 0.1)])
    def test_sample_size_rejects_bad_parameters(self, eps: float, delta: float) -> None:
        """Test that eps and delta must lie in (0, 1)."""
        with pytest.raises(SamplingError, match="must lie in"):
            hoeffding_sample_size(1.0, eps, delta)

    def test_range_probe(self, xor_log: ValueContext) -> None:
        """Test K = max G - min G over reachable posteriors."""
        assert probe_range(xor_log) == pytest.approx(1.0)

    def test_clamp_posteriors(self) -> None:
        """Test that clamped rows stay normalized and above the floor."""
        clamped = clamp_posteriors(np.array([[1.0, 0.0], [0.5, 0.5]]), 0.01)

        np.testing.assert_allclose(clamped.sum(axis=1), [1.0, 1.0])
        assert clamped.min() >= 0.0099

    def test_empty_subset_is_exact(self, ci_log: ValueContext) -> None:
        """Test that sampling V(bottom) takes no draws."""
        estimate = value_sampled(ci_log, (), 0.05, 0.05, seed=0)

        assert estimate.samples == 0
        assert float(estimate) == pytest.approx(ci_log.subset_value(()))

    def test_prior_probability_oracle(self) -> None:
        """Test P(e, a_S) against the joint table."""
        structure = xor2(0.6)

        assert prior_probability(structure, 0, {0: 1, 1: 1}) == pytest.approx(0.36)
        assert prior_probability(structure, None, {0: 1}) == pytest.approx(0.6)

    def test_sampled_value_is_within_eps(self, ci_log: ValueContext) -> None:
        """Test that at least 93% of 200 seeded estimates land within eps."""
        eps, delta, trials = 0.05, 0.05, 200
        exact = ci_log.subset_value((0, 1))
        hits = sum(
            abs(value_sampled(ci_log, (0, 1), eps, delta, seed=seed).estimate - exact) <= eps
            for seed in range(trials)
        )

        assert hits >= max(0.93 * trials, binom.ppf(0.01, trials, 1 - delta))

    def test_decision_oracle_estimate(self) -> None:
        """Test the decision-making estimator against the exact value."""
        structure = ci(0.5, 0.8)
        dp = DecisionProblem.guess(structure.event_outcomes)
        ctx = ValueContext(structure, revelation(dp))
        oracles = decision_oracles(structure, dp)
        estimate = value_sampled_decision(oracles, (0, 1), 0.05, 0.01, seed=1)

        assert estimate.samples == hoeffding_sample_size(1.0, 0.05, 0.01)
        assert estimate.estimate == pytest.approx(ctx.subset_value((0, 1)), abs=0.05)
