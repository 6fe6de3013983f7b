"""Pytest configuration and shared fixtures."""

import logging

import numpy as np
import pytest

from infosubs.decision import DecisionProblem, LogRule, PiecewiseMax, QuadraticRule, revelation
from infosubs.fixtures import ci, dup2, or2, parse_rule, xor2
from infosubs.value import ValueContext


@pytest.fixture
def xor_log() -> ValueContext:
    """XOR of two fair bits under the log rule."""
    return ValueContext(xor2(0.5), LogRule())


@pytest.fixture
def ci_log() -> ValueContext:
    """Two conditionally independent signals (r=0.5, s=0.8) under the log rule."""
    return ValueContext(ci(0.5, 0.8), LogRule())


@pytest.fixture
def ci_quadratic() -> ValueContext:
    """The quadratic-rule counterexample structure CI(0.9, 0.8)."""
    return ValueContext(ci(0.9, 0.8), QuadraticRule())


@pytest.fixture
def or_kink() -> ValueContext:
    """OR of two fair bits under G(q) = max(0, P(E=1) - 0.75)."""
    structure = or2()
    return ValueContext(structure, parse_rule("custom1d:kink075", structure))


@pytest.fixture
def dup_guess() -> ValueContext:
    """Two copies of a fair bit, rewarded for guessing it."""
    structure = dup2()
    return ValueContext(structure, parse_rule("guess", structure))


@pytest.fixture
def random_piecewise_max():
    """Factory for the G of a random decision problem over k outcomes."""

    def build(rng: np.random.Generator, k: int, decisions: int = 3) -> PiecewiseMax:
        matrix = rng.uniform(-1.0, 1.0, size=(decisions, k))
        return revelation(DecisionProblem.from_matrix(matrix))

    return build


@pytest.fixture(autouse=True)
def quiet_logging(caplog: pytest.LogCaptureFixture) -> None:
    """Capture library warnings so tests can assert on them."""
    caplog.set_level(logging.WARNING, logger="infosubs")
