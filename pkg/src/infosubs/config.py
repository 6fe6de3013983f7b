"""
Configuration and input file models using Pydantic.

``Settings`` holds every tolerance, cap and seed (read from infosubs.yml);
the file models validate the structure, decision-problem, constraint, game
and profile documents the CLI accepts. Documents may be JSON or YAML. Indices
in files are 1-based and converted to 0-based when built.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal, TypeVar

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, RootModel, field_validator, model_validator

from .decision import Custom1D, DecisionProblem, ExpectedScoreFunction, revelation
from .fixtures import parse_fixture, parse_rule
from .info_model import Garbling, InformationStructure
from .market import (
    CoarsenedTruthful,
    GarbledTruthful,
    MarketGame,
    ReportRule,
    Silent,
    StrategyProfile,
    Truthful,
)
from .selection import Cardinality, Constraint, ExplicitFamily, Knapsack
from .value import ValueContext

DEFAULT_SETTINGS_FILE = Path("infosubs.yml")
THREADS_ENV = "INFOSUBS_THREADS"

Model = TypeVar("Model", bound=BaseModel)


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None


def _as_label(v: Any) -> str:
    return v if isinstance(v, str) else str(v)


class Settings(BaseModel):
    """Tolerances, enumeration caps and seeds shared by every subcommand."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    tolerance: float = Field(default=1e-9, ge=0)
    subset_cap: int = Field(default=10, ge=1, alias="subset-cap")
    coarsening_cap: int = Field(default=12, ge=1, alias="coarsening-cap")
    moderate_coarsening_cap: int = Field(default=8, ge=1, alias="moderate-coarsening-cap")
    selection_cap: int = Field(default=20, ge=1, alias="selection-cap")
    policy_signal_cap: int = Field(default=5, ge=1, alias="policy-signal-cap")
    policy_k_cap: int = Field(default=3, ge=0, alias="policy-k-cap")
    budget: int = Field(default=50, ge=1)
    garbled_deviations: int = Field(default=20, ge=0, alias="garbled-deviations")
    probe_samples: int = Field(default=1000, ge=1, alias="probe-samples")
    clamp_floor: float | None = Field(default=None, gt=0, lt=1, alias="clamp-floor")
    seed: int | None = None
    threads: int = Field(default_factory=_threads_from_env, ge=1)


def load_settings(path: Path) -> Settings:
    """
    Load and validate settings from a YAML file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the file is empty or invalid
    """
    if not path.exists():
        raise FileNotFoundError(f"Settings file not found: {path}")

    with open(path) as f:
        raw = yaml.safe_load(f)

    if not raw:
        raise ValueError(f"Settings file is empty: {path}")

    return Settings.model_validate(raw)


def resolve_settings(path: Path | None) -> Settings:
    """Explicit paths must exist; the default file is optional."""
    if path is not None:
        return load_settings(path)
    if DEFAULT_SETTINGS_FILE.exists():
        return load_settings(DEFAULT_SETTINGS_FILE)
    return Settings()


class SignalSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    outcomes: list[str] = Field(min_length=1)

    @field_validator("outcomes", mode="before")
    @classmethod
    def labels(cls, v: Any) -> list[str]:
        return [_as_label(x) for x in v]


class PriorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e: str
    a: list[str]
    p: float = Field(ge=0, le=1)

    @field_validator("e", mode="before")
    @classmethod
    def event_label(cls, v: Any) -> str:
        return _as_label(v)

    @field_validator("a", mode="before")
    @classmethod
    def signal_labels(cls, v: Any) -> list[str]:
        return [_as_label(x) for x in v]


class StructureFile(BaseModel):
    """An information structure: E's outcomes, the signals and the prior table."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    event_outcomes: list[str] = Field(min_length=1, alias="event-outcomes")
    signals: list[SignalSpec] = Field(min_length=1)
    prior: list[PriorSpec] = Field(min_length=1)

    @field_validator("event_outcomes", mode="before")
    @classmethod
    def labels(cls, v: Any) -> list[str]:
        return [_as_label(x) for x in v]

    def build(self) -> InformationStructure:
        return InformationStructure.from_table(
            self.event_outcomes,
            [(s.name, s.outcomes) for s in self.signals],
            [(entry.e, entry.a, entry.p) for entry in self.prior],
        )


class Custom1DSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    breakpoints: list[tuple[float, float]] = Field(min_length=2)


class DecisionFile(BaseModel):
    """
    An expected-score function: a decision problem, a registered rule, or a
    piecewise-linear G on binary events.
    """

    model_config = ConfigDict(extra="forbid")

    decisions: list[str] | None = None
    utility: list[list[float]] | None = None
    rule: str | None = None
    custom1d: Custom1DSpec | None = None

    @model_validator(mode="after")
    def exactly_one_form(self) -> DecisionFile:
        forms = [self.utility is not None, self.rule is not None, self.custom1d is not None]
        if sum(forms) != 1:
            raise ValueError("give exactly one of 'utility', 'rule' or 'custom1d'")
        if self.decisions is not None and self.utility is None:
            raise ValueError("'decisions' requires 'utility'")
        return self

    def build(self, structure: InformationStructure) -> ExpectedScoreFunction:
        g: ExpectedScoreFunction
        if self.rule is not None:
            return parse_rule(self.rule, structure)
        if self.custom1d is not None:
            g = Custom1D(tuple(self.custom1d.breakpoints))
        else:
            matrix = np.asarray(self.utility, dtype=float)
            decisions = self.decisions or [f"d{i}" for i in range(matrix.shape[0])]
            g = revelation(DecisionProblem(tuple(decisions), matrix))
        g.check_outcomes(structure.n_outcomes)
        return g


class KnapsackSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    costs: list[float]
    budget: float = Field(ge=0)


class ConstraintFile(BaseModel):
    """A feasibility constraint for signal selection (1-based family members)."""

    model_config = ConfigDict(extra="forbid")

    cardinality: int | None = Field(default=None, ge=0)
    knapsack: KnapsackSpec | None = None
    family: list[list[int]] | None = None

    @model_validator(mode="after")
    def exactly_one_form(self) -> ConstraintFile:
        forms = [self.cardinality is not None, self.knapsack is not None, self.family is not None]
        if sum(forms) != 1:
            raise ValueError("give exactly one of 'cardinality', 'knapsack' or 'family'")
        return self

    def build(self) -> Constraint:
        if self.cardinality is not None:
            return Cardinality(self.cardinality)
        if self.knapsack is not None:
            return Knapsack(tuple(self.knapsack.costs), self.knapsack.budget)
        family = self.family or []
        return ExplicitFamily(tuple(frozenset(i - 1 for i in member) for member in family))


class RuleSpec(BaseModel):
    """One slot of a profile; ``signals`` and garbling fields are 1-based / per rule."""

    model_config = ConfigDict(extra="forbid")

    rule: Literal["truthful", "silent", "coarsened", "garbled"]
    signals: list[int] | None = None
    seed: int = 0
    outcomes: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def fields_match_rule(self) -> RuleSpec:
        if self.rule == "coarsened" and self.signals is None:
            raise ValueError("a coarsened rule needs 'signals'")
        if self.rule != "coarsened" and self.signals is not None:
            raise ValueError(f"'signals' does not apply to a {self.rule} rule")
        if self.rule != "garbled" and self.outcomes is not None:
            raise ValueError(f"'outcomes' does not apply to a {self.rule} rule")
        return self

    def build(self, game: MarketGame, slot: int) -> ReportRule:
        if self.rule == "truthful":
            return Truthful()
        if self.rule == "silent":
            return Silent()
        own = game.signals[game.order[slot]]
        if self.rule == "coarsened":
            subset = [i - 1 for i in self.signals or []]
            return CoarsenedTruthful(game.ctx.signal(subset), f"signals {self.signals}")
        rng = np.random.default_rng(self.seed)
        garbling = Garbling.random(own, self.outcomes or own.n_cells, rng)
        return GarbledTruthful(garbling, f"seed {self.seed}")


class ProfileFile(RootModel[list[RuleSpec]]):
    """A strategy profile: one rule per trading slot; bare strings name simple rules."""

    @field_validator("root", mode="before")
    @classmethod
    def expand_names(cls, v: Any) -> Any:
        if isinstance(v, list):
            return [{"rule": item} if isinstance(item, str) else item for item in v]
        return v

    def build(self, game: MarketGame) -> StrategyProfile:
        return StrategyProfile(tuple(spec.build(game, t) for t, spec in enumerate(self.root)))


class GameFile(BaseModel):
    """
    A market game: structure (inline or fixture name), rule, traders' signals and order.

    Trader signal indices and the order are 1-based.
    """

    model_config = ConfigDict(extra="forbid")

    structure: StructureFile | str
    rule: DecisionFile | str
    traders: list[list[int]] = Field(min_length=1)
    order: list[int] = Field(min_length=1)

    @model_validator(mode="after")
    def validate_order(self) -> GameFile:
        for slot, trader in enumerate(self.order, start=1):
            if not 1 <= trader <= len(self.traders):
                raise ValueError(
                    f"order slot {slot} names trader {trader}; traders are 1..{len(self.traders)}"
                )
        for previous, current in zip(self.order, self.order[1:]):
            if previous == current:
                raise ValueError(f"trader {current} trades twice in a row")
        return self

    def build_structure(self) -> InformationStructure:
        if isinstance(self.structure, str):
            return parse_fixture(self.structure)
        return self.structure.build()

    def build(self) -> MarketGame:
        structure = self.build_structure()
        if isinstance(self.rule, str):
            g = parse_rule(self.rule, structure)
        else:
            g = self.rule.build(structure)
        return MarketGame(
            ValueContext(structure, g),
            tuple(tuple(j - 1 for j in signals) for signals in self.traders),
            tuple(i - 1 for i in self.order),
        )


def load_document(path: Path, model: type[Model]) -> Model:
    """
    Load a JSON or YAML document and validate it against ``model``.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: On a YAML syntax error (with line and column) or an empty file
    """
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    with open(path) as f:
        try:
            raw = yaml.safe_load(f)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ValueError(f"Cannot parse {path}{where}: {exc.problem}") from None

    if raw is None:
        raise ValueError(f"File is empty: {path}")

    return model.model_validate(raw)


def generate_json_schema() -> dict[str, Any]:
    """JSON schema of the game file format."""
    return GameFile.model_json_schema(by_alias=True)
