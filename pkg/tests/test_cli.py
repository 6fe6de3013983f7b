"""Tests for CLI module."""

import json
from pathlib import Path
from textwrap import dedent

import pytest
from typer.testing import CliRunner

from infosubs.cli import _parse_indices, _realization, _subset_label, app
from infosubs.fixtures import dup2

runner = CliRunner()


@pytest.fixture
def fast_settings(tmp_path: Path) -> Path:
    """Settings with a small deviation class so equilibrium checks stay quick."""
    settings_file = tmp_path / "infosubs.yml"
    settings_file.write_text(
        dedent("""
        garbled-deviations: 2
        budget: 3
    """)
    )
    return settings_file


class TestHelpers:
    """Tests for argument parsing helpers."""

    def test_parse_indices(self) -> None:
        """Test that 1-based lists become 0-based tuples."""
        assert _parse_indices("1,3", 3) == (0, 2)
        assert _parse_indices(" ", 3) == ()

    def test_parse_indices_out_of_range(self) -> None:
        """Test that indices beyond n are rejected."""
        with pytest.raises(ValueError, match="out of range 1..2"):
            _parse_indices("3", 2)
        with pytest.raises(ValueError, match="malformed"):
            _parse_indices("a", 2)

    def test_subset_label(self) -> None:
        """Test that the empty set prints as bottom."""
        assert _subset_label(()) == "⊥"
        assert _subset_label((0, 2)) == "{1,3}"

    def test_realization(self) -> None:
        """Test that labels map to outcome indices."""
        assert _realization(dup2(), "1:1,1") == (1, (1, 1))
        with pytest.raises(ValueError, match="does not match"):
            _realization(dup2(), "1:1")


class TestValueCommand:
    """Tests for the value command."""

    def test_xor_values(self) -> None:
        """Test every subset of XOR under the log rule."""
        result = runner.invoke(app, ["value", "-f", "xor2", "-r", "log", "--json"])

        assert result.exit_code == 0
        values = json.loads(result.stdout)["values"]
        assert [v["subset"] for v in values] == [[], [1], [2], [1, 2]]
        assert values[3]["value"] == pytest.approx(0.0, abs=1e-12)
        assert values[0]["value"] == pytest.approx(-1.0)

    def test_table_output(self) -> None:
        """Test that the table names subsets with 1-based labels."""
        result = runner.invoke(app, ["value", "-f", "or2", "-r", "custom1d:kink075"])

        assert result.exit_code == 0
        assert "{1,2}" in result.stdout
        assert "0.1875" in result.stdout

    def test_sampled_needs_a_seed(self) -> None:
        """Test that sampling without a seed is refused."""
        result = runner.invoke(app, ["value", "-f", "ci", "-r", "log", "--sampled"])

        assert result.exit_code == 1
        assert "needs a seed" in result.stdout

    def test_sampled_value(self) -> None:
        """Test a seeded sampled estimate with its sample count."""
        result = runner.invoke(
            app,
            ["--seed", "3", "value", "-f", "ci", "-r", "log", "--sampled", "--subset", "1,2",
             "--json"],
        )

        assert result.exit_code == 0
        (entry,) = json.loads(result.stdout)["values"]
        assert entry["samples"] > 0

    def test_structure_and_decision_files(self, tmp_path: Path) -> None:
        """Test loading a YAML structure and a decision problem."""
        structure = tmp_path / "dup.yml"
        structure.write_text(
            dedent("""
            event-outcomes: [0, 1]
            signals:
              - {name: A1, outcomes: [0, 1]}
              - {name: A2, outcomes: [0, 1]}
            prior:
              - {e: 0, a: [0, 0], p: 0.5}
              - {e: 1, a: [1, 1], p: 0.5}
        """)
        )
        decision = tmp_path / "guess.yml"
        decision.write_text("utility: [[1, 0], [0, 1]]\n")

        result = runner.invoke(
            app,
            ["value", "-s", str(structure), "-d", str(decision), "--subset", "1", "--json"],
        )

        assert result.exit_code == 0
        assert json.loads(result.stdout)["values"][0]["value"] == pytest.approx(1.0)

    def test_fixture_and_structure_together(self, tmp_path: Path) -> None:
        """Test that exactly one structure source is required."""
        result = runner.invoke(
            app, ["value", "-f", "xor2", "-s", str(tmp_path / "x.yml"), "-r", "log"]
        )

        assert result.exit_code == 1
        assert "exactly one of --fixture or --structure" in result.stdout

    def test_unknown_fixture(self) -> None:
        """Test error for an unregistered fixture."""
        result = runner.invoke(app, ["value", "-f", "nope", "-r", "log"])

        assert result.exit_code == 1
        assert "unknown fixture" in result.stdout


class TestClassifyCommand:
    """Tests for the classify command."""

    def test_quadratic_counterexample(self) -> None:
        """Test that the weak level reports the substitutes violation."""
        result = runner.invoke(app, ["classify", "-f", "ci?r=0.9,s=0.8", "-r", "quadratic"])

        assert result.exit_code == 0
        assert "substitutes: no" in result.stdout
        assert "violates-substitutes" in result.stdout

    def test_moderate_json(self) -> None:
        """Test the moderate level as JSON."""
        result = runner.invoke(
            app, ["classify", "-f", "pair", "-r", "pair", "--level", "moderate", "--json"]
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["level"] == "moderate"
        assert data["summary"] == "neither substitutes nor complements"

    def test_strong_needs_a_seed(self) -> None:
        """Test that the garbling search refuses to run unseeded."""
        result = runner.invoke(app, ["classify", "-f", "xor2", "-r", "log", "--level", "strong"])

        assert result.exit_code == 1
        assert "needs a seed" in result.stdout

    def test_strong_level(self) -> None:
        """Test a seeded strong refutation."""
        result = runner.invoke(
            app,
            ["--seed", "1", "classify", "-f", "xor2", "-r", "log", "--level", "strong",
             "--budget", "2", "--json"],
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["level"] == "strong-refutation"
        assert data["complements"] == "no violation found"

    @pytest.mark.parametrize(
        ("check", "fixture", "key", "expected"),
        [
            ("trivial", "dup2", "triviality", "trivial-substitutes"),
            ("geometric", "xor2?q=0.6", "holds", True),
        ],
    )
    def test_structural_checks(self, check: str, fixture: str, key: str, expected: object) -> None:
        """Test checks that need only a structure."""
        result = runner.invoke(app, ["classify", "-f", fixture, "--check", check, "--json"])

        assert result.exit_code == 0
        assert json.loads(result.stdout)[key] == expected

    def test_separation_refused(self) -> None:
        """Test that DUP2 has no separating decision problem."""
        result = runner.invoke(app, ["classify", "-f", "dup2", "--check", "separating"])

        assert result.exit_code == 1
        assert "hull" in result.stdout

    def test_pointwise_check(self) -> None:
        """Test pointwise substitutes on erasure signals."""
        result = runner.invoke(
            app, ["classify", "-f", "erasure", "-r", "guess", "--check", "pointwise", "--json"]
        )

        assert result.exit_code == 0
        assert json.loads(result.stdout)["holds"] is True


class TestSelectCommand:
    """Tests for the select command."""

    def test_greedy_with_ratio_check(self) -> None:
        """Test that greedy meets its bound on CI signals under log."""
        result = runner.invoke(
            app, ["select", "-f", "ci3", "-r", "log", "--cardinality", "2", "--check-ratio",
                  "--json"]
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["algorithm"] == "greedy"
        assert data["selection"]["subset"] == [1, 2]
        assert data["ratio"] >= data["bound"]

    def test_knapsack_by_default(self) -> None:
        """Test that costs select the knapsack algorithm."""
        result = runner.invoke(
            app, ["select", "-f", "ci3", "-r", "log", "--costs", "1,1,2", "--budget", "2",
                  "--json"]
        )

        assert result.exit_code == 0
        assert json.loads(result.stdout)["algorithm"] == "knapsack"

    def test_constraint_file(self, tmp_path: Path) -> None:
        """Test an explicit family from a constraint file."""
        constraint = tmp_path / "family.yml"
        constraint.write_text("family: [[1, 2], [3]]\n")

        result = runner.invoke(
            app, ["select", "-f", "ci3", "-r", "log", "--constraint", str(constraint), "--json"]
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["algorithm"] == "brute"
        assert data["selection"]["subset"] == [1, 2]

    def test_missing_constraint(self) -> None:
        """Test that a constraint is required."""
        result = runner.invoke(app, ["select", "-f", "ci3", "-r", "log"])

        assert result.exit_code == 1
        assert "exactly one of --cardinality" in result.stdout


class TestAdaptiveCommand:
    """Tests for the adaptive command."""

    def test_single_realization(self) -> None:
        """Test one branch of the policy on DUP2."""
        result = runner.invoke(
            app, ["adaptive", "-f", "dup2", "-r", "guess", "-k", "1", "--realization", "1:1,1",
                  "--json"]
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["decision"] == "guess 1"
        assert data["chosen"] == [1]

    def test_policy_values(self) -> None:
        """Test that small instances include the optimal policy."""
        result = runner.invoke(app, ["adaptive", "-f", "erasure", "-r", "guess", "-k", "2",
                                     "--json"])

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["adaptive-greedy"] <= data["optimal-policy"] + 1e-9


class TestReduceCommand:
    """Tests for the reduce command."""

    def test_verify(self) -> None:
        """Test that the reduction reproduces a modular f."""
        result = runner.invoke(app, ["reduce", "--setfn", "modular:1,2,3", "--verify"])

        assert result.exit_code == 0
        assert "V(S)=f(S) for all 8 subsets" in result.stdout

    def test_greedy_on_set_function(self) -> None:
        """Test plain greedy on a registered set function."""
        result = runner.invoke(
            app, ["reduce", "--setfn", "modular:1,3,2", "--greedy", "2", "--json"]
        )

        assert result.exit_code == 0
        assert json.loads(result.stdout)["greedy"]["subset"] == [2, 3]

    def test_unknown_set_function(self) -> None:
        """Test error for an unregistered set function."""
        result = runner.invoke(app, ["reduce", "--setfn", "sum:3"])

        assert result.exit_code == 1
        assert "unknown set function" in result.stdout


class TestMarketCommand:
    """Tests for the market command."""

    def test_all_rush_verified(self, fast_settings: Path) -> None:
        """Test that all-rush is deviation-proof on CI under log."""
        result = runner.invoke(
            app,
            ["--config", str(fast_settings), "market", "-f", "ci", "-r", "log", "--order",
             "1,2,1", "--verify", "--json"],
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["all-rush"] is True
        assert data["equilibrium"]["verified"] is True

    def test_all_delay_rejected(self, fast_settings: Path) -> None:
        """Test that a rejected equilibrium exits 1."""
        result = runner.invoke(
            app,
            ["--config", str(fast_settings), "market", "-f", "ci", "-r", "log", "--order",
             "1,2,1", "--profile", "all-delay", "--verify"],
        )

        assert result.exit_code == 1
        assert "rejected" in result.stdout

    def test_price_path(self) -> None:
        """Test replaying one realization."""
        result = runner.invoke(
            app,
            ["market", "-f", "ci", "-r", "log", "--order", "1,2,1", "--realization", "1:1,1",
             "--json"],
        )

        assert result.exit_code == 0
        prices = json.loads(result.stdout)["run"]["prices"]
        assert prices[1] == pytest.approx([0.2, 0.8])

    def test_game_and_profile_files(self, tmp_path: Path) -> None:
        """Test a game and a profile given as YAML files."""
        game = tmp_path / "game.yml"
        game.write_text(
            dedent("""
            structure: ci
            rule: log
            traders: [[1], [2]]
            order: [1, 2, 1]
        """)
        )
        profile = tmp_path / "profile.yml"
        profile.write_text("[silent, truthful, truthful]\n")

        result = runner.invoke(
            app, ["market", "--game", str(game), "--profile-file", str(profile), "--json"]
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["all-delay"] is True
        assert len(data["expected-payoffs"]) == 2

    def test_rush_refutation(self, fast_settings: Path) -> None:
        """Test the Alice-Bob-Alice refutation on the quadratic counterexample."""
        result = runner.invoke(
            app,
            ["--config", str(fast_settings), "market", "-f", "ci?r=0.9,s=0.8", "-r",
             "quadratic", "--refute", "rush", "--json"],
        )

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["gain"] > 0
        assert data["gain"] == pytest.approx(data["predicted-gain"], abs=1e-9)

    def test_refutation_skipped(self) -> None:
        """Test that a non-distinguishable structure exits 1."""
        result = runner.invoke(app, ["market", "-f", "xor2", "-r", "log", "--refute", "delay"])

        assert result.exit_code == 1
        assert "skipped" in result.stdout

    def test_unknown_profile(self) -> None:
        """Test error for an unknown profile name."""
        result = runner.invoke(app, ["market", "-f", "ci", "-r", "log", "--profile", "greedy"])

        assert result.exit_code == 1
        assert "unknown profile" in result.stdout


class TestSettingsOption:
    """Tests for the global options."""

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test error when the settings file doesn't exist."""
        result = runner.invoke(
            app, ["--config", str(tmp_path / "missing.yml"), "value", "-f", "xor2", "-r", "log"]
        )

        assert result.exit_code == 1
        assert "not found" in result.stdout.lower()

    def test_invalid_config(self, tmp_path: Path) -> None:
        """Test error for an unknown settings key."""
        settings_file = tmp_path / "infosubs.yml"
        settings_file.write_text("tolerence: 1.0e-6\n")

        result = runner.invoke(
            app, ["--config", str(settings_file), "value", "-f", "xor2", "-r", "log"]
        )

        assert result.exit_code == 1


class TestInfoCommands:
    """Tests for fixtures, schema and version."""

    def test_fixtures(self) -> None:
        """Test that registries are listed."""
        result = runner.invoke(app, ["fixtures", "--json"])

        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert "xor2" in data["fixtures"]
        assert "log" in data["rules"]
        assert "hardness" in data["set-functions"]

    def test_schema(self) -> None:
        """Test that schema command outputs valid JSON."""
        result = runner.invoke(app, ["schema"])

        assert result.exit_code == 0
        schema = json.loads(result.stdout)
        assert "properties" in schema

    def test_version(self) -> None:
        """Test that version prints something."""
        result = runner.invoke(app, ["version"])

        assert result.exit_code == 0
        assert result.stdout.strip()
