"""Documentation contract tests."""

from pathlib import Path

from infosubs.cli import PROFILES, app
from infosubs.config import THREADS_ENV, Settings
from infosubs.fixtures import FIXTURES, RULES
from infosubs.selection import SET_FUNCTIONS

ROOT = Path(__file__).parent.parent.parent


def _user_markdown() -> str:
    return "\n".join(
        path.read_text(encoding="utf-8")
        for path in [ROOT / "README.md", *sorted((ROOT / "docs").rglob("*.md"))]
    )


def _page(*parts: str) -> str:
    return (ROOT / "docs").joinpath(*parts).read_text(encoding="utf-8")


def _command_names() -> list[str]:
    return [
        command.name or (command.callback.__name__ if command.callback else "")
        for command in app.registered_commands
    ]


def test_every_command_has_a_reference_section() -> None:
    """Each subcommand must be listed and documented under its own heading."""
    commands = _page("reference", "commands.md")
    missing = [name for name in _command_names() if f"## infosubs {name}" not in commands]

    assert not missing


def test_every_setting_is_documented() -> None:
    """The configuration page must list every infosubs.yml field by its file key."""
    configuration = _page("configuration", "index.md")
    keys = [field.alias or name for name, field in Settings.model_fields.items()]
    missing = [key for key in keys if f"| `{key}` |" not in configuration]

    assert not missing


def test_registries_are_documented() -> None:
    """Fixtures, rules and set functions must appear in the reference docs."""
    inputs = _page("reference", "inputs.md")
    commands = _page("reference", "commands.md")

    assert not [name for name in FIXTURES if f"`{name}`" not in inputs]
    assert not [name for name in RULES if f"`{name}" not in inputs]
    assert not [name for name in SET_FUNCTIONS if f"`{name}:" not in commands]


def test_profiles_are_documented() -> None:
    """Every --profile value must be explained on the markets page."""
    markets = _page("concepts", "markets.md")

    assert not [name for name in PROFILES if f"`{name}`" not in markets]


def test_environment_variable_is_documented() -> None:
    """The thread-count variable must be on the environment page."""
    assert THREADS_ENV in _page("reference", "environment-vars.md")


def test_nav_lists_every_page() -> None:
    """Every docs page except 404 must be reachable from the navigation."""
    nav = (ROOT / "zensical.toml").read_text(encoding="utf-8")
    pages = [
        path.relative_to(ROOT / "docs").as_posix()
        for path in (ROOT / "docs").rglob("*.md")
        if path.name != "404.md"
    ]

    assert not [page for page in pages if f'"{page}"' not in nav]


def test_docs_use_one_based_indices() -> None:
    """Examples must not show 0-based subsets."""
    markdown = _user_markdown()

    assert "--subset 0" not in markdown
    assert "--order 0" not in markdown


def test_changelog_is_public_release_history() -> None:
    """The changelog should stay factual and user-facing."""
    changelog_path = ROOT / "CHANGELOG.md"
    readme = (ROOT / "README.md").read_text(encoding="utf-8")
    changelog = changelog_path.read_text(encoding="utf-8")
    lowered = changelog.lower()

    assert changelog_path.exists()
    assert "[Changelog](CHANGELOG.md)" in readme
    assert "## [0.1.0]" in changelog
    for phrase in [
        "conversation",
        "ai agent",
        "ai-generated",
        "autonomous agent",
        "we haven't",
        "for now",
        "future work",
        "deferred",
    ]:
        assert phrase not in lowered
