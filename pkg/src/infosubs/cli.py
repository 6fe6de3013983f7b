"""
infosubs CLI.

Typer front end over the library: each subcommand loads a structure (a
registered fixture or a structure file) and an expected-score function (a
registered rule or a decision file), runs one operation and prints a rich
table, or JSON with --json. Signal, trader and slot indices on the command
line are 1-based.

Exit codes: 0 on success, 1 on an error or a negative verdict (refusal,
failed verification, ratio below the greedy bound, reduction mismatch,
rejected equilibrium).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import StrEnum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Annotated, Any

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .classify import (
    Level,
    check_pointwise_substitutes,
    check_trivial,
    classify_moderate,
    classify_strong,
    classify_weak,
    probe_joint_convexity,
    separating_decision_problem,
    universal_complements_geometric,
)
from .config import (
    ConstraintFile,
    DecisionFile,
    GameFile,
    ProfileFile,
    Settings,
    StructureFile,
    generate_json_schema,
    load_document,
    resolve_settings,
)
from .errors import InfosubsError
from .fixtures import FIXTURES, RULES, parse_fixture, parse_rule
from .info_model import InformationStructure
from .market import (
    MarketGame,
    StrategyProfile,
    all_delay_profile,
    all_rush_profile,
    delay_refutation,
    expected_payoffs,
    is_all_delay,
    is_all_rush,
    run_market,
    rush_refutation,
    silent_profile,
    truthful_profile,
    verify_equilibrium,
)
from .selection import (
    SET_FUNCTIONS,
    Cardinality,
    Constraint,
    ExplicitFamily,
    Knapsack,
    Selection,
    adaptive_greedy,
    adaptive_greedy_value,
    approximation_ratio,
    brute_force_policy,
    brute_force_select,
    greedy_bound,
    greedy_select,
    knapsack_bound,
    knapsack_select,
    parse_set_function,
    reduce_from_set_function,
)
from .value import ValueContext, value_sampled

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="infosubs",
    help="Value of information, informational substitutes and complements.",
    no_args_is_help=True,
)
console = Console()


@dataclass
class _State:
    settings: Settings = field(default_factory=Settings)
    json: bool = False


state = _State()


class LevelOption(StrEnum):
    WEAK = "weak"
    MODERATE = "moderate"
    STRONG = "strong"


class Check(StrEnum):
    POINTWISE = "pointwise"
    TRIVIAL = "trivial"
    GEOMETRIC = "geometric"
    SEPARATING = "separating"
    JOINT_CONVEXITY = "joint-convexity"


class Algorithm(StrEnum):
    GREEDY = "greedy"
    BRUTE = "brute"
    KNAPSACK = "knapsack"


class Refutation(StrEnum):
    RUSH = "rush"
    DELAY = "delay"


PROFILES = {
    "all-rush": all_rush_profile,
    "all-delay": all_delay_profile,
    "truthful": truthful_profile,
    "silent": silent_profile,
}


def _package_version() -> str:
    try:
        return version("infosubs")
    except PackageNotFoundError:
        return "unknown"


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@contextmanager
def _errors() -> Iterator[None]:
    """Turn library and input errors into a red message and exit code 1."""
    try:
        yield
    except (InfosubsError, FileNotFoundError, ValueError) as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1) from None


def _verdict(ok: bool, message: str) -> None:
    if ok:
        console.print(f"[green]✅ {message}[/green]")
    else:
        console.print(f"[red]❌ {message}[/red]")


def _finish(data: dict[str, Any], ok: bool = True) -> None:
    if state.json:
        console.print_json(data=data)
    if not ok:
        raise typer.Exit(1)


def _quantity_table(title: str, rows: list[tuple[str, Any]]) -> None:
    if state.json:
        return
    table = Table(title=title)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for name, value in rows:
        table.add_row(name, f"{value:.12g}" if isinstance(value, float) else str(value))
    console.print(table)


def _parse_indices(text: str, n: int, what: str = "signal") -> tuple[int, ...]:
    """'1,3' -> (0, 2); an empty string is the empty set."""
    text = text.strip()
    if not text:
        return ()
    try:
        indices = tuple(int(part) - 1 for part in text.split(","))
    except ValueError:
        raise ValueError(f"malformed {what} list '{text}'") from None
    for i in indices:
        if not 0 <= i < n:
            raise ValueError(f"{what} {i + 1} out of range 1..{n}")
    return indices


def _subset_label(subset: tuple[int, ...]) -> str:
    return "{" + ",".join(str(i + 1) for i in subset) + "}" if subset else "⊥"


def _load_structure(fixture: str | None, structure: Path | None) -> InformationStructure:
    if (fixture is None) == (structure is None):
        raise ValueError("give exactly one of --fixture or --structure")
    if structure is not None:
        return load_document(structure, StructureFile).build()
    return parse_fixture(fixture or "")


def _load_context(
    fixture: str | None, structure: Path | None, rule: str | None, decision: Path | None
) -> ValueContext:
    built = _load_structure(fixture, structure)
    if (rule is None) == (decision is None):
        raise ValueError("give exactly one of --rule or --decision")
    if decision is not None:
        return ValueContext(built, load_document(decision, DecisionFile).build(built))
    return ValueContext(built, parse_rule(rule or "", built))


def _realization(structure: InformationStructure, text: str) -> tuple[int, tuple[int, ...]]:
    """'e:a1,a2' in outcome labels -> (e index, signal outcome indices)."""
    event, _, signals = text.partition(":")
    labels = signals.split(",") if signals else []
    try:
        e = structure.event_outcomes.index(event)
        a = tuple(
            s.outcomes.index(label) for s, label in zip(structure.signals, labels, strict=True)
        )
    except ValueError:
        raise ValueError(
            f"realization '{text}' does not match the structure's labels "
            f"(expected 'event:signal1,...,signal{structure.n}')"
        ) from None
    return e, a


FixtureOpt = Annotated[
    str | None, typer.Option("--fixture", "-f", help="Registered structure, e.g. xor2?q=0.6")
]
StructureOpt = Annotated[
    Path | None, typer.Option("--structure", "-s", help="Structure file (JSON or YAML)")
]
RuleOpt = Annotated[str | None, typer.Option("--rule", "-r", help="Registered rule, e.g. log")]
DecisionOpt = Annotated[
    Path | None, typer.Option("--decision", "-d", help="Decision-problem file (JSON or YAML)")
]
JsonOpt = Annotated[bool, typer.Option("--json", help="Print JSON instead of tables")]


@app.callback()
def main(
    config_path: Annotated[
        Path | None, typer.Option("--config", "-c", help="Settings file (default: infosubs.yml)")
    ] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")] = False,
    tolerance: Annotated[float | None, typer.Option(help="Comparison tolerance")] = None,
    seed: Annotated[int | None, typer.Option(help="Seed for stochastic operations")] = None,
    threads: Annotated[int | None, typer.Option(help="Worker threads")] = None,
) -> None:
    """Value of information, informational substitutes and complements."""
    _configure_logging(verbose)
    with _errors():
        settings = resolve_settings(config_path)
        overrides = {
            key: value
            for key, value in (("tolerance", tolerance), ("seed", seed), ("threads", threads))
            if value is not None
        }
        state.settings = Settings.model_validate(settings.model_dump() | overrides)
    logger.debug("Settings: %s", state.settings.model_dump(by_alias=True))
    state.json = False


@app.command()
def value(
    fixture: FixtureOpt = None,
    structure: StructureOpt = None,
    rule: RuleOpt = None,
    decision: DecisionOpt = None,
    subsets: Annotated[
        list[str] | None,
        typer.Option("--subset", help="Signals as '1,2'; '' is ⊥. Repeatable (default: all)"),
    ] = None,
    sampled: Annotated[bool, typer.Option(help="Estimate by sampling the prior")] = False,
    eps: Annotated[float, typer.Option(help="Additive error for --sampled")] = 0.05,
    delta: Annotated[float, typer.Option(help="Failure probability for --sampled")] = 0.05,
    json_output: JsonOpt = False,
) -> None:
    """Compute V for subsets of signals."""
    state.json = json_output
    settings = state.settings
    with _errors():
        ctx = _load_context(fixture, structure, rule, decision)
        if subsets is None:
            chosen = [
                s
                for size in range(ctx.n + 1)
                for s in itertools.combinations(range(ctx.n), size)
            ]
        else:
            chosen = [_parse_indices(text, ctx.n) for text in subsets]

        results = []
        for subset in chosen:
            entry: dict[str, Any] = {"subset": [i + 1 for i in subset]}
            if sampled:
                if settings.seed is None:
                    raise ValueError("--sampled needs a seed (--seed or 'seed' in settings)")
                estimate = value_sampled(
                    ctx,
                    subset,
                    eps,
                    delta,
                    settings.seed,
                    clamp_floor=settings.clamp_floor,
                    subset_cap=settings.subset_cap,
                )
                entry |= {
                    "value": estimate.estimate,
                    "samples": estimate.samples,
                    "range": estimate.k_range,
                    "clamped": estimate.clamped,
                }
            else:
                entry |= {"value": ctx.subset_value(subset), "gain": ctx.normalized(subset)}
            results.append(entry)

    if not state.json:
        table = Table(title="Value of information" + (" (sampled)" if sampled else ""))
        table.add_column("Subset", style="cyan")
        table.add_column("V", style="green")
        table.add_column("Samples" if sampled else "V - V(⊥)", style="green")
        for entry in results:
            extra = entry["samples"] if sampled else entry["gain"]
            table.add_row(
                _subset_label(tuple(i - 1 for i in entry["subset"])),
                f"{entry['value']:.12g}",
                f"{extra:.12g}" if isinstance(extra, float) else str(extra),
            )
        console.print(table)
    _finish({"rule": ctx.g.kind, "values": results})


@app.command()
def classify(
    fixture: FixtureOpt = None,
    structure: StructureOpt = None,
    rule: RuleOpt = None,
    decision: DecisionOpt = None,
    level: Annotated[LevelOption, typer.Option(help="Lattice level")] = LevelOption.WEAK,
    check: Annotated[
        Check | None, typer.Option(help="Run a structural test instead of a level")
    ] = None,
    budget: Annotated[int | None, typer.Option(help="Garbling restarts for --level strong")] = None,
    meet_lower_bound: Annotated[
        bool, typer.Option(help="Moderate level: only coarsenings above meet(A, B)")
    ] = False,
    json_output: JsonOpt = False,
) -> None:
    """Classify the signals as substitutes or complements."""
    state.json = json_output
    settings = state.settings
    tol = settings.tolerance
    with _errors():
        if check is not None:
            _run_check(check, fixture, structure, rule, decision)
            return
        ctx = _load_context(fixture, structure, rule, decision)
        if level is LevelOption.WEAK:
            report = classify_weak(ctx, tol, settings.subset_cap)
        elif level is LevelOption.MODERATE:
            report = classify_moderate(
                ctx,
                tol,
                settings.moderate_coarsening_cap,
                meet_lower_bound=meet_lower_bound,
                threads=settings.threads,
            )
        else:
            if settings.seed is None:
                raise ValueError("--level strong needs a seed (--seed or 'seed' in settings)")
            report = classify_strong(
                ctx,
                budget or settings.budget,
                settings.seed,
                tol=tol,
                moderate_cap=settings.moderate_coarsening_cap,
            )
        report.replay(ctx)

    if not state.json:
        if report.level is Level.STRONG:
            console.print(f"[bold]{report.summary}[/bold]")
        else:
            _verdict(report.is_substitutes, f"substitutes: {report.substitutes}")
            _verdict(report.is_complements, f"complements: {report.complements}")
            console.print(f"[bold]{report.summary}[/bold]")
        if report.bounded:
            console.print("[yellow]⚠️ bounded coarsening enumeration[/yellow]")
        for witness in report.witnesses:
            console.print(
                f"  {witness.kind}: A={_subset_label(witness.a_subset)} "
                f"B={_subset_label(witness.b_subset)} "
                f"V(A' v B) - V(A') = {witness.lhs:.9g}, V(A v B) - V(A) = {witness.rhs:.9g}"
            )
    _finish(report.to_dict())


def _run_check(
    check: Check,
    fixture: str | None,
    structure: Path | None,
    rule: str | None,
    decision: Path | None,
) -> None:
    settings = state.settings
    tol = settings.tolerance
    data: dict[str, Any]
    if check is Check.TRIVIAL:
        built = _load_structure(fixture, structure)
        data = {"triviality": str(check_trivial(built))}
        _quantity_table("Triviality", [("Verdict", data["triviality"])])
    elif check is Check.GEOMETRIC:
        geometric = universal_complements_geometric(_load_structure(fixture, structure), tol)
        data = geometric.to_dict()
        _quantity_table(
            "Geometric complements test",
            [
                ("Single-signal radius r", geometric.radius),
                ("Closest two-signal posterior", geometric.min_joint_distance),
                ("Holds", geometric.holds),
            ],
        )
    elif check is Check.SEPARATING:
        built = _load_structure(fixture, structure)
        g = separating_decision_problem(built, tol, settings.subset_cap)
        report = classify_weak(ValueContext(built, g), tol, settings.subset_cap)
        data = {"g": g.to_dict(), "weak": report.to_dict()}
        _quantity_table(
            "Separating decision problem",
            [("Hull vertices", len(g.vertices)), ("Weak verdict", report.summary)],
        )
    elif check is Check.POINTWISE:
        ctx = _load_context(fixture, structure, rule, decision)
        pointwise = check_pointwise_substitutes(ctx, tol, settings.subset_cap)
        data = pointwise.to_dict()
        _quantity_table(
            "Pointwise substitutes",
            [("Comparisons", pointwise.comparisons), ("Holds", pointwise.holds)],
        )
    else:
        ctx = _load_context(fixture, structure, rule, decision)
        seed = settings.seed if settings.seed is not None else 0
        convexity = probe_joint_convexity(ctx.g, settings.probe_samples, seed, tol)
        data = convexity.to_dict()
        _quantity_table(
            "Joint convexity of D_G",
            [("Worst gap", convexity.worst_gap), ("Holds", convexity.holds)],
        )
    _finish(data)


def _constraint(
    cardinality: int | None,
    costs: str | None,
    budget: float | None,
    constraint_path: Path | None,
) -> Constraint:
    given = [cardinality is not None, costs is not None, constraint_path is not None]
    if sum(given) != 1:
        raise ValueError("give exactly one of --cardinality, --costs (with --budget), --constraint")
    if cardinality is not None:
        return Cardinality(cardinality)
    if costs is not None:
        if budget is None:
            raise ValueError("--costs needs --budget")
        return Knapsack(tuple(float(c) for c in costs.split(",")), budget)
    return load_document(constraint_path or Path(), ConstraintFile).build()


def _guarantee(algorithm: Algorithm, constraint: Constraint, partial_enumeration: bool) -> float:
    if algorithm is Algorithm.GREEDY and isinstance(constraint, Cardinality):
        return greedy_bound(constraint.k)
    if algorithm is Algorithm.KNAPSACK:
        return knapsack_bound(partial_enumeration)
    return 1.0


@app.command()
def select(
    fixture: FixtureOpt = None,
    structure: StructureOpt = None,
    rule: RuleOpt = None,
    decision: DecisionOpt = None,
    cardinality: Annotated[int | None, typer.Option(help="Pick exactly k signals")] = None,
    costs: Annotated[str | None, typer.Option(help="Knapsack costs per signal, '1,2,3'")] = None,
    budget: Annotated[float | None, typer.Option(help="Knapsack budget")] = None,
    constraint_path: Annotated[
        Path | None, typer.Option("--constraint", help="Constraint file (JSON or YAML)")
    ] = None,
    algorithm: Annotated[
        Algorithm | None, typer.Option(help="Default: greedy / knapsack / brute by constraint")
    ] = None,
    lazy: Annotated[bool, typer.Option(help="Lazy greedy evaluation")] = True,
    partial_enumeration: Annotated[
        bool, typer.Option(help="Knapsack: also start from every seed of up to 3 signals")
    ] = False,
    check_ratio: Annotated[
        bool, typer.Option(help="Compare with brute force; fail below the greedy bound")
    ] = False,
    json_output: JsonOpt = False,
) -> None:
    """Choose a subset of signals under a constraint."""
    state.json = json_output
    settings = state.settings
    with _errors():
        ctx = _load_context(fixture, structure, rule, decision)
        chosen_constraint = _constraint(cardinality, costs, budget, constraint_path)
        chosen_constraint.validate(ctx.n)
        if algorithm is None:
            algorithm = {
                Cardinality: Algorithm.GREEDY,
                Knapsack: Algorithm.KNAPSACK,
                ExplicitFamily: Algorithm.BRUTE,
            }[type(chosen_constraint)]

        selection: Selection
        if algorithm is Algorithm.BRUTE:
            selection = brute_force_select(ctx, chosen_constraint, settings.selection_cap)
        elif algorithm is Algorithm.GREEDY:
            if not isinstance(chosen_constraint, Cardinality):
                raise ValueError("greedy selection needs a cardinality constraint")
            selection = greedy_select(ctx, chosen_constraint.k, lazy=lazy)
        else:
            if not isinstance(chosen_constraint, Knapsack):
                raise ValueError("knapsack selection needs knapsack costs")
            selection = knapsack_select(
                ctx,
                chosen_constraint.costs,
                chosen_constraint.budget,
                partial_enumeration=partial_enumeration,
            )

        data: dict[str, Any] = {"algorithm": algorithm.value, "selection": selection.to_dict()}
        rows: list[tuple[str, Any]] = [
            ("Algorithm", algorithm.value),
            ("Selected", _subset_label(selection.subset)),
            ("V", selection.value),
            ("V - V(⊥)", selection.value - ctx.subset_value(())),
        ]
        ok = True
        ratio = bound = math.nan
        if check_ratio:
            optimum = brute_force_select(ctx, chosen_constraint, settings.selection_cap)
            ratio = approximation_ratio(selection.value, optimum.value, ctx.subset_value(()))
            bound = _guarantee(algorithm, chosen_constraint, partial_enumeration)
            ok = ratio >= bound - settings.tolerance
            data |= {"optimum": optimum.to_dict(), "ratio": ratio, "bound": bound}
            rows += [("Optimum", _subset_label(optimum.subset)), ("Ratio", ratio), ("Bound", bound)]

    _quantity_table("Signal selection", rows)
    if check_ratio and not state.json:
        _verdict(ok, f"ratio {ratio:.6g} vs bound {bound:.6g}")
    _finish(data, ok)


@app.command()
def adaptive(
    fixture: FixtureOpt = None,
    structure: StructureOpt = None,
    rule: RuleOpt = None,
    decision: DecisionOpt = None,
    k: Annotated[int, typer.Option("--k", "-k", help="Signals to observe")] = 1,
    realization: Annotated[
        str | None, typer.Option(help="Follow one branch: 'event:signal1,signal2,...' labels")
    ] = None,
    json_output: JsonOpt = False,
) -> None:
    """Run the adaptive greedy policy."""
    state.json = json_output
    settings = state.settings
    with _errors():
        ctx = _load_context(fixture, structure, rule, decision)
        if realization is not None:
            run = adaptive_greedy(ctx, k, _realization(ctx.structure, realization))
            data = run.to_dict()
            rows: list[tuple[str, Any]] = [
                ("Observed signals", _subset_label(tuple(sorted(run.chosen)))),
                ("Order", ", ".join(str(i + 1) for i in run.chosen)),
                ("Decision", run.decision),
                ("Utility", run.utility),
            ]
        else:
            adaptive_value = adaptive_greedy_value(ctx, k)
            batch = greedy_select(ctx, k, lazy=False)
            data = {"adaptive-greedy": adaptive_value, "greedy": batch.value}
            rows = [("Adaptive greedy value", adaptive_value), ("Non-adaptive greedy", batch.value)]
            if ctx.n <= settings.policy_signal_cap and k <= settings.policy_k_cap:
                optimum = brute_force_policy(
                    ctx, k, settings.policy_signal_cap, settings.policy_k_cap
                )
                data["optimal-policy"] = optimum
                rows.append(("Optimal adaptive policy", optimum))
    _quantity_table("Adaptive selection", rows)
    _finish(data)


@app.command()
def reduce(
    setfn: Annotated[str, typer.Option(help="Set function, e.g. modular:1,2,3")],
    verify: Annotated[bool, typer.Option(help="Check V(S) = f(S) for every subset")] = False,
    greedy: Annotated[
        int | None, typer.Option(help="Run plain greedy for k picks on the instance")
    ] = None,
    json_output: JsonOpt = False,
) -> None:
    """Build the signal-selection instance of a monotone set function."""
    state.json = json_output
    with _errors():
        f = parse_set_function(setfn)
        instance = reduce_from_set_function(f)
        data: dict[str, Any] = {"n": instance.n, "outcomes": instance.structure.n_outcomes}
        rows: list[tuple[str, Any]] = [
            ("Signals", instance.n),
            ("Event outcomes", instance.structure.n_outcomes),
        ]
        ok = True
        if verify:
            mismatches = instance.verify()
            ok = not mismatches
            data["mismatches"] = [
                {"subset": [i + 1 for i in s], "value": v, "f": target}
                for s, v, target in mismatches
            ]
        if greedy is not None:
            selection = greedy_select(f, greedy, lazy=False)
            data["greedy"] = selection.to_dict()
            rows += [("Greedy pick", _subset_label(selection.subset)), ("f", selection.value)]

    _quantity_table("Reduction", rows)
    if verify and not state.json:
        subsets = 2**instance.n
        _verdict(ok, f"V(S)=f(S) for all {subsets} subsets" if ok else "V(S) != f(S)")
    _finish(data, ok)


def _game(
    game_path: Path | None,
    fixture: str | None,
    structure: Path | None,
    rule: str | None,
    decision: Path | None,
    traders: str | None,
    order: str | None,
) -> MarketGame:
    if game_path is not None:
        return load_document(game_path, GameFile).build()
    ctx = _load_context(fixture, structure, rule, decision)
    if traders is None:
        holdings = tuple((i,) for i in range(ctx.n))
    else:
        holdings = tuple(_parse_indices(part, ctx.n) for part in traders.split(";"))
    if order is None:
        moves = tuple(range(len(holdings)))
    else:
        moves = _parse_indices(order, len(holdings), "trader")
    return MarketGame(ctx, holdings, moves)


def _profile(game: MarketGame, name: str | None, path: Path | None) -> StrategyProfile:
    if path is not None:
        return load_document(path, ProfileFile).build(game)
    name = name or "all-rush"
    if name not in PROFILES:
        raise ValueError(f"unknown profile '{name}'. Available: {sorted(PROFILES)}")
    return PROFILES[name](game)


@app.command()
def market(
    fixture: FixtureOpt = None,
    structure: StructureOpt = None,
    rule: RuleOpt = None,
    decision: DecisionOpt = None,
    game_path: Annotated[
        Path | None, typer.Option("--game", "-g", help="Game file (JSON or YAML)")
    ] = None,
    traders: Annotated[
        str | None, typer.Option(help="Signals per trader, '1;2' (default: one each)")
    ] = None,
    order: Annotated[str | None, typer.Option(help="Trading order, '1,2,1'")] = None,
    profile_name: Annotated[
        str | None, typer.Option("--profile", help="all-rush, all-delay, truthful or silent")
    ] = None,
    profile_path: Annotated[
        Path | None, typer.Option("--profile-file", help="Profile file (JSON or YAML)")
    ] = None,
    verify: Annotated[bool, typer.Option(help="Check deviations within the class")] = False,
    realization: Annotated[
        str | None, typer.Option(help="Replay one realization: 'event:signal1,...' labels")
    ] = None,
    refute: Annotated[
        Refutation | None, typer.Option(help="Run the Alice-Bob-Alice refutation")
    ] = None,
    json_output: JsonOpt = False,
) -> None:
    """Run a market-scoring-rule game."""
    state.json = json_output
    settings = state.settings
    seed = settings.seed if settings.seed is not None else 0
    ok = True
    with _errors():
        if refute is not None:
            ctx = _load_context(fixture, structure, rule, decision)
            search = rush_refutation if refute is Refutation.RUSH else delay_refutation
            refutation = search(
                ctx,
                settings.tolerance,
                moderate_cap=settings.moderate_coarsening_cap,
                budget=settings.budget,
                seed=seed,
            )
            _quantity_table(
                f"{refute.value} refutation",
                [
                    ("Distinguishable", refutation.distinguishable.holds),
                    ("Market gain", refutation.gain),
                    ("Value-function gain", refutation.predicted_gain),
                ],
            )
            if not state.json:
                console.print(f"[bold]{refutation.summary}[/bold]")
            _finish(refutation.to_dict(), not refutation.skipped)
            return

        game = _game(game_path, fixture, structure, rule, decision, traders, order)
        profile = _profile(game, profile_name, profile_path)
        data: dict[str, Any] = {
            "game": game.to_dict(),
            "profile": list(profile.labels),
            "all-rush": is_all_rush(game, profile),
            "all-delay": is_all_delay(game, profile),
        }
        if realization is not None:
            run = run_market(game, profile, _realization(game.ctx.structure, realization))
            data["run"] = run.to_dict()
            if not state.json:
                table = Table(title="Price path")
                table.add_column("Slot", style="cyan")
                table.add_column("Trader", style="cyan")
                table.add_column("Price", style="green")
                table.add_row("0", "-", str([round(p, 9) for p in run.prices[0]]))
                for t, trader in enumerate(game.order):
                    price = [round(p, 9) for p in run.prices[t + 1]]
                    table.add_row(str(t + 1), str(trader + 1), str(price))
                console.print(table)
        payoffs = expected_payoffs(game, profile)
        data["expected-payoffs"] = list(payoffs)
        if verify:
            report = verify_equilibrium(
                game,
                profile,
                tol=settings.tolerance,
                garbled=settings.garbled_deviations,
                seed=seed,
                coarsening_cap=settings.coarsening_cap,
                threads=settings.threads,
            )
            ok = report.verified
            data["equilibrium"] = report.to_dict()

    if not state.json:
        table = Table(title="Expected payoffs")
        table.add_column("Trader", style="cyan")
        table.add_column("Signals", style="cyan")
        table.add_column("Payoff", style="green")
        if verify:
            table.add_column("Margin", style="green")
            table.add_column("Best deviation", style="yellow")
        for i, payoff in enumerate(payoffs):
            row = [str(i + 1), _subset_label(game.traders[i]), f"{payoff:.12g}"]
            if verify:
                margin = report.margins[i]
                best = ", ".join(r.label for r in margin.deviation) if margin.deviation else "-"
                row += [f"{margin.margin:.6g}", best]
            table.add_row(*row)
        console.print(table)
        console.print(f"all-rush: {data['all-rush']}  all-delay: {data['all-delay']}")
        if verify:
            _verdict(report.verified, report.summary)
            if not report.distinguishable.holds:
                console.print("[yellow]⚠️ structure is not distinguishable[/yellow]")
    _finish(data, ok)


@app.command()
def fixtures(json_output: JsonOpt = False) -> None:
    """List registered structures, rules and set functions."""
    data = {
        "fixtures": {name: entry.description for name, entry in FIXTURES.items()},
        "rules": {name: description for name, (_, description) in RULES.items()},
        "set-functions": dict(SET_FUNCTIONS),
    }
    if json_output:
        console.print_json(data=data)
        return
    for title, entries in (
        ("Fixtures", data["fixtures"]),
        ("Rules", data["rules"]),
        ("Set functions", data["set-functions"]),
    ):
        table = Table(title=title)
        table.add_column("Name", style="cyan")
        table.add_column("Parameters", style="green")
        for name, description in entries.items():
            table.add_row(name, description)
        console.print(table)


@app.command()
def schema() -> None:
    """Output the JSON schema of the game file."""
    console.print_json(data=generate_json_schema())


@app.command(name="version")
def show_version() -> None:
    """Print the installed version."""
    console.print(_package_version())


if __name__ == "__main__":
    app()
