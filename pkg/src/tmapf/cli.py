"""``tmapf`` command line.

Exit codes: 0 success, 1 no solution found, 2 configuration or input
error, 3 validation failure, 4 every run timed out.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import ALGORITHMS, STATIC_ALGORITHMS, BenchCell, BenchConfig, run, run_cell, write_report
from .cbs import SOLVED, TIMEOUT, assign_movers
from .core import MalformedInputError
from .oracle import brute_force_optimal, certify
from .scenario import (MOVER_POLICIES, PROFILES, ConfigError, GridMap, emit_map, emit_scenario,
                       generate_scenario, generate_warehouse, load_map, load_scenario,
                       solution_from_json, solution_to_json)

EXIT_OK, EXIT_UNSOLVED, EXIT_CONFIG, EXIT_INVALID, EXIT_TIMEOUT = 0, 1, 2, 3, 4


def _fail(msg: str, code: int = EXIT_CONFIG):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _map_arg(spec: str) -> tuple[GridMap, str]:
    """A map file path or a built-in warehouse profile name."""
    if spec in PROFILES:
        return generate_warehouse(spec), spec
    return load_map(spec), Path(spec).stem


@click.group()
def main():
    """Multi-agent path finding with movable obstacles."""


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scen", "scen_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--algo", type=click.Choice(sorted(ALGORITHMS)), default="tfcbs", show_default=True)
@click.option("--cost", type=click.Choice(["cost1", "cost2"]), default="cost1", show_default=True)
@click.option("--timeout-secs", type=float, default=300.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="solution file (default: stdout)")
@click.option("--validate", is_flag=True, help="certify the solution before writing it")
def solve(map_path, scen_path, algo, cost, timeout_secs, out, validate):
    """Solve one scenario and write the solution as JSON."""
    try:
        grid = load_map(map_path)
        sc = load_scenario(scen_path, grid)
        problem = sc.to_problem(grid)
    except (MalformedInputError, ConfigError) as exc:
        _fail(str(exc))
    res, valid = run_cell(problem, algo, cost, timeout_secs, validate)
    if res.status == TIMEOUT:
        _fail("timed out", EXIT_TIMEOUT)
    if res.status != SOLVED:
        _fail(res.status, EXIT_UNSOLVED)
    meta = {"algorithm": algo, "cost_function": res.cost_function, "cost": res.cost,
            "seed": sc.seed, "stats": res.stats.as_dict(),
            "mode": "mapf" if algo in STATIC_ALGORITHMS else "tmapf"}
    _write(solution_to_json(res.problem, res.solution, meta), out)
    if valid is False:
        _fail("solution failed certification", EXIT_INVALID)


@main.command()
@click.option("--map", "map_spec", required=True,
              help=f"map file or warehouse profile ({', '.join(PROFILES)})")
@click.option("--scen", "scen_paths", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="scenario files; when absent scenarios are generated")
@click.option("--n-tasks", "n_tasks", multiple=True, type=int, help="task agent counts to generate")
@click.option("--scenarios", "n_scen", type=int, default=10, show_default=True,
              help="generated scenarios per task count")
@click.option("--seed", type=int, default=0, show_default=True, help="first generation seed")
@click.option("--mover-start-policy", type=click.Choice(MOVER_POLICIES), default="under-shelf",
              show_default=True)
@click.option("--algo", "algos", multiple=True, default=("cbs", "tfpbs"), show_default=True)
@click.option("--cost", default="cost1", show_default=True)
@click.option("--timeout-secs", type=float, default=300.0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False), help="report directory")
@click.option("--validate", is_flag=True, help="certify every solved cell")
def bench(map_spec, scen_paths, n_tasks, n_scen, seed, mover_start_policy, algos, cost, timeout_secs,
          out, validate):
    """Run solvers over a scenario batch and write CSV/JSON reports."""
    try:
        grid, map_name = _map_arg(map_spec)
        cells = []
        for path in scen_paths:
            sc = load_scenario(path, grid)
            cells.append(BenchCell(Path(path).stem, map_name, grid, sc))
        for n in n_tasks:
            for i in range(n_scen):
                s = seed + i
                sc = generate_scenario(grid, n, s, mover_start_policy=mover_start_policy,
                                       map_name=map_name)
                cells.append(BenchCell(f"{map_name}-n{n:03d}-s{s:04d}", map_name, grid, sc))
        if not cells:
            raise ConfigError("no scenarios: pass --scen files or --n-tasks counts")
        config = BenchConfig(cells, tuple(algos), cost, timeout_secs, validate)
        config.check()
    except (MalformedInputError, ConfigError) as exc:
        _fail(str(exc))

    def progress(rec):
        click.echo(f"{rec.scenario_id} {rec.algorithm}: {rec.outcome}"
                   + ("" if rec.cost is None else f" cost={rec.cost}"), err=True)

    report = run(config, progress)
    write_report(report, out)
    if report.any_invalid:
        _fail("validation failure", EXIT_INVALID)
    if report.all_timed_out:
        _fail("every cell timed out", EXIT_TIMEOUT)


@main.command("gen-map")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="small", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jitter", type=int, default=0, show_default=True,
              help="max seeded shift of each movable along its shelf block")
@click.option("--out", type=click.Path(dir_okay=False))
def gen_map(profile, seed, jitter, out):
    """Generate a warehouse map."""
    try:
        grid = generate_warehouse(profile, seed, jitter)
    except ConfigError as exc:
        _fail(str(exc))
    _write(emit_map(grid), out)


@main.command("gen-scen")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n-tasks", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mover-start-policy", type=click.Choice(MOVER_POLICIES), default="under-shelf",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def gen_scen(map_path, n_tasks, seed, mover_start_policy, out):
    """Generate a seeded scenario for a map."""
    try:
        grid = load_map(map_path)
        sc = generate_scenario(grid, n_tasks, seed, mover_start_policy=mover_start_policy,
                               map_name=Path(map_path).name)
    except (MalformedInputError, ConfigError) as exc:
        _fail(str(exc))
    _write(emit_scenario(sc, grid.width), out)


@main.command("certify")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scen", "scen_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--solution", "sol_path", required=True, type=click.Path(exists=True, dir_okay=False))
def certify_cmd(map_path, scen_path, sol_path):
    """Check a solution file; prints a JSON report, exits 3 on violations."""
    try:
        grid = load_map(map_path)
        sc = load_scenario(scen_path, grid)
        problem = sc.to_problem(grid)
        solution, doc = solution_from_json(Path(sol_path).read_text(encoding="utf-8"))
        mode = doc.get("metadata", {}).get("mode", "tmapf")
        if mode == "mapf":
            problem = problem.static_version()
        elif doc.get("assignment") is not None:
            problem = problem.with_assignment(doc["assignment"])
        cert = certify(problem, solution, mode)
    except (MalformedInputError, ConfigError) as exc:
        _fail(str(exc))
    click.echo(json.dumps(cert.as_dict(), sort_keys=True, indent=2))
    if not cert.ok:
        sys.exit(EXIT_INVALID)


@main.command("oracle")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scen", "scen_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["mapf", "tmapf"]), default="tmapf", show_default=True)
@click.option("--cost", type=click.Choice(["soc", "cost1", "cost2"]), default="cost1",
              show_default=True)
@click.option("--state-cap", type=int, default=1_000_000, show_default=True)
def oracle_cmd(map_path, scen_path, mode, cost, state_cap):
    """Exact optimum of a tiny instance by joint-state search."""
    try:
        grid = load_map(map_path)
        problem = load_scenario(scen_path, grid).to_problem(grid)
        if mode == "mapf":
            problem, cost = problem.static_version(), "soc"
        elif problem.assignment is None and problem.n_movers:
            problem = problem.with_assignment(assign_movers(problem))
        res = brute_force_optimal(problem, mode, cost, state_cap)
    except (MalformedInputError, ConfigError) as exc:
        _fail(str(exc))
    click.echo(json.dumps({"status": res.status, "cost": res.cost,
                           "states_expanded": res.states_expanded}, sort_keys=True))
    if res.status != "optimal":
        sys.exit(EXIT_UNSOLVED)


if __name__ == "__main__":
    main()
