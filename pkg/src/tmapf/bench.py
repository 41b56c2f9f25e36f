"""Batch experiments: run solvers over scenario sets and aggregate results.

Reports are split so that the deterministic part is reproducible byte for
byte: ``records.csv`` and ``summary.json`` hold no wall-clock data, while
``timings.csv`` carries the measured run times.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .cbs import SOLVED, TIMEOUT, SolveResult, SolverConfig, cbs_solve, tfcbs_solve
from .core import INF, Problem, bfs_path_length
from .oracle import certify
from .pbs import pbs_solve, tfpbs_solve
from .scenario import ConfigError, GridMap, Scenario

ALGORITHMS: dict[str, Callable[[Problem, SolverConfig], SolveResult]] = {
    "cbs": cbs_solve,
    "pbs": pbs_solve,
    "tfcbs": tfcbs_solve,
    "tfpbs": tfpbs_solve,
}
STATIC_ALGORITHMS = ("cbs", "pbs")
COSTS = ("cost1", "cost2")

RECORD_COLUMNS = ("scenario_id", "map", "n_tasks", "seed", "algorithm", "cost_function", "outcome",
                  "cost", "baseline", "suboptimality", "hl_expanded", "ll_expanded", "valid")


@dataclass
class RunRecord:
    scenario_id: str
    map: str
    n_tasks: int
    seed: int | None
    algorithm: str
    cost_function: str
    outcome: str
    cost: int | None
    baseline: float
    suboptimality: float | None
    hl_expanded: int
    ll_expanded: int
    valid: bool | None = None
    wall_ms: float = 0.0


@dataclass
class BenchCell:
    scenario_id: str
    map_name: str
    grid: GridMap
    scenario: Scenario


@dataclass
class BenchConfig:
    cells: list[BenchCell]
    algorithms: Sequence[str] = ("cbs", "tfpbs")
    cost: str = "cost1"
    timeout: float = 300.0
    validate: bool = False

    def check(self) -> None:
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {sorted(ALGORITHMS)}")
        if self.cost not in COSTS:
            raise ConfigError(f"unknown cost function {self.cost!r}")
        if not self.timeout or self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm")


@dataclass
class BenchReport:
    records: list[RunRecord] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        return summarize(self.records)

    @property
    def any_invalid(self) -> bool:
        return any(r.valid is False for r in self.records)

    @property
    def all_timed_out(self) -> bool:
        return bool(self.records) and all(r.outcome == TIMEOUT for r in self.records)


def baseline_cost(problem: Problem) -> float:
    """Sum of single-agent shortest paths avoiding every obstacle."""
    blocked = set(problem.movable_obstacles)
    total = 0
    for s, g in zip(problem.task_starts, problem.task_goals):
        d = bfs_path_length(problem.graph, s, g, blocked)
        if d == INF:
            return INF
        total += d
    return total


def run_cell(problem: Problem, algorithm: str, cost: str, timeout: float,
             validate: bool = False) -> tuple[SolveResult, bool | None]:
    """Solve one instance; static algorithms see movables frozen and no movers."""
    solver = ALGORITHMS[algorithm]
    if algorithm in STATIC_ALGORITHMS:
        res = solver(problem.static_version(), SolverConfig("soc", timeout))
    else:
        res = solver(problem, SolverConfig(cost, timeout))
    valid = None
    if validate and res.solved:
        mode = "mapf" if algorithm in STATIC_ALGORITHMS else "tmapf"
        valid = certify(res.problem, res.solution, mode).ok
    return res, valid


def run(config: BenchConfig, progress: Callable[[RunRecord], None] | None = None) -> BenchReport:
    config.check()
    report = BenchReport()
    for cell in config.cells:
        problem = cell.scenario.to_problem(cell.grid)
        base = baseline_cost(problem)
        for algo in config.algorithms:
            res, valid = run_cell(problem, algo, config.cost, config.timeout, config.validate)
            sub = None
            if res.solved and base not in (0, INF):
                sub = round(res.cost / base, 6)
            rec = RunRecord(cell.scenario_id, cell.map_name, problem.n_tasks, cell.scenario.seed, algo,
                            "soc" if algo in STATIC_ALGORITHMS else config.cost, res.status,
                            res.cost, base, sub, res.stats.hl_expanded, res.stats.ll_expanded, valid,
                            round(res.stats.wall_time * 1000, 3))
            report.records.append(rec)
            if progress:
                progress(rec)
    report.records.sort(key=lambda r: (r.scenario_id, r.algorithm))
    return report


def _mean(xs: Sequence[float]) -> float | None:
    return round(statistics.fmean(xs), 6) if xs else None


def _median(xs: Sequence[float]) -> float | None:
    return round(statistics.median(xs), 6) if xs else None


def summarize(records: Sequence[RunRecord]) -> dict:
    """Per (map, n_tasks) and algorithm aggregates.

    Mean suboptimality and ``mean_hl_expanded_common`` only use scenarios
    solved by every algorithm in the group.
    """
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.map, r.n_tasks), []).append(r)
    out = []
    for (map_name, n), recs in sorted(groups.items()):
        algos = sorted({r.algorithm for r in recs})
        by_scen: dict[str, dict[str, RunRecord]] = {}
        for r in recs:
            by_scen.setdefault(r.scenario_id, {})[r.algorithm] = r
        common = sorted(s for s, d in by_scen.items()
                        if all(a in d and d[a].outcome == SOLVED for a in algos))
        entry = {"map": map_name, "n_tasks": n, "scenarios": len(by_scen),
                 "commonly_solved": len(common), "algorithms": {}}
        for a in algos:
            mine = [d[a] for d in by_scen.values() if a in d]
            solved = [r for r in mine if r.outcome == SOLVED]
            com = [by_scen[s][a] for s in common]
            subs = [r.suboptimality for r in com if r.suboptimality is not None]
            entry["algorithms"][a] = {
                "runs": len(mine),
                "solved": len(solved),
                "success_rate": round(len(solved) / len(mine), 6) if mine else None,
                "mean_hl_expanded_all": _mean([r.hl_expanded for r in mine]),
                "mean_hl_expanded_common": _mean([r.hl_expanded for r in com]),
                "mean_cost_common": _mean([r.cost for r in com]),
                "mean_suboptimality": _mean(subs),
                "median_suboptimality": _median(subs),
            }
        out.append(entry)
    return {"groups": out}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(round(v, 6))
    return str(v)


def records_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in RECORD_COLUMNS])
    return buf.getvalue()


def timings_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario_id", "algorithm", "wall_ms"))
    for r in records:
        w.writerow((r.scenario_id, r.algorithm, _fmt(r.wall_ms)))
    return buf.getvalue()


def summary_json(records: Sequence[RunRecord]) -> str:
    return json.dumps(summarize(records), sort_keys=True, indent=2) + "\n"


def write_report(report: BenchReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(records_csv(report.records), encoding="utf-8")
    (out / "timings.csv").write_text(timings_csv(report.records), encoding="utf-8")
    (out / "summary.json").write_text(summary_json(report.records), encoding="utf-8")


def read_records(path: str | Path) -> list[RunRecord]:
    """Load ``records.csv`` back (wall times are not stored there)."""
    def num(s, kind):
        if s == "":
            return None
        if s == "inf":
            return INF
        return kind(s)

    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RunRecord(
                row["scenario_id"], row["map"], int(row["n_tasks"]), num(row["seed"], int),
                row["algorithm"], row["cost_function"], row["outcome"], num(row["cost"], int),
                num(row["baseline"], int), num(row["suboptimality"], float),
                int(row["hl_expanded"]), int(row["ll_expanded"]),
                None if row["valid"] == "" else row["valid"] == "True"))
    return out
