"""Conflict-based search for MAPF and its terraforming extension.

Both solvers share one constraint-tree engine.  In the terraforming variant
every mover and its assigned obstacle form a single entity; each CT node also
carries the per-mover pickup lower bounds (ETAs) that define its timed
constraints.
"""

from __future__ import annotations

import heapq
import time as _time
from dataclasses import dataclass, field
from typing import Sequence

from .conflicts import Conflict, detect_conflicts, split
from .constraints import (Constraint, InfeasibleConstraintsError, build_table, default_horizon,
                          timed_constraints)
from .core import MalformedInputError, Problem, Solution, paths_to_solution
from .lowlevel import (Deadline, SearchStats, SearchTimeout, entity_cost, eta_lower_bound,
                       mover_lowlevel, path_consistent, spacetime_astar)

SOLVED = "solved"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


@dataclass
class SolverConfig:
    cost: str = "cost1"
    timeout: float | None = 300.0
    horizon: int | None = None


@dataclass
class SolveStats:
    hl_expanded: int = 0
    hl_generated: int = 0
    ll_expanded: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {"hl_expanded": self.hl_expanded, "hl_generated": self.hl_generated,
                "ll_expanded": self.ll_expanded}


@dataclass
class SolveResult:
    status: str
    algorithm: str
    cost_function: str
    problem: Problem
    paths: list[list[int]] | None = None
    solution: Solution | None = None
    cost: int | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def assignment(self) -> tuple[int, ...] | None:
        return self.problem.assignment


def assign_movers(problem: Problem) -> tuple[int, ...]:
    """Greedy nearest-obstacle assignment, movers in index order.

    Distances ignore every obstacle; ties go to the lower obstacle index.
    """
    if problem.n_movers != len(problem.movable_obstacles):
        raise MalformedInputError("need exactly one movable obstacle per mover")
    g = problem.graph
    taken: set[int] = set()
    out = []
    for s in problem.mover_starts:
        d = g.distances(s, through_static=True)
        ranked = sorted(range(len(problem.movable_obstacles)),
                        key=lambda k: (d[problem.movable_obstacles[k]], k))
        k = next(k for k in ranked if k not in taken)
        taken.add(k)
        out.append(k)
    return tuple(out)


class EntityPlanner:
    """Plans one entity against a constraint table, counting low-level work."""

    def __init__(self, problem: Problem, cost: str, horizon: int | None, deadline: Deadline,
                 stats: SolveStats):
        self.problem = problem
        self.cost = cost
        self.horizon = default_horizon(problem) if horizon is None else horizon
        self.deadline = deadline
        self.stats = stats
        self._ll = SearchStats()

    def plan(self, entity: int, table) -> list[int] | None:
        p = self.problem
        before = self._ll.expanded
        try:
            if p.is_mover(entity):
                res = mover_lowlevel(p, p.mover_of(entity), table, self.cost,
                                     stats=self._ll, deadline=self.deadline)
                return None if res is None else res.path
            return spacetime_astar(p.graph, p.task_starts[entity], p.task_goals[entity], table,
                                   stats=self._ll, deadline=self.deadline)
        finally:
            self.stats.ll_expanded += self._ll.expanded - before

    def entity_cost(self, entity: int, path: Sequence[int]) -> int:
        return entity_cost(self.problem, entity, path, self.cost)


@dataclass
class CTNode:
    constraints: tuple[Constraint, ...]
    etas: tuple[float, ...]
    paths: list[list[int]]
    costs: list[int]
    conflicts: list[Conflict]
    depth: int = 0

    @property
    def cost(self) -> int:
        return sum(self.costs)


def _result(problem, algorithm, cost, status, stats, paths=None) -> SolveResult:
    res = SolveResult(status, algorithm, cost, problem, stats=stats)
    if paths is not None:
        res.paths = [list(p) for p in paths]
        res.solution = paths_to_solution(problem, paths)
        res.cost = sum(entity_cost(problem, e, p, cost) for e, p in enumerate(paths))
    return res


class _CTSearch:
    def __init__(self, problem: Problem, config: SolverConfig, algorithm: str):
        self.problem = problem
        self.config = config
        self.algorithm = algorithm
        self.stats = SolveStats()
        self.deadline = Deadline(config.timeout)
        self.planner = EntityPlanner(problem, config.cost, config.horizon, self.deadline, self.stats)
        self.horizon = self.planner.horizon
        self.nt = problem.n_tasks

    def table(self, constraints, entity: int, etas):
        return build_table(self.problem, constraints, entity,
                           timed_constraints(self.problem, etas), self.horizon)

    def eta(self, constraints, j: int) -> float:
        table = build_table(self.problem, constraints, self.nt + j, (), self.horizon)
        return eta_lower_bound(self.problem, j, table)

    def root(self) -> CTNode | None:
        p = self.problem
        etas = tuple(self.eta((), j) for j in range(p.n_movers))
        paths, costs = [], []
        for e in range(p.n_entities):
            path = self.planner.plan(e, self.table((), e, etas))
            if path is None:
                return None
            paths.append(path)
            costs.append(self.planner.entity_cost(e, path))
        return CTNode((), etas, paths, costs, detect_conflicts(p, paths))

    def child(self, node: CTNode, c: Constraint) -> CTNode | None:
        p = self.problem
        constraints = node.constraints + (c,)
        touched = set(range(p.n_entities)) if c.positive else {c.entity}
        etas = list(node.etas)
        for e in sorted(touched):
            if p.is_mover(e):
                j = p.mover_of(e)
                etas[j] = self.eta(constraints, j)
        etas = tuple(etas)
        if etas != node.etas:
            touched = set(range(p.n_entities))
        paths = list(node.paths)
        costs = list(node.costs)
        # movers first: their failures prune the child cheaply
        order = sorted(touched, key=lambda e: (not p.is_mover(e), e))
        for e in order:
            try:
                table = self.table(constraints, e, etas)
            except InfeasibleConstraintsError:
                return None
            if path_consistent(p, e, paths[e], table):
                continue
            path = self.planner.plan(e, table)
            if path is None:
                return None
            paths[e] = path
            costs[e] = self.planner.entity_cost(e, path)
        return CTNode(constraints, etas, paths, costs, detect_conflicts(p, paths), node.depth + 1)

    def run(self) -> SolveResult:
        start = _time.perf_counter()
        try:
            status, paths = self._search()
        except SearchTimeout:
            status, paths = TIMEOUT, None
        self.stats.wall_time = _time.perf_counter() - start
        return _result(self.problem, self.algorithm, self.config.cost, status, self.stats, paths)

    def _search(self):
        root = self.root()
        if root is None:
            return INFEASIBLE, None
        self.stats.hl_generated += 1
        seq = 0
        heap = [(root.cost, len(root.conflicts), seq, root)]
        while heap:
            self.deadline.check()
            _, _, _, node = heapq.heappop(heap)
            self.stats.hl_expanded += 1
            if not node.conflicts:
                return SOLVED, node.paths
            for c in split(self.problem, node.conflicts[0]):
                kid = self.child(node, c)
                if kid is None:
                    continue
                seq += 1
                self.stats.hl_generated += 1
                heapq.heappush(heap, (kid.cost, len(kid.conflicts), seq, kid))
        return INFEASIBLE, None


def cbs_solve(problem: Problem, config: SolverConfig | None = None) -> SolveResult:
    """Optimal sum-of-costs MAPF.  Movable obstacles must already be static."""
    config = config or SolverConfig(cost="soc")
    if problem.n_movers or problem.movable_obstacles:
        raise MalformedInputError("cbs_solve needs a plain MAPF problem; use static_version()")
    problem.check()
    config = SolverConfig("soc", config.timeout, config.horizon)
    return _CTSearch(problem, config, "cbs").run()


def tfcbs_solve(problem: Problem, config: SolverConfig | None = None) -> SolveResult:
    """Optimal terraforming MAPF under a fixed mover assignment."""
    config = config or SolverConfig()
    if config.cost not in ("cost1", "cost2"):
        raise MalformedInputError(f"tfcbs_solve cost must be cost1 or cost2, got {config.cost!r}")
    problem.check()
    if problem.assignment is None:
        problem = problem.with_assignment(assign_movers(problem))
        problem.check()
    return _CTSearch(problem, config, "tfcbs").run()
