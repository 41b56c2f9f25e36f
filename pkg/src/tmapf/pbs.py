"""Priority-based search for MAPF and its terraforming extension.

``transitive=True`` is classic PBS: an entity avoids every entity ranked
above it in the transitive closure and replans follow a topological order.
``transitive=False`` (the terraforming default) only honours explicit
pairs, so an entity avoids just its direct predecessors.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cbs import (INFEASIBLE, SOLVED, TIMEOUT, EntityPlanner, SolveResult, SolverConfig, SolveStats,
                  _result, assign_movers)
from .conflicts import Conflict, detect_conflicts
from .constraints import avoidance_table, timed_constraints
from .core import MalformedInputError, Problem
from .lowlevel import Deadline, SearchTimeout, eta_lower_bound

NO_SOLUTION = "no-solution"


class PriorityCycleError(ValueError):
    """The priority pairs contain a cycle."""


def topological_order(priorities: Iterable[tuple[int, int]], entities: Sequence[int]) -> list[int]:
    """Order consistent with every ``(higher, lower)`` pair.

    Entities that appear in no pair go last in their original order; among
    the rest, ties follow the original order too.
    """
    pairs = set(priorities)
    mentioned = {x for p in pairs for x in p}
    index = {e: i for i, e in enumerate(entities)}
    indeg = {e: 0 for e in entities if e in mentioned}
    succ: dict[int, list[int]] = {e: [] for e in indeg}
    for hi, lo in pairs:
        succ[hi].append(lo)
        indeg[lo] += 1
    ready = sorted((e for e, d in indeg.items() if d == 0), key=index.__getitem__)
    out = []
    while ready:
        e = ready.pop(0)
        out.append(e)
        for lo in succ[e]:
            indeg[lo] -= 1
            if indeg[lo] == 0:
                ready.append(lo)
                ready.sort(key=index.__getitem__)
    if len(out) != len(indeg):
        raise PriorityCycleError("priority pairs contain a cycle")
    out.extend(e for e in entities if e not in mentioned)
    return out


def _ancestors(priorities: frozenset[tuple[int, int]], e: int) -> set[int]:
    preds: dict[int, list[int]] = {}
    for hi, lo in priorities:
        preds.setdefault(lo, []).append(hi)
    seen: set[int] = set()
    stack = list(preds.get(e, ()))
    while stack:
        x = stack.pop()
        if x not in seen:
            seen.add(x)
            stack.extend(preds.get(x, ()))
    return seen


@dataclass
class PTNode:
    priorities: frozenset[tuple[int, int]]
    paths: list[list[int]]
    costs: list[int]
    etas: list[float]
    conflicts: list[Conflict]
    depth: int = 0

    @property
    def cost(self) -> int:
        return sum(self.costs)


class _PTSearch:
    def __init__(self, problem: Problem, config: SolverConfig, algorithm: str, transitive: bool,
                 repair_cap: int | None):
        self.problem = problem
        self.config = config
        self.algorithm = algorithm
        self.transitive = transitive
        self.stats = SolveStats()
        self.deadline = Deadline(config.timeout)
        self.planner = EntityPlanner(problem, config.cost, config.horizon, self.deadline, self.stats)
        n = problem.n_entities
        self.repair_cap = 4 * n if repair_cap is None else repair_cap
        self.entities = list(range(n))

    def higher(self, priorities: frozenset, e: int) -> set[int]:
        if self.transitive:
            return _ancestors(priorities, e)
        return {hi for hi, lo in priorities if lo == e}

    def replan(self, node: PTNode, e: int) -> bool:
        p = self.problem
        above = {x: node.paths[x] for x in self.higher(node.priorities, e)}
        table = avoidance_table(p, e, above, timed_constraints(p, node.etas), self.planner.horizon)
        if p.is_mover(e):
            j = p.mover_of(e)
            mover_table = avoidance_table(p, e, above, (), self.planner.horizon)
            node.etas[j] = eta_lower_bound(p, j, mover_table)
        path = self.planner.plan(e, table)
        if path is None:
            return False
        node.paths[e] = path
        node.costs[e] = self.planner.entity_cost(e, path)
        return True

    def _collides(self, node: PTNode, e: int, others: set[int]) -> bool:
        for c in detect_conflicts(self.problem, node.paths):
            if (c.a == e and c.b in others) or (c.b == e and c.a in others):
                return True
        return False

    def root(self) -> PTNode | None:
        p = self.problem
        node = PTNode(frozenset(), [[] for _ in self.entities], [0] * p.n_entities,
                      [0.0] * p.n_movers, [])
        for j in range(p.n_movers):
            node.etas[j] = eta_lower_bound(
                p, j, avoidance_table(p, p.n_tasks + j, {}, (), self.planner.horizon))
        for e in self.entities:
            if not self.replan(node, e):
                return None
        node.conflicts = detect_conflicts(p, node.paths)
        return node

    def child(self, node: PTNode, hi: int, lo: int) -> PTNode | None:
        pri = node.priorities | {(hi, lo)}
        kid = PTNode(pri, list(node.paths), list(node.costs), list(node.etas), [], node.depth + 1)
        if self.transitive:
            try:
                order = topological_order(pri, self.entities)
            except PriorityCycleError:
                return None
            if not self.replan(kid, lo):
                return None
            pos = order.index(lo)
            for e in order[pos + 1:]:
                above = _ancestors(pri, e)
                if lo in above and self._collides(kid, e, above) and not self.replan(kid, e):
                    return None
        else:
            if not self.replan(kid, lo):
                return None
            repairs = 0
            while True:
                self.deadline.check()
                bad = self._ordered_conflict(kid)
                if bad is None:
                    break
                repairs += 1
                if repairs > self.repair_cap or not self.replan(kid, bad):
                    return None
        kid.conflicts = detect_conflicts(self.problem, kid.paths)
        return kid

    def _ordered_conflict(self, node: PTNode) -> int | None:
        """Lower entity of the earliest conflict between an explicitly ordered pair."""
        pri = node.priorities
        for c in detect_conflicts(self.problem, node.paths):
            if (c.a, c.b) in pri:
                return c.b
            if (c.b, c.a) in pri:
                return c.a
        return None

    def _children(self, node: PTNode) -> list[PTNode]:
        c = next((c for c in node.conflicts
                  if (c.a, c.b) not in node.priorities and (c.b, c.a) not in node.priorities), None)
        if c is None:
            return []
        a, b = c.a, c.b
        kids = []
        for hi, lo in ((a, b), (b, a)):
            if (lo, hi) in node.priorities:
                continue
            if self.transitive and lo in _ancestors(node.priorities, hi):
                continue
            kid = self.child(node, hi, lo)
            if kid is not None:
                self.stats.hl_generated += 1
                # tie: prefer ranking the entity that already cost more below the other
                kids.append(((kid.cost, -node.costs[lo], hi, lo), kid))
        kids.sort(key=lambda item: item[0])
        return [k for _, k in kids]

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
            return NO_SOLUTION, None
        self.stats.hl_generated += 1
        stack = [root]
        while stack:
            self.deadline.check()
            node = stack.pop()
            self.stats.hl_expanded += 1
            if not node.conflicts:
                return SOLVED, node.paths
            kids = self._children(node)
            stack.extend(reversed(kids))
        return NO_SOLUTION, None


def pbs_solve(problem: Problem, config: SolverConfig | None = None) -> SolveResult:
    """Priority-based search on a plain MAPF problem (not optimal, not complete)."""
    config = config or SolverConfig(cost="soc")
    if problem.n_movers or problem.movable_obstacles:
        raise MalformedInputError("pbs_solve needs a plain MAPF problem; use static_version()")
    problem.check()
    config = SolverConfig("soc", config.timeout, config.horizon)
    return _PTSearch(problem, config, "pbs", True, None).run()


def tfpbs_solve(problem: Problem, config: SolverConfig | None = None, *, transitive: bool = False,
                repair_cap: int | None = None) -> SolveResult:
    """Priority-based search with movers; direct priorities unless ``transitive``."""
    config = config or SolverConfig()
    if config.cost not in ("cost1", "cost2"):
        raise MalformedInputError(f"tfpbs_solve cost must be cost1 or cost2, got {config.cost!r}")
    problem.check()
    if problem.assignment is None:
        problem = problem.with_assignment(assign_movers(problem))
        problem.check()
    name = "tfpbs-transitive" if transitive else "tfpbs"
    return _PTSearch(problem, config, name, transitive, repair_cap).run()


__all__ = ["NO_SOLUTION", "SOLVED", "TIMEOUT", "INFEASIBLE", "PTNode", "PriorityCycleError",
           "topological_order", "pbs_solve", "tfpbs_solve"]
