"""Constraints and per-entity constraint tables.

Mover entities have two footprints: the agent *body* and the *obstacle*
it is responsible for.  Before pickup the obstacle footprint is the
obstacle's start vertex; afterwards it coincides with the body.  Constraints
name the footprint they restrict, so a split on an obstacle-vs-obstacle
conflict can still make progress.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import INF, Problem

BODY = "body"
OBSTACLE = "obstacle"


class InfeasibleConstraintsError(ValueError):
    """The constraint set contradicts itself for one entity."""


@dataclass(frozen=True, order=True)
class Constraint:
    """``(+|-, entity, vertex, time)`` or an edge version with ``prev``.

    An edge constraint restricts the move ``prev -> vertex`` that arrives at
    ``time``.
    """

    time: int
    entity: int
    vertex: int
    positive: bool = False
    prev: int | None = None
    footprint: str = BODY

    @property
    def is_edge(self) -> bool:
        return self.prev is not None

    def __str__(self) -> str:
        sign = "+" if self.positive else "-"
        where = f"{self.prev}->{self.vertex}" if self.is_edge else str(self.vertex)
        fp = "" if self.footprint == BODY else "/obs"
        return f"({sign},e{self.entity}{fp},{where},{self.time})"


@dataclass(frozen=True)
class TimedConstraint:
    """Vertex reserved for its (uncarried) obstacle before ``release_time``.

    Task agents and carrying movers may not stand on ``vertex`` at any
    ``t < release_time``; non-carrying movers may.
    """

    vertex: int
    release_time: float


@dataclass
class ConstraintTable:
    entity: int
    mover: bool
    horizon: int
    body: set[tuple[int, int]] = field(default_factory=set)
    obstacle: set[tuple[int, int]] = field(default_factory=set)
    edges: set[tuple[int, int, int]] = field(default_factory=set)
    landmarks: dict[int, int] = field(default_factory=dict)
    obstacle_landmarks: dict[int, int] = field(default_factory=dict)
    timed: dict[int, float] = field(default_factory=dict)
    body_forever: dict[int, int] = field(default_factory=dict)
    obstacle_forever: dict[int, int] = field(default_factory=dict)

    def body_blocked(self, v: int, t: int) -> bool:
        if (v, t) in self.body:
            return True
        t0 = self.body_forever.get(v)
        return t0 is not None and t >= t0

    def obstacle_blocked(self, v: int, t: int) -> bool:
        if (v, t) in self.obstacle:
            return True
        t0 = self.obstacle_forever.get(v)
        return t0 is not None and t >= t0

    def edge_blocked(self, u: int, v: int, t: int) -> bool:
        return (u, v, t) in self.edges

    def timed_blocked(self, v: int, t: int) -> bool:
        r = self.timed.get(v)
        return r is not None and t < r

    @property
    def last_time(self) -> int:
        """Latest timestep any entry refers to; the table is time-invariant after it."""
        times = [0]
        times.extend(t for _, t in self.body)
        times.extend(t for _, t in self.obstacle)
        times.extend(t for _, _, t in self.edges)
        times.extend(self.landmarks)
        times.extend(self.obstacle_landmarks)
        times.extend(int(r) for r in self.timed.values() if r != INF)
        times.extend(self.body_forever.values())
        times.extend(self.obstacle_forever.values())
        return max(times)

    def last_landmark(self) -> int:
        return max([0, *self.landmarks, *self.obstacle_landmarks])

    def settle_time(self, v: int, *, obstacle: bool = False, timed: bool = True) -> float:
        """Earliest ``t0`` such that ``v`` is free at every ``t >= t0``."""
        if v in self.body_forever or (obstacle and v in self.obstacle_forever):
            return INF
        t0 = 0
        for u, t in self.body:
            if u == v and t + 1 > t0:
                t0 = t + 1
        if obstacle:
            for u, t in self.obstacle:
                if u == v and t + 1 > t0:
                    t0 = t + 1
        if timed and v in self.timed:
            t0 = max(t0, self.timed[v])
        return t0


def default_horizon(problem: Problem) -> int:
    """|V| + (number of entities) x (grid diameter)."""
    g = problem.graph
    return g.num_vertices + max(problem.n_entities, 1) * g.diameter_bound()


def timed_constraints(problem: Problem, etas: Sequence[float]) -> list[TimedConstraint]:
    """Timed constraints from per-mover pickup lower bounds.

    At the pickup step itself the vertex still holds the mover (or the
    parked obstacle), so it cannot be free before ``eta + 1``.
    """
    return [TimedConstraint(problem.obstacle_vertex(j), eta + 1) for j, eta in enumerate(etas)]


def _add_landmark(slot: dict[int, int], t: int, v: int, c: Constraint) -> None:
    old = slot.get(t)
    if old is not None and old != v:
        raise InfeasibleConstraintsError(f"two positive constraints at t={t}: {old} and {v} ({c})")
    slot[t] = v


def build_table(problem: Problem, constraints: Iterable[Constraint], entity: int,
                timed: Iterable[TimedConstraint] = (), horizon: int | None = None) -> ConstraintTable:
    """Collect everything that restricts ``entity``.

    This includes its own constraints, the negatives implied by other
    entities' positive constraints, and timed constraints. A mover ignores
    the timed constraint on its own obstacle.
    """
    mover = problem.is_mover(entity)
    table = ConstraintTable(entity, mover, default_horizon(problem) if horizon is None else horizon)
    for c in constraints:
        if c.entity == entity:
            if c.positive:
                slot = table.obstacle_landmarks if c.footprint == OBSTACLE else table.landmarks
                if c.is_edge:
                    _add_landmark(slot, c.time - 1, c.prev, c)
                _add_landmark(slot, c.time, c.vertex, c)
            elif c.is_edge:
                table.edges.add((c.prev, c.vertex, c.time))
            elif c.footprint == OBSTACLE:
                table.obstacle.add((c.vertex, c.time))
            else:
                table.body.add((c.vertex, c.time))
            continue
        if not c.positive:
            continue
        # implied negatives of another entity's positive constraint
        other_is_task = not problem.is_mover(c.entity)
        if c.footprint == OBSTACLE:
            target = table.obstacle if mover else table.body
            target.add((c.vertex, c.time))
            continue
        cells = [(c.vertex, c.time)]
        if c.is_edge:
            cells.append((c.prev, c.time - 1))
            table.edges.add((c.vertex, c.prev, c.time))
        for cell in cells:
            table.body.add(cell)
            if mover and other_is_task:
                table.obstacle.add(cell)
    own = problem.obstacle_vertex(problem.mover_of(entity)) if mover else None
    for tc in timed:
        if tc.vertex != own and tc.release_time > 0:
            table.timed[tc.vertex] = max(table.timed.get(tc.vertex, 0), tc.release_time)
    for slot, negs in ((table.landmarks, table.body), (table.obstacle_landmarks, table.obstacle)):
        for t, v in slot.items():
            if (v, t) in negs:
                raise InfeasibleConstraintsError(f"entity {entity} both must and must not be at {v}@{t}")
    return table


def pickup_index(path: Sequence[int], home: int) -> int | None:
    for t, v in enumerate(path):
        if v == home:
            return t
    return None


def add_path_avoidance(table: ConstraintTable, problem: Problem, other: int, path: Sequence[int]) -> None:
    """Make ``table`` avoid entity ``other`` following ``path`` (and then staying put).

    Used by the priority-based solvers: a lower-priority entity treats the
    higher-priority paths as moving obstacles.  The other entity's obstacle
    footprint is honoured as well when it is a mover.
    """
    me_mover = table.mover
    last = len(path) - 1
    body_cells = [(path[t], t) for t in range(last)]
    for t in range(1, len(path)):
        u, v = path[t - 1], path[t]
        if u != v:
            table.edges.add((v, u, t))
    _forever(table.body_forever, path[last], last)
    table.body.update(body_cells)
    if me_mover and not problem.is_mover(other):
        # a task agent's vertex can never hold my obstacle either
        table.obstacle.update(body_cells)
        _forever(table.obstacle_forever, path[last], last)
    if problem.is_mover(other):
        home = problem.obstacle_vertex(problem.mover_of(other))
        p = pickup_index(path, home)
        stop = last + 1 if p is None else p
        parked = [(home, t) for t in range(stop)]
        if me_mover:
            # once carried, its obstacle shares its body's vertex, which the
            # body blocks already cover; only the parked phase needs entries
            table.obstacle.update(parked)
            if p is None:
                _forever(table.obstacle_forever, home, last)
        else:
            table.body.update(parked)
            if p is None:
                _forever(table.body_forever, home, last)


def _forever(slot: dict[int, int], v: int, t: int) -> None:
    slot[v] = min(slot.get(v, t), t)


def avoidance_table(problem: Problem, entity: int, higher: Mapping[int, Sequence[int]],
                    timed: Iterable[TimedConstraint] = (), horizon: int | None = None) -> ConstraintTable:
    table = build_table(problem, (), entity, timed, horizon)
    for other in sorted(higher):
        add_path_avoidance(table, problem, other, higher[other])
    return table
