"""Pairwise conflict detection between entity paths, and split rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .constraints import BODY, OBSTACLE, Constraint, pickup_index
from .core import Problem

VERTEX = "vertex"
EDGE = "edge"


@dataclass(frozen=True, order=True)
class Conflict:
    """Entities ``a < b`` collide at ``time``.

    ``fa``/``fb`` name the footprint of each side (agent body or obstacle).
    For an edge conflict ``a`` moves ``prev -> vertex`` while ``b`` moves
    the other way.
    """

    time: int
    a: int
    b: int
    kind: str
    vertex: int
    prev: int | None = None
    fa: str = BODY
    fb: str = BODY


def detect_conflicts(problem: Problem, paths: Sequence[Sequence[int]],
                     first_only: bool = False) -> list[Conflict]:
    """All conflicts between entity paths (padded by waiting), sorted."""
    nt = problem.n_tasks
    n = len(paths)
    homes = [problem.obstacle_vertex(j) for j in range(n - nt)] if n > nt else []
    pickups = [pickup_index(paths[nt + j], homes[j]) for j in range(n - nt)]
    horizon = max((len(p) for p in paths), default=0)
    out: list[Conflict] = []
    prev_pos: list[int] | None = None
    for t in range(horizon):
        pos = [p[t] if t < len(p) else p[-1] for p in paths]
        found: list[Conflict] = []
        where: dict[int, list[int]] = {}
        for e, v in enumerate(pos):
            here = where.setdefault(v, [])
            found.extend(Conflict(t, other, e, VERTEX, v) for other in here)
            here.append(e)
        parked: dict[int, int] = {}
        for j, home in enumerate(homes):
            p = pickups[j]
            if p is None or t < p:
                parked[home] = nt + j
        if parked:
            for i in range(nt):
                k = parked.get(pos[i])
                if k is not None:
                    found.append(Conflict(t, i, k, VERTEX, pos[i], None, BODY, OBSTACLE))
            for j in range(len(homes)):
                p = pickups[j]
                if p is not None and t >= p:
                    k = parked.get(pos[nt + j])
                    if k is not None and k != nt + j:
                        a, b = sorted((nt + j, k))
                        found.append(Conflict(t, a, b, VERTEX, pos[nt + j], None, OBSTACLE, OBSTACLE))
        if prev_pos is not None:
            moves: dict[tuple[int, int], int] = {}
            for e, (u, v) in enumerate(zip(prev_pos, pos)):
                if u != v:
                    moves[(u, v)] = e
            for (u, v), e in moves.items():
                f = moves.get((v, u))
                if f is not None and e < f:
                    found.append(Conflict(t, e, f, EDGE, v, u))
        if found:
            found.sort()
            if first_only:
                return found[:1]
            out.extend(found)
        prev_pos = pos
    return out


def first_conflict(problem: Problem, paths: Sequence[Sequence[int]]) -> Conflict | None:
    found = detect_conflicts(problem, paths, first_only=True)
    return found[0] if found else None


def count_conflicts(problem: Problem, paths: Sequence[Sequence[int]]) -> int:
    return len(detect_conflicts(problem, paths))


def split_target(problem: Problem, c: Conflict) -> tuple[int, str, int, int | None]:
    """Entity, footprint, vertex and edge source the split constrains.

    Task agents are preferred as the split subject; otherwise the lower id.
    """
    if c.fa == OBSTACLE and c.fb == OBSTACLE:
        return c.a, OBSTACLE, c.vertex, None
    if c.fb == OBSTACLE:
        return c.a, BODY, c.vertex, None
    subject = c.a
    if problem.is_mover(c.a) and not problem.is_mover(c.b):
        subject = c.b
    if c.kind == EDGE:
        if subject == c.a:
            return subject, BODY, c.vertex, c.prev
        return subject, BODY, c.prev, c.vertex
    return subject, BODY, c.vertex, None


def split(problem: Problem, c: Conflict) -> tuple[Constraint, Constraint]:
    """Disjoint split: the subject must / must not be there at that time."""
    entity, footprint, vertex, prev = split_target(problem, c)
    pos = Constraint(c.time, entity, vertex, True, prev, footprint)
    neg = Constraint(c.time, entity, vertex, False, prev, footprint)
    return pos, neg
