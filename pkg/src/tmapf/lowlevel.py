"""Single-entity searches used by every high-level solver.

* :func:`spacetime_astar` plans a task agent (or a MAPF agent).
* :func:`mover_lowlevel` plans a mover entity: walk to the obstacle (free to
  pass under any obstacle), pick it up, then optionally carry it around and
  back so it can get out of someone's way.
* :func:`eta_lower_bound` is the earliest possible pickup time.
"""

from __future__ import annotations

import heapq
import time as _time
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .constraints import ConstraintTable, pickup_index
from .core import INF, Graph, MalformedInputError, Problem


class SearchTimeout(RuntimeError):
    """Raised when a cooperative deadline expires."""


class Deadline:
    def __init__(self, seconds: float | None):
        self.end = None if seconds is None else _time.monotonic() + seconds

    def check(self) -> None:
        if self.end is not None and _time.monotonic() > self.end:
            raise SearchTimeout()


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0


_NO_DEADLINE = Deadline(None)


def _bfs(graph: Graph, target: int, allowed) -> list[float]:
    dist = [INF] * graph.num_vertices
    if not allowed(target):
        return dist
    dist[target] = 0
    queue = deque([target])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in graph.neighbors(u):
            if dist[w] == INF and allowed(w):
                dist[w] = du
                queue.append(w)
    return dist


def _distance_map(graph: Graph, target: int, hard_blocked: frozenset[int] | None) -> list[float]:
    if hard_blocked is None:
        return graph.distances(target)
    return _bfs(graph, target, lambda v: v not in hard_blocked)


def _extract(nodes: list, idx: int) -> list[int]:
    path = []
    while idx >= 0:
        v, parent = nodes[idx]
        path.append(v)
        idx = parent
    path.reverse()
    return path


def spacetime_astar(graph: Graph, start: int, goal: int, table: ConstraintTable,
                    hard_blocked: Iterable[int] | None = None, *,
                    stats: SearchStats | None = None, deadline: Deadline | None = None) -> list[int] | None:
    """Minimum-arrival path from ``start`` to ``goal`` or ``None``.

    ``hard_blocked`` defaults to the static cells.  The path ends on the
    first timestep from which the agent can stay on ``goal`` forever.
    """
    blocked = None if hard_blocked is None else frozenset(hard_blocked)
    if blocked is None:
        forbidden = graph.passable
        ok_vertex = forbidden.__getitem__
    else:
        ok_vertex = lambda v: v not in blocked  # noqa: E731
    if not ok_vertex(start):
        raise MalformedInputError(f"start {start} is hard-blocked")
    stats = stats if stats is not None else SearchStats()
    deadline = deadline or _NO_DEADLINE
    h = _distance_map(graph, goal, blocked)
    if h[start] == INF or not ok_vertex(goal):
        return None

    lm_times = sorted(table.landmarks)
    lm_vertices = [table.landmarks[t] for t in lm_times]
    lm_dist = [_distance_map(graph, v, blocked) for v in lm_vertices]
    for v in lm_vertices:
        if not ok_vertex(v):
            return None
    settle = table.settle_time(goal)
    if settle == INF:
        return None
    earliest = max(settle, lm_times[-1] if lm_times else 0)
    floor = lm_times[-1] + h[lm_vertices[-1]] if lm_times else 0
    cap = table.last_time + 1
    horizon = table.horizon
    body_blocked, timed_blocked, edge_blocked = table.body_blocked, table.timed_blocked, table.edge_blocked
    landmarks = table.landmarks

    def state_ok(v: int, t: int) -> bool:
        if body_blocked(v, t) or timed_blocked(v, t):
            return False
        lv = landmarks.get(t)
        if lv is not None and lv != v:
            return False
        i = bisect_right(lm_times, t)
        if i < len(lm_times) and t + lm_dist[i][v] > lm_times[i]:
            return False
        return True

    if not state_ok(start, 0):
        return None
    nodes: list[tuple[int, int]] = [(start, -1)]
    seq = 0
    f0 = max(h[start], earliest, floor)
    open_heap = [(f0, 0, 0, start, seq, 0)]
    closed: set[tuple[int, int]] = set()
    while open_heap:
        f, t, _, v, _, idx = heapq.heappop(open_heap)
        key = (v, t if t < cap else cap)
        if key in closed:
            continue
        closed.add(key)
        stats.expanded += 1
        if stats.expanded & 1023 == 0:
            deadline.check()
        if v == goal and t >= earliest:
            return _extract(nodes, idx)
        nt = t + 1
        if nt > horizon:
            continue
        nkey_t = nt if nt < cap else cap
        for w in (v, *graph.neighbors(v)):
            if not ok_vertex(w) or (w, nkey_t) in closed:
                continue
            if w != v and edge_blocked(v, w, nt):
                continue
            if not state_ok(w, nt):
                continue
            hw = h[w]
            if hw == INF:
                continue
            seq += 1
            nodes.append((w, idx))
            stats.generated += 1
            heapq.heappush(open_heap, (max(nt + hw, earliest, floor), nt, 1 if w == v else 0, w, seq,
                                       len(nodes) - 1))
    return None


@dataclass
class MoverPlan:
    path: list[int]
    pickup: int
    free_moves: int
    carried_moves: int


def mover_lowlevel(problem: Problem, mover: int, table: ConstraintTable, cost: str = "cost2", *,
                   stats: SearchStats | None = None, deadline: Deadline | None = None) -> MoverPlan | None:
    """Best mover entity path under ``table``.

    The objective is the mover's share of the chosen cost function: carried
    (obstacle) moves for ``cost1``, plus the approach moves for ``cost2``.
    Ties prefer fewer approach moves, then earlier pickup.  The path ends
    parked on the obstacle's start vertex.
    """
    if problem.assignment is None:
        raise MalformedInputError("mover low-level search needs an assignment")
    if cost not in ("cost1", "cost2"):
        raise MalformedInputError(f"unknown mover objective {cost!r}")
    stats = stats if stats is not None else SearchStats()
    deadline = deadline or _NO_DEADLINE
    g = problem.graph
    passable = g.passable
    start = problem.mover_starts[mover]
    home = problem.obstacle_vertex(mover)
    d_any = g.distances(home, through_static=True)
    d_pass = g.distances(home)
    if d_any[start] == INF:
        return None
    price_free = 1 if cost == "cost2" else 0

    body_blocked, obstacle_blocked = table.body_blocked, table.obstacle_blocked
    timed_blocked, edge_blocked = table.timed_blocked, table.edge_blocked
    landmarks, obs_landmarks = table.landmarks, table.obstacle_landmarks
    lm_times = sorted(landmarks)
    lm_dist = [g.distances(landmarks[t], through_static=True) for t in lm_times]

    def state_ok(v: int, t: int, carrying: bool) -> bool:
        if body_blocked(v, t):
            return False
        lv = landmarks.get(t)
        if lv is not None and lv != v:
            return False
        i = bisect_right(lm_times, t)
        if i < len(lm_times) and t + lm_dist[i][v] > lm_times[i]:
            return False
        ov = obs_landmarks.get(t)
        if carrying:
            if not passable[v] or obstacle_blocked(v, t) or timed_blocked(v, t):
                return False
            return ov is None or ov == v
        if obstacle_blocked(home, t):
            return False
        return ov is None or ov == home

    settle = max(table.settle_time(home, obstacle=True, timed=False), table.last_landmark())
    if settle == INF:
        return None
    cap = table.last_time + 1
    horizon = table.horizon

    def heur(v: int, t: int, carrying: bool) -> tuple:
        if carrying:
            return d_pass[v], 0
        return price_free * d_any[v], d_any[v]

    carrying0 = start == home
    if not state_ok(start, 0, carrying0):
        return None
    # node: (vertex, carrying, parent, pickup)
    nodes: list[tuple[int, bool, int]] = [(start, carrying0, -1)]
    seq = 0
    h1, h2 = heur(start, 0, carrying0)
    pick0 = 0 if carrying0 else d_any[start]
    open_heap = [(h1, h2, pick0, 0, 0, start, seq, 0, 0, 0)]
    closed: set[tuple[int, int, bool]] = set()
    while open_heap:
        f1, f2, pick, t, _, v, _, idx, g1, g2 = heapq.heappop(open_heap)
        carrying = nodes[idx][1]
        key = (v, t if t < cap else cap, carrying)
        if key in closed:
            continue
        closed.add(key)
        stats.expanded += 1
        if stats.expanded & 1023 == 0:
            deadline.check()
        if carrying and v == home and t >= settle:
            path = _extract([(n[0], n[2]) for n in nodes], idx)
            p = pickup_index(path, home)
            free = sum(1 for a, b in zip(path[:p], path[1:p + 1]) if a != b)
            carried = sum(1 for a, b in zip(path[p:], path[p + 1:]) if a != b)
            return MoverPlan(path, p, free, carried)
        nt = t + 1
        if nt > horizon:
            continue
        nkey_t = nt if nt < cap else cap
        for w in (v, *g.neighbors(v)):
            ncarry = carrying or w == home
            if (w, nkey_t, ncarry) in closed:
                continue
            if w != v and edge_blocked(v, w, nt):
                continue
            if not state_ok(w, nt, ncarry):
                continue
            if carrying:
                c1, c2 = (1, 0) if w != v else (0, 0)
            else:
                c1, c2 = (price_free, 1) if w != v else (0, 0)
            hh1, hh2 = heur(w, nt, ncarry)
            if hh1 == INF or hh2 == INF:
                continue
            n1, n2 = g1 + c1, g2 + c2
            npick = pick if carrying else (nt if ncarry else nt + d_any[w])
            seq += 1
            nodes.append((w, ncarry, idx))
            stats.generated += 1
            heapq.heappush(open_heap, (n1 + hh1, n2 + hh2, npick, nt, 1 if w == v else 0, w, seq,
                                       len(nodes) - 1, n1, n2))
    return None


def eta_lower_bound(problem: Problem, mover: int, table: ConstraintTable) -> float:
    """Earliest timestep the mover can stand on its obstacle, or ``inf``."""
    g = problem.graph
    start = problem.mover_starts[mover]
    home = problem.obstacle_vertex(mover)
    body_blocked, obstacle_blocked = table.body_blocked, table.obstacle_blocked
    landmarks, obs_landmarks = table.landmarks, table.obstacle_landmarks

    def free_ok(v: int, t: int) -> bool:
        if body_blocked(v, t) or obstacle_blocked(home, t):
            return False
        lv, ov = landmarks.get(t), obs_landmarks.get(t)
        return (lv is None or lv == v) and (ov is None or ov == home)

    def pickup_ok(t: int) -> bool:
        if body_blocked(home, t) or obstacle_blocked(home, t):
            return False
        lv, ov = landmarks.get(t), obs_landmarks.get(t)
        return (lv is None or lv == home) and (ov is None or ov == home)

    if start == home:
        return 0 if pickup_ok(0) else INF
    if not free_ok(start, 0):
        return INF
    limit = min(table.horizon, table.last_time + g.num_vertices + 1)
    frontier = {start}
    for t in range(1, limit + 1):
        nxt = set()
        for v in frontier:
            for w in (v, *g.neighbors(v)):
                if w in nxt or (w != v and table.edge_blocked(v, w, t)):
                    continue
                if w == home:
                    if pickup_ok(t):
                        return t
                    continue
                if free_ok(w, t):
                    nxt.add(w)
        if not nxt:
            return INF
        frontier = nxt
    return INF


def entity_cost(problem: Problem, entity: int, path: Sequence[int], cost: str) -> int:
    """Contribution of one entity path to the chosen objective."""
    if not problem.is_mover(entity):
        goal = problem.task_goals[entity]
        t = len(path) - 1
        while t > 0 and path[t - 1] == goal:
            t -= 1
        return t
    home = problem.obstacle_vertex(problem.mover_of(entity))
    p = pickup_index(path, home)
    if p is None:
        raise MalformedInputError(f"mover entity {entity} never reaches its obstacle")
    carried = sum(1 for a, b in zip(path[p:], path[p + 1:]) if a != b)
    if cost == "cost2":
        carried += sum(1 for a, b in zip(path[:p], path[1:p + 1]) if a != b)
    return carried


def path_consistent(problem: Problem, entity: int, path: Sequence[int], table: ConstraintTable) -> bool:
    """Does ``path`` (then waiting at its end forever) satisfy ``table``?"""
    if not path:
        return False
    g = problem.graph
    end = max(len(path), table.last_time + 2)
    at = lambda t: path[t] if t < len(path) else path[-1]  # noqa: E731
    if table.mover:
        home = problem.obstacle_vertex(problem.mover_of(entity))
        p = pickup_index(path, home)
        if p is None or path[-1] != home:
            return False
    else:
        if path[-1] != problem.task_goals[entity]:
            return False
    for t in range(end):
        v = at(t)
        if t > 0:
            u = at(t - 1)
            if not g.has_edge(u, v) or (u != v and table.edge_blocked(u, v, t)):
                return False
        if table.body_blocked(v, t):
            return False
        lv = table.landmarks.get(t)
        if lv is not None and lv != v:
            return False
        ov = table.obstacle_landmarks.get(t)
        if table.mover:
            obs = home if t < p else v
            if table.obstacle_blocked(obs, t) or (ov is not None and ov != obs):
                return False
            if t >= p and (not g.passable[v] or table.timed_blocked(v, t)):
                return False
        else:
            if not g.passable[v] or table.timed_blocked(v, t):
                return False
    return True
