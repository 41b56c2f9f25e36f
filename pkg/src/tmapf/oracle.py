"""Independent ground truth for tiny instances.

:func:`certify` re-derives every solution rule directly from positions.
:func:`brute_force_optimal` runs a uniform-cost (A*) search over joint
configurations.  Neither calls the solver-side search or validity code.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .core import MalformedInputError, Problem, Solution, State

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
CAP_EXCEEDED = "cap-exceeded"

RULES = ("S1", "S2", "S3'", "T1'", "T2'", "T3'", "start", "goal", "obstacle-restore")


@dataclass(frozen=True)
class CertViolation:
    time: int
    rule: str
    detail: str = ""


@dataclass
class Certificate:
    violations: list[CertViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def as_dict(self) -> dict:
        return {"ok": self.ok,
                "violations": [{"time": v.time, "rule": v.rule, "detail": v.detail}
                               for v in self.violations]}


def _adjacent(width: int, u: int, v: int) -> bool:
    if u == v:
        return True
    ux, uy = u % width, u // width
    vx, vy = v % width, v // width
    return abs(ux - vx) + abs(uy - vy) == 1


def certify(problem: Problem, solution: Solution, mode: str = "tmapf") -> Certificate:
    """Check a full solution against every state, transition and boundary rule."""
    if mode not in ("mapf", "tmapf"):
        raise MalformedInputError(f"unknown mode {mode!r}")
    states = solution.states
    if not states:
        raise MalformedInputError("solution has no states")
    g = problem.graph
    n = g.num_vertices
    nt, nm = problem.n_tasks, problem.n_movers
    nobs = 0 if mode == "mapf" else len(problem.movable_obstacles)
    if mode == "mapf" and nm:
        raise MalformedInputError("mapf mode does not admit movers")
    for i, s in enumerate(states):
        if (len(s.tasks), len(s.movers), len(s.obstacles)) != (nt, nm, nobs):
            raise MalformedInputError(f"state {i} has the wrong number of entries")
        for v in (*s.tasks, *s.movers, *s.obstacles):
            if not isinstance(v, int) or not 0 <= v < n:
                raise MalformedInputError(f"state {i} references vertex {v!r} outside the graph")

    static = {v for v in range(n) if not g.passable[v]}
    if mode == "mapf":
        static |= set(problem.movable_obstacles)
    out: list[CertViolation] = []

    first = states[0]
    if (first.tasks != tuple(problem.task_starts) or first.movers != tuple(problem.mover_starts)
            or first.obstacles != tuple(problem.movable_obstacles[:nobs])):
        out.append(CertViolation(0, "start", "initial state differs from the start configuration"))

    for t, s in enumerate(states):
        agents = list(s.tasks) + list(s.movers)
        for a, b in itertools.combinations(range(len(agents)), 2):
            if agents[a] == agents[b]:
                out.append(CertViolation(t, "S1", f"agents {a},{b} share {agents[a]}"))
        for a, b in itertools.combinations(range(nobs), 2):
            if s.obstacles[a] == s.obstacles[b]:
                out.append(CertViolation(t, "S2", f"obstacles {a},{b} share {s.obstacles[a]}"))
        for k, w in enumerate(s.obstacles):
            if w in static:
                out.append(CertViolation(t, "S2", f"obstacle {k} on static cell {w}"))
        for i, v in enumerate(s.tasks):
            if v in static or v in s.obstacles:
                out.append(CertViolation(t, "S3'", f"task {i} on obstacle cell {v}"))

    for t in range(1, len(states)):
        a, b = states[t - 1], states[t]
        src = list(a.tasks) + list(a.movers) + list(a.obstacles)
        dst = list(b.tasks) + list(b.movers) + list(b.obstacles)
        for e, (u, v) in enumerate(zip(src, dst)):
            if not _adjacent(g.width, u, v):
                out.append(CertViolation(t, "T1'", f"entity {e} {u}->{v}"))
        for e, f in itertools.combinations(range(len(src)), 2):
            if src[e] != dst[e] and src[e] == dst[f] and dst[e] == src[f]:
                out.append(CertViolation(t, "T2'", f"entities {e},{f} swap"))
        for k in range(nobs):
            w, w2 = a.obstacles[k], b.obstacles[k]
            if w == w2:
                continue
            if problem.assignment is None:
                carriers = range(nm)
            else:
                carriers = [j for j in range(nm) if problem.assignment[j] == k]
            if not any(a.movers[j] == w and b.movers[j] == w2 for j in carriers):
                out.append(CertViolation(t, "T3'", f"obstacle {k} moved without its mover"))

    last = states[-1]
    for i, v in enumerate(last.tasks):
        if v != problem.task_goals[i]:
            out.append(CertViolation(len(states) - 1, "goal", f"task {i} ends at {v}"))
    for k, w in enumerate(last.obstacles):
        if w != problem.movable_obstacles[k]:
            out.append(CertViolation(len(states) - 1, "obstacle-restore", f"obstacle {k} ends at {w}"))
    return Certificate(out)


@dataclass
class OracleResult:
    status: str
    cost: int | None = None
    solution: Solution | None = None
    states_expanded: int = 0


def _bfs(n: int, width: int, height: int, target: int, ok) -> list[float]:
    inf = float("inf")
    dist = [inf] * n
    if not ok(target):
        return dist
    dist[target] = 0
    queue = deque([target])
    while queue:
        u = queue.popleft()
        x, y = u % width, u // width
        for w, good in ((u - width, y > 0), (u - 1, x > 0), (u + 1, x < width - 1),
                        (u + width, y < height - 1)):
            if good and dist[w] == inf and ok(w):
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def brute_force_optimal(problem: Problem, mode: str = "tmapf", cost: str = "cost1",
                        state_cap: int = 1_000_000) -> OracleResult:
    """Exact optimum by search over joint configurations.

    In ``tmapf`` mode the assignment is fixed (it must be present) and each
    mover is coupled to its obstacle from the first time it stands on it.
    A task agent is "committed" once it decides to stay on its goal forever;
    each transition costs one per uncommitted task, one per non-wait carried
    move and, for ``cost2``, one per non-wait move made before pickup.
    """
    if mode == "mapf":
        if problem.n_movers:
            raise MalformedInputError("mapf mode does not admit movers")
        if cost not in ("soc", "sum-of-costs"):
            raise MalformedInputError("mapf mode optimises sum-of-costs")
    elif mode == "tmapf":
        if cost not in ("cost1", "cost2"):
            raise MalformedInputError(f"unknown tmapf cost {cost!r}")
        if problem.n_movers and problem.assignment is None:
            raise MalformedInputError("tmapf oracle needs a fixed assignment")
    else:
        raise MalformedInputError(f"unknown mode {mode!r}")

    g = problem.graph
    W, H, n = g.width, g.height, g.num_vertices
    static = [not g.passable[v] for v in range(n)]
    if mode == "mapf":
        for w in problem.movable_obstacles:
            static[w] = True
    nt, nm = problem.n_tasks, problem.n_movers
    goals = problem.task_goals
    homes = [problem.movable_obstacles[problem.assignment[j]] for j in range(nm)] if nm else []
    free_price = 1 if cost == "cost2" else 0

    def nbrs(v: int) -> list[int]:
        x, y = v % W, v // W
        out = [v]
        if y > 0:
            out.append(v - W)
        if x > 0:
            out.append(v - 1)
        if x < W - 1:
            out.append(v + 1)
        if y < H - 1:
            out.append(v + W)
        return out

    adj = [nbrs(v) for v in range(n)]
    task_h = [_bfs(n, W, H, goals[i], lambda v: not static[v]) for i in range(nt)]
    pass_h = [_bfs(n, W, H, h, lambda v: not static[v]) for h in homes]
    any_h = [_bfs(n, W, H, h, lambda v: True) for h in homes]

    def heuristic(tasks, committed, movers, coupled) -> float:
        total = 0
        for i in range(nt):
            if not committed[i]:
                total += task_h[i][tasks[i]]
        for j in range(nm):
            if coupled[j]:
                total += pass_h[j][movers[j]]
            else:
                total += free_price * any_h[j][movers[j]]
        return total

    # start configurations (tasks already on their goal may commit at t=0)
    tasks0 = tuple(problem.task_starts)
    movers0 = tuple(problem.mover_starts)
    coupled0 = tuple(movers0[j] == homes[j] for j in range(nm))
    for i, v in enumerate(tasks0):
        if static[v]:
            return OracleResult(INFEASIBLE)
    starts = []
    for flags in itertools.product(*[(False, True) if tasks0[i] == goals[i] else (False,)
                                     for i in range(nt)]):
        starts.append((tasks0, flags, movers0, coupled0))

    counter = itertools.count()
    heap = []
    best: dict = {}
    parent: dict = {}
    for s in starts:
        best[s] = 0
        parent[s] = None
        heapq.heappush(heap, (heuristic(*s), 0, next(counter), s))
    expanded = 0
    closed = set()

    while heap:
        f, gcost, _, s = heapq.heappop(heap)
        if s in closed or gcost > best.get(s, float("inf")):
            continue
        closed.add(s)
        expanded += 1
        if expanded > state_cap:
            return OracleResult(CAP_EXCEEDED, states_expanded=expanded)
        tasks, committed, movers, coupled = s
        if all(committed) and all(coupled[j] and movers[j] == homes[j] for j in range(nm)):
            return OracleResult(OPTIMAL, gcost, _witness(problem, mode, parent, s, homes),
                                expanded)
        base = sum(1 for c in committed if not c)
        for succ, step in _successors(tasks, committed, movers, coupled, adj, static, goals, homes,
                                      free_price):
            ng = gcost + base + step
            if ng < best.get(succ, float("inf")):
                best[succ] = ng
                parent[succ] = s
                heapq.heappush(heap, (ng + heuristic(*succ), ng, next(counter), succ))
    return OracleResult(INFEASIBLE, states_expanded=expanded)


def _successors(tasks, committed, movers, coupled, adj, static, goals, homes, free_price):
    nt, nm = len(tasks), len(movers)
    n_agents = nt + nm
    cur = list(tasks) + list(movers)
    chosen: list[int] = [0] * n_agents
    results = []

    def options(a: int) -> list[int]:
        v = cur[a]
        if a < nt:
            if committed[a]:
                return [v]
            return [w for w in adj[v] if not static[w]]
        j = a - nt
        if coupled[j]:
            return [w for w in adj[v] if not static[w]]
        return adj[v]

    def rec(a: int) -> None:
        if a == n_agents:
            finish()
            return
        for w in options(a):
            ok = True
            for b in range(a):
                if chosen[b] == w or (w != cur[a] and chosen[b] == cur[a] and cur[b] == w):
                    ok = False
                    break
            if ok:
                chosen[a] = w
                rec(a + 1)

    def finish() -> None:
        new_movers = tuple(chosen[nt:])
        new_coupled = tuple(coupled[j] or new_movers[j] == homes[j] for j in range(nm))
        obs = []
        for j in range(nm):
            obs.append(new_movers[j] if new_coupled[j] else homes[j])
        if len(set(obs)) != len(obs):
            return
        obs_set = set(obs)
        for j in range(nm):
            if new_coupled[j] and static[obs[j]]:
                return
        new_tasks = tuple(chosen[:nt])
        for v in new_tasks:
            if v in obs_set:
                return
        step = 0
        for j in range(nm):
            if new_movers[j] != movers[j]:
                step += 1 if coupled[j] else free_price
        commit_opts = [(True,) if committed[i]
                       else ((False, True) if new_tasks[i] == goals[i] else (False,))
                       for i in range(nt)]
        for flags in itertools.product(*commit_opts):
            results.append(((new_tasks, flags, new_movers, new_coupled), step))

    rec(0)
    return results


def _witness(problem: Problem, mode: str, parent: dict, s, homes: Sequence[int]) -> Solution:
    chain = []
    while s is not None:
        chain.append(s)
        s = parent[s]
    chain.reverse()
    states = []
    nm = problem.n_movers
    for t, (tasks, _, movers, coupled) in enumerate(chain):
        if mode == "mapf":
            obs = ()
        else:
            obs = list(problem.movable_obstacles)
            for j in range(nm):
                if coupled[j]:
                    obs[problem.assignment[j]] = movers[j]
            obs = tuple(obs)
        states.append(State(tuple(tasks), tuple(movers), obs, t))
    return Solution(states)
