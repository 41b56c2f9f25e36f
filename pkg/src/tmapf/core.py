"""Formal MAPF / tMAPF objects, validity predicates and cost functions.

Vertices are integer ids in row-major order (``v = y * width + x``).  Static
obstacle cells stay in the graph as vertices flagged impassable, because
mover agents are allowed to drive underneath them.

Rule ids used in validity reports:

``S1``
    two agents (task or mover) share a vertex.
``S2``
    two movable obstacles share a vertex, or a movable obstacle sits on a
    static obstacle.
``S3'``
    a task agent shares a vertex with an obstacle (static or movable).  In
    ``mapf`` mode this is the classical "agent on obstacle" rule.
``T1'``
    an entity moves along something that is not a graph edge.
``T2'``
    two entities swap vertices over the same edge.
``T3'``
    a movable obstacle moves without its mover carrying it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

MODES = ("mapf", "tmapf")
INF = float("inf")


class MalformedInputError(ValueError):
    """Inputs have the wrong shape or break a problem invariant."""


class UnsettledError(ValueError):
    """A task agent never settles at its goal."""


class Graph:
    """4-connected grid graph with implicit self-loop (wait) edges."""

    def __init__(self, width: int, height: int, passable: Sequence[bool] | None = None):
        if width <= 0 or height <= 0:
            raise MalformedInputError(f"grid must be non-empty, got {width}x{height}")
        self.width = width
        self.height = height
        n = width * height
        if passable is None:
            passable = [True] * n
        if len(passable) != n:
            raise MalformedInputError(f"passable has {len(passable)} cells, expected {n}")
        self.passable = tuple(bool(p) for p in passable)
        nbrs = []
        for v in range(n):
            x, y = v % width, v // width
            adj = []
            if y > 0:
                adj.append(v - width)
            if x > 0:
                adj.append(v - 1)
            if x < width - 1:
                adj.append(v + 1)
            if y < height - 1:
                adj.append(v + width)
            nbrs.append(tuple(adj))
        self._nbrs = tuple(nbrs)
        self._dist_cache: dict[tuple[int, bool], list[float]] = {}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.width, self.height, self.passable) == (other.width, other.height, other.passable)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.passable))

    @property
    def num_vertices(self) -> int:
        return self.width * self.height

    @property
    def static_vertices(self) -> frozenset[int]:
        return frozenset(v for v, ok in enumerate(self.passable) if not ok)

    def vid(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise MalformedInputError(f"cell ({x},{y}) outside {self.width}x{self.height} grid")
        return y * self.width + x

    def xy(self, v: int) -> tuple[int, int]:
        return v % self.width, v // self.width

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Orthogonal neighbours in increasing id order (no self loop)."""
        return self._nbrs[v]

    def has_edge(self, u: int, v: int) -> bool:
        return u == v or v in self._nbrs[u]

    def diameter_bound(self) -> int:
        return self.width + self.height - 2

    def distances(self, target: int, through_static: bool = False) -> list[float]:
        """BFS distance from every vertex to ``target`` (cached).

        With ``through_static`` the static flags are ignored, which is the
        metric movers use while not carrying anything.
        """
        key = (target, through_static)
        cached = self._dist_cache.get(key)
        if cached is not None:
            return cached
        dist = [INF] * self.num_vertices
        if through_static or self.passable[target]:
            dist[target] = 0
            queue = deque([target])
            while queue:
                u = queue.popleft()
                du = dist[u] + 1
                for w in self._nbrs[u]:
                    if dist[w] == INF and (through_static or self.passable[w]):
                        dist[w] = du
                        queue.append(w)
        self._dist_cache[key] = dist
        return dist

    def __repr__(self) -> str:
        return f"Graph({self.width}x{self.height}, static={len(self.static_vertices)})"


@dataclass(frozen=True)
class Problem:
    """A tMAPF instance; plain MAPF when there are no movers or movables.

    ``assignment[j]`` is the index of the movable obstacle mover ``j``
    carries.  Entity ids used by the solvers are ``0..n_tasks-1`` for task
    agents followed by ``n_tasks..n_tasks+n_movers-1`` for mover entities.
    """

    graph: Graph
    task_starts: tuple[int, ...]
    task_goals: tuple[int, ...]
    mover_starts: tuple[int, ...] = ()
    movable_obstacles: tuple[int, ...] = ()
    assignment: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("task_starts", "task_goals", "mover_starts", "movable_obstacles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.assignment is not None:
            object.__setattr__(self, "assignment", tuple(self.assignment))

    @property
    def static_obstacles(self) -> frozenset[int]:
        return self.graph.static_vertices

    @property
    def n_tasks(self) -> int:
        return len(self.task_starts)

    @property
    def n_movers(self) -> int:
        return len(self.mover_starts)

    @property
    def n_entities(self) -> int:
        return self.n_tasks + self.n_movers

    def is_mover(self, entity: int) -> bool:
        return entity >= self.n_tasks

    def mover_of(self, entity: int) -> int:
        return entity - self.n_tasks

    def obstacle_vertex(self, mover: int) -> int:
        """Start (and goal) vertex of the obstacle assigned to ``mover``."""
        if self.assignment is None:
            raise MalformedInputError("problem has no mover assignment")
        return self.movable_obstacles[self.assignment[mover]]

    def mover_carrying(self, obstacle: int) -> int | None:
        if self.assignment is None:
            return None
        for j, k in enumerate(self.assignment):
            if k == obstacle:
                return j
        return None

    def with_assignment(self, assignment: Sequence[int]) -> "Problem":
        return Problem(self.graph, self.task_starts, self.task_goals,
                       self.mover_starts, self.movable_obstacles, tuple(assignment))

    def static_version(self) -> "Problem":
        """Every movable obstacle frozen as static and all movers dropped."""
        passable = list(self.graph.passable)
        for w in self.movable_obstacles:
            passable[w] = False
        graph = Graph(self.graph.width, self.graph.height, passable)
        return Problem(graph, self.task_starts, self.task_goals)

    def check(self) -> None:
        """Raise :class:`MalformedInputError` if an invariant is broken."""
        n = self.graph.num_vertices
        if len(self.task_starts) != len(self.task_goals):
            raise MalformedInputError("task starts and goals differ in length")
        if len(self.mover_starts) != len(self.movable_obstacles):
            raise MalformedInputError(
                f"{len(self.mover_starts)} movers but {len(self.movable_obstacles)} movable obstacles")
        for v in (*self.task_starts, *self.task_goals, *self.mover_starts, *self.movable_obstacles):
            if not 0 <= v < n:
                raise MalformedInputError(f"vertex {v} out of range")
        blocked = self.static_obstacles | set(self.movable_obstacles)
        for i, (s, g) in enumerate(zip(self.task_starts, self.task_goals)):
            if s in blocked or g in blocked:
                raise MalformedInputError(f"task agent {i} start/goal on an obstacle vertex")
        for kind, seq in (("task starts", self.task_starts), ("task goals", self.task_goals),
                          ("mover starts", self.mover_starts),
                          ("movable obstacles", self.movable_obstacles)):
            if len(set(seq)) != len(seq):
                raise MalformedInputError(f"duplicate {kind}")
        if set(self.task_starts) & set(self.mover_starts):
            raise MalformedInputError("a task agent and a mover share a start vertex")
        for w in self.movable_obstacles:
            if not self.graph.passable[w]:
                raise MalformedInputError("movable obstacle on a static obstacle")
        if self.assignment is not None:
            if sorted(self.assignment) != list(range(self.n_movers)):
                raise MalformedInputError("assignment is not a perfect matching")

    def start_state(self) -> "State":
        return State(self.task_starts, self.mover_starts, self.movable_obstacles, 0)


@dataclass(frozen=True)
class State:
    tasks: tuple[int, ...]
    movers: tuple[int, ...] = ()
    obstacles: tuple[int, ...] = ()
    time: int = 0

    def entities(self) -> tuple[int, ...]:
        return self.tasks + self.movers + self.obstacles


@dataclass
class Solution:
    """Sequence of joint states for timesteps ``0..k-1``."""

    states: list[State]

    def __len__(self) -> int:
        return len(self.states)

    def task_path(self, i: int) -> list[int]:
        return [s.tasks[i] for s in self.states]

    def mover_path(self, j: int) -> list[int]:
        return [s.movers[j] for s in self.states]

    def obstacle_path(self, k: int) -> list[int]:
        return [s.obstacles[k] for s in self.states]


@dataclass(frozen=True)
class Violation:
    rule: str
    time: int
    detail: str = ""


@dataclass
class ValidityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


def _check_mode(problem: Problem, mode: str) -> None:
    if mode not in MODES:
        raise MalformedInputError(f"unknown mode {mode!r}")
    if mode == "mapf" and problem.n_movers:
        raise MalformedInputError("mapf mode does not admit mover agents")


def _check_shape(problem: Problem, state: State, mode: str) -> None:
    n_obs = 0 if mode == "mapf" else len(problem.movable_obstacles)
    if (len(state.tasks), len(state.movers), len(state.obstacles)) != (
            problem.n_tasks, problem.n_movers, n_obs):
        raise MalformedInputError(
            f"state has {len(state.tasks)}/{len(state.movers)}/{len(state.obstacles)} "
            f"task/mover/obstacle entries, problem expects "
            f"{problem.n_tasks}/{problem.n_movers}/{n_obs}")
    n = problem.graph.num_vertices
    for v in state.entities():
        if not 0 <= v < n:
            raise MalformedInputError(f"vertex {v} out of range")


def validate_state(problem: Problem, state: State, mode: str = "tmapf") -> ValidityReport:
    """Check S1, S2 and S3' on a single joint state.

    In ``mapf`` mode the movable obstacles are treated as static and the
    state carries no obstacle entries.
    """
    _check_mode(problem, mode)
    _check_shape(problem, state, mode)
    t = state.time
    out: list[Violation] = []
    static = problem.static_obstacles
    if mode == "mapf":
        static = static | set(problem.movable_obstacles)

    agents = list(state.tasks) + list(state.movers)
    seen: dict[int, int] = {}
    for a, v in enumerate(agents):
        if v in seen:
            out.append(Violation("S1", t, f"agents {seen[v]} and {a} at vertex {v}"))
        else:
            seen[v] = a

    obs_at: dict[int, int] = {}
    for k, w in enumerate(state.obstacles):
        if w in obs_at:
            out.append(Violation("S2", t, f"obstacles {obs_at[w]} and {k} at vertex {w}"))
        else:
            obs_at[w] = k
        if w in static:
            out.append(Violation("S2", t, f"obstacle {k} on static obstacle {w}"))

    for i, v in enumerate(state.tasks):
        if v in static:
            out.append(Violation("S3'", t, f"task agent {i} on static obstacle {v}"))
        if v in obs_at:
            out.append(Violation("S3'", t, f"task agent {i} on movable obstacle {obs_at[v]}"))
    return ValidityReport(out)


def validate_transition(problem: Problem, a: State, b: State, mode: str = "tmapf") -> ValidityReport:
    """Check T1', T2' and T3' between consecutive states ``a`` and ``b``.

    T3' is checked against the assigned mover when an assignment exists,
    otherwise against any mover.
    """
    _check_mode(problem, mode)
    _check_shape(problem, a, mode)
    _check_shape(problem, b, mode)
    t = b.time
    out: list[Violation] = []
    g = problem.graph
    src, dst = a.entities(), b.entities()
    for e, (u, v) in enumerate(zip(src, dst)):
        if not g.has_edge(u, v):
            out.append(Violation("T1'", t, f"entity {e} jumps {u}->{v}"))

    # T2': two entities traverse the same edge in opposite directions
    moves: dict[tuple[int, int], list[int]] = {}
    for e, (u, v) in enumerate(zip(src, dst)):
        if u != v:
            moves.setdefault((u, v), []).append(e)
    for (u, v), movers in moves.items():
        if u < v:
            for e in movers:
                for f in moves.get((v, u), ()):
                    out.append(Violation("T2'", t, f"entities {e} and {f} swap over {u}-{v}"))

    for k, (w, w2) in enumerate(zip(a.obstacles, b.obstacles)):
        if w == w2:
            continue
        if problem.assignment is not None:
            j = problem.mover_carrying(k)
            carriers = [] if j is None else [j]
        else:
            carriers = range(problem.n_movers)
        if not any(a.movers[j] == w and b.movers[j] == w2 for j in carriers):
            out.append(Violation("T3'", t, f"obstacle {k} moves {w}->{w2} without its mover"))
    return ValidityReport(out)


def cost_task_agent(problem: Problem, solution: Solution, agent: int) -> int:
    """Earliest timestep after which the agent stays on its goal."""
    if not solution.states:
        raise MalformedInputError("empty solution")
    goal = problem.task_goals[agent]
    path = solution.task_path(agent)
    if path[-1] != goal:
        raise UnsettledError(f"task agent {agent} does not end on its goal")
    t = len(path) - 1
    while t > 0 and path[t - 1] == goal:
        t -= 1
    return t


def sum_of_costs(problem: Problem, solution: Solution) -> int:
    return sum(cost_task_agent(problem, solution, i) for i in range(problem.n_tasks))


def _non_wait_moves(path: Sequence[int]) -> int:
    return sum(1 for u, v in zip(path, path[1:]) if u != v)


def pickup_time(problem: Problem, solution: Solution, mover: int) -> int | None:
    """First timestep the mover stands on its assigned obstacle's vertex."""
    k = problem.assignment[mover] if problem.assignment is not None else None
    if k is None:
        raise MalformedInputError("pickup time needs a mover assignment")
    for t, s in enumerate(solution.states):
        if s.movers[mover] == s.obstacles[k]:
            return t
    return None


def obstacle_moves(problem: Problem, solution: Solution) -> list[int]:
    return [_non_wait_moves(solution.obstacle_path(k)) for k in range(len(problem.movable_obstacles))]


def pre_pickup_moves(problem: Problem, solution: Solution) -> list[int]:
    """Non-wait moves each mover makes up to (and including) reaching its obstacle.

    A mover that never reaches its obstacle is charged for all its moves.
    """
    out = []
    for j in range(problem.n_movers):
        p = pickup_time(problem, solution, j)
        path = solution.mover_path(j)
        end = len(path) - 1 if p is None else p
        out.append(_non_wait_moves(path[: end + 1]))
    return out


def cost1(problem: Problem, solution: Solution) -> int:
    """Task-agent sum of costs plus non-wait obstacle moves."""
    return sum_of_costs(problem, solution) + sum(obstacle_moves(problem, solution))


def cost2(problem: Problem, solution: Solution) -> int:
    """``cost1`` plus the movers' non-wait moves on the way to their obstacle."""
    return cost1(problem, solution) + sum(pre_pickup_moves(problem, solution))


COST_FUNCTIONS = {"soc": sum_of_costs, "cost1": cost1, "cost2": cost2}


def solution_cost(problem: Problem, solution: Solution, cost: str) -> int:
    try:
        fn = COST_FUNCTIONS[cost]
    except KeyError:
        raise MalformedInputError(f"unknown cost function {cost!r}") from None
    return fn(problem, solution)


def paths_to_solution(problem: Problem, paths: Sequence[Sequence[int]]) -> Solution:
    """Join per-entity paths (tasks then movers) into joint states.

    Short paths are padded by waiting on their last vertex.  An assigned
    obstacle stays on its start vertex until its mover first reaches it and
    then travels with the mover.
    """
    if len(paths) != problem.n_entities:
        raise MalformedInputError(f"expected {problem.n_entities} paths, got {len(paths)}")
    k = max((len(p) for p in paths), default=1)
    nt = problem.n_tasks
    obstacles = list(problem.movable_obstacles)
    pickups: dict[int, int] = {}
    for j in range(problem.n_movers):
        home = problem.obstacle_vertex(j)
        path = paths[nt + j]
        pickups[j] = next((t for t, v in enumerate(path) if v == home), None)
    states = []
    for t in range(k):
        pos = [p[t] if t < len(p) else p[-1] for p in paths]
        obs = list(obstacles)
        for j in range(problem.n_movers):
            p = pickups[j]
            if p is not None and t >= p:
                obs[problem.assignment[j]] = pos[nt + j]
        states.append(State(tuple(pos[:nt]), tuple(pos[nt:]), tuple(obs), t))
    return Solution(states)


def entity_paths(problem: Problem, solution: Solution) -> list[list[int]]:
    return ([solution.task_path(i) for i in range(problem.n_tasks)]
            + [solution.mover_path(j) for j in range(problem.n_movers)])


def bfs_path_length(graph: Graph, start: int, goal: int, blocked: Iterable[int] = ()) -> float:
    """Single-agent shortest path length avoiding static and ``blocked`` cells."""
    blocked = set(blocked)
    if start in blocked or goal in blocked:
        return INF
    if not (graph.passable[start] and graph.passable[goal]):
        return INF
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == goal:
            return dist[u]
        for w in graph.neighbors(u):
            if w not in dist and graph.passable[w] and w not in blocked:
                dist[w] = dist[u] + 1
                queue.append(w)
    return INF
