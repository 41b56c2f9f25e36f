"""Map, scenario and solution files; warehouse and scenario generation.

Map files follow the MovingAI grid layout with one extra character:

    type octile
    height H
    width W
    map
    <H rows of W characters>

``.`` is free, ``@`` or ``T`` is a static obstacle and ``M`` is a movable
obstacle (a passable vertex holding an obstacle at the start).

Scenario files::

    tmapf-scenario 1
    seed 7
    map small.map            (optional)
    T sx sy gx gy            (one per task agent)
    M sx sy [ox oy]          (one per mover; ox oy = assigned obstacle)

Coordinates are ``x`` = column, ``y`` = row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .core import Graph, MalformedInputError, Problem, Solution, State

MASK64 = (1 << 64) - 1
SCENARIO_HEADER = "tmapf-scenario 1"
SOLUTION_FORMAT = "tmapf-solution"
MOVER_POLICIES = ("under-shelf", "uniform-free")


class ParseError(MalformedInputError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + message)


class ConfigError(ValueError):
    """Invalid generation or benchmark configuration."""


class SplitMix64:
    """The SplitMix64 generator; portable across languages bit for bit."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def bounded(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next()
            if x < limit:
                return x % n

    def coin(self) -> int:
        return self.next() >> 63


# ---------------------------------------------------------------- maps

@dataclass(frozen=True)
class GridMap:
    graph: Graph
    movables: tuple[int, ...]

    @property
    def width(self) -> int:
        return self.graph.width

    @property
    def height(self) -> int:
        return self.graph.height

    def free_cells(self) -> list[int]:
        """Passable cells without a movable obstacle, row-major."""
        mov = set(self.movables)
        return [v for v in range(self.graph.num_vertices) if self.graph.passable[v] and v not in mov]

    def workstation_cells(self) -> list[int]:
        """Free cells on the outer ring of the map."""
        W, H = self.width, self.height
        return [v for v in self.free_cells()
                if v % W in (0, W - 1) or v // W in (0, H - 1)]


def parse_map(text: str) -> GridMap:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if line == "map":
            break
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("type", "height", "width"):
            raise ParseError(f"bad header line {lines[i - 1]!r}", i)
        header[parts[0]] = parts[1]
    else:
        raise ParseError("missing 'map' line", i)
    for key in ("height", "width"):
        if key not in header:
            raise ParseError(f"missing '{key}' header", i)
    try:
        H, W = int(header["height"]), int(header["width"])
    except ValueError:
        raise ParseError("height/width must be integers", i) from None
    if H <= 0 or W <= 0:
        raise ParseError("height/width must be positive", i)
    rows = lines[i:]
    if len(rows) != H:
        raise ParseError(f"expected {H} map rows, found {len(rows)}", i + min(len(rows), H) + 1)
    passable, movables = [], []
    for y, row in enumerate(rows):
        lineno = i + y + 1
        row = row.rstrip("\r")
        if len(row) != W:
            raise ParseError(f"row {y} has {len(row)} cells, expected {W}", lineno)
        for x, ch in enumerate(row):
            if ch == ".":
                passable.append(True)
            elif ch in "@T":
                passable.append(False)
            elif ch == "M":
                passable.append(True)
                movables.append(y * W + x)
            else:
                raise ParseError(f"unknown map character {ch!r}", lineno, x + 1)
    return GridMap(Graph(W, H, passable), tuple(movables))


def emit_map(grid: GridMap) -> str:
    g = grid.graph
    mov = set(grid.movables)
    out = ["type octile", f"height {g.height}", f"width {g.width}", "map"]
    for y in range(g.height):
        row = []
        for x in range(g.width):
            v = y * g.width + x
            row.append("M" if v in mov else ("." if g.passable[v] else "@"))
        out.append("".join(row))
    return "\n".join(out) + "\n"


# ----------------------------------------------------------- scenarios

@dataclass
class Scenario:
    tasks: list[tuple[int, int]]
    movers: list[tuple[int, int | None]]
    seed: int | None = None
    map_name: str | None = None

    def to_problem(self, grid: GridMap) -> Problem:
        """Problem on ``grid``; assigned obstacles become the assignment."""
        obstacles = [o for _, o in self.movers]
        assignment = None
        if self.movers and all(o is not None for o in obstacles):
            index = {w: k for k, w in enumerate(grid.movables)}
            try:
                assignment = tuple(index[o] for o in obstacles)
            except KeyError:
                raise MalformedInputError("a mover is assigned to a cell without a movable obstacle") from None
        elif any(o is not None for o in obstacles):
            raise MalformedInputError("either every mover or none names its obstacle")
        p = Problem(grid.graph, tuple(s for s, _ in self.tasks), tuple(g for _, g in self.tasks),
                    tuple(s for s, _ in self.movers), grid.movables, assignment)
        p.check()
        return p


def parse_scenario(text: str, width: int, height: int) -> Scenario:
    lines = text.split("\n")
    if not lines or lines[0].strip() != SCENARIO_HEADER:
        raise ParseError(f"first line must be {SCENARIO_HEADER!r}", 1)
    sc = Scenario([], [])

    def cell(tok_x: str, tok_y: str, lineno: int) -> int:
        try:
            x, y = int(tok_x), int(tok_y)
        except ValueError:
            raise ParseError("coordinates must be integers", lineno) from None
        if not (0 <= x < width and 0 <= y < height):
            raise ParseError(f"cell ({x},{y}) outside {width}x{height} map", lineno)
        return y * width + x

    for n, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "seed" and len(parts) == 2:
            try:
                sc.seed = int(parts[1])
            except ValueError:
                raise ParseError("seed must be an integer", n) from None
        elif tag == "map" and len(parts) == 2:
            sc.map_name = parts[1]
        elif tag == "T" and len(parts) == 5:
            sc.tasks.append((cell(parts[1], parts[2], n), cell(parts[3], parts[4], n)))
        elif tag == "M" and len(parts) in (3, 5):
            obs = cell(parts[3], parts[4], n) if len(parts) == 5 else None
            sc.movers.append((cell(parts[1], parts[2], n), obs))
        else:
            raise ParseError(f"cannot parse {raw!r}", n)
    return sc


def emit_scenario(sc: Scenario, width: int) -> str:
    def xy(v: int) -> str:
        return f"{v % width} {v // width}"

    out = [SCENARIO_HEADER]
    if sc.seed is not None:
        out.append(f"seed {sc.seed}")
    if sc.map_name:
        out.append(f"map {sc.map_name}")
    out.extend(f"T {xy(s)} {xy(g)}" for s, g in sc.tasks)
    out.extend(f"M {xy(s)}" + ("" if o is None else f" {xy(o)}") for s, o in sc.movers)
    return "\n".join(out) + "\n"


def scenario_from_problem(problem: Problem, seed: int | None = None,
                          map_name: str | None = None) -> Scenario:
    movers = []
    for j, s in enumerate(problem.mover_starts):
        o = problem.obstacle_vertex(j) if problem.assignment is not None else None
        movers.append((s, o))
    return Scenario(list(zip(problem.task_starts, problem.task_goals)), movers, seed, map_name)


# ------------------------------------------------------------ solutions

def _xy(g: Graph, vs: Sequence[int]) -> list[list[int]]:
    return [list(g.xy(v)) for v in vs]


def solution_to_json(problem: Problem, solution: Solution, metadata: dict | None = None) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    g = problem.graph
    doc = {
        "format": SOLUTION_FORMAT,
        "version": 1,
        "width": g.width,
        "height": g.height,
        "assignment": None if problem.assignment is None else list(problem.assignment),
        "metadata": dict(metadata or {}),
        "states": [{"t": s.time, "tasks": _xy(g, s.tasks), "movers": _xy(g, s.movers),
                    "obstacles": _xy(g, s.obstacles)} for s in solution.states],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def solution_from_json(text: str) -> tuple[Solution, dict]:
    """Parse a solution file; returns the solution and the whole document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("format") != SOLUTION_FORMAT:
        raise ParseError("not a tmapf solution document")
    try:
        W, H = int(doc["width"]), int(doc["height"])
        states = []
        for i, s in enumerate(doc["states"]):
            def vids(cells):
                out = []
                for x, y in cells:
                    if not (0 <= x < W and 0 <= y < H):
                        raise ParseError(f"state {i}: cell ({x},{y}) outside the map")
                    out.append(y * W + x)
                return tuple(out)
            states.append(State(vids(s["tasks"]), vids(s["movers"]), vids(s["obstacles"]), int(s["t"])))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed solution document ({exc!r})") from None
    return Solution(states), doc


# ----------------------------------------------------------- generation

@dataclass(frozen=True)
class WarehouseProfile:
    """Shelf rows one cell tall separated by one-cell aisles.

    Each shelf row is cut into ``blocks`` blocks of ``block_length`` cells
    by cross aisles ``cross`` cells wide.  ``margin`` free columns surround
    the shelving on the left and right; the vertical slack is split between
    top and bottom.
    """

    height: int
    width: int
    shelf_rows: int
    blocks: int
    block_length: int
    margin: int = 2
    cross: int = 3

    def check(self) -> None:
        need_w = 2 * self.margin + self.blocks * self.block_length + (self.blocks - 1) * self.cross
        if need_w != self.width:
            raise ConfigError(f"width {self.width} does not fit {self.blocks} blocks of "
                              f"{self.block_length} (needs {need_w})")
        need_h = 2 * self.shelf_rows - 1 + 2
        if self.height < need_h:
            raise ConfigError(f"height {self.height} too small for {self.shelf_rows} shelf rows")
        if min(self.shelf_rows, self.blocks, self.block_length, self.margin, self.cross) < 1:
            raise ConfigError("warehouse dimensions must be positive")


PROFILES = {
    "small": WarehouseProfile(24, 47, 10, 2, 20, 2, 3),
    "large": WarehouseProfile(32, 75, 14, 3, 21, 3, 3),
    "mini": WarehouseProfile(12, 23, 3, 2, 8, 2, 3),
}


def generate_warehouse(profile: str | WarehouseProfile = "small", seed: int = 0,
                       jitter: int = 0) -> GridMap:
    """Warehouse grid with one movable obstacle in the middle of every shelf block.

    With ``jitter > 0`` each movable shifts along its block by a seeded
    offset in ``[-jitter, jitter]``; otherwise the seed has no effect.
    """
    if isinstance(profile, str):
        try:
            prof = PROFILES[profile]
        except KeyError:
            raise ConfigError(f"unknown warehouse profile {profile!r}") from None
    else:
        prof = profile
    prof.check()
    if jitter < 0 or 2 * jitter >= prof.block_length:
        raise ConfigError("jitter must be in [0, block_length / 2)")
    H, W = prof.height, prof.width
    passable = [True] * (H * W)
    movables = []
    rng = SplitMix64(seed)
    top = (H - (2 * prof.shelf_rows - 1)) // 2
    for r in range(prof.shelf_rows):
        y = top + 2 * r
        for b in range(prof.blocks):
            x0 = prof.margin + b * (prof.block_length + prof.cross)
            for x in range(x0, x0 + prof.block_length):
                passable[y * W + x] = False
            mid = x0 + prof.block_length // 2
            if jitter:
                mid += rng.bounded(2 * jitter + 1) - jitter
            movables.append(y * W + mid)
    for w in movables:
        passable[w] = True
    return GridMap(Graph(W, H, passable), tuple(sorted(movables)))


def generate_scenario(grid: GridMap, n_task: int, seed: int, n_movers: int | None = None,
                      mover_start_policy: str = "under-shelf", map_name: str | None = None) -> Scenario:
    """Seeded scenario: uniform task starts, goals split 50/50 between
    workstation cells and uniform free cells, movers per policy.

    Every mover is assigned the movable it was placed next to
    (``under-shelf``) or left unassigned (``uniform-free``).
    """
    if mover_start_policy not in MOVER_POLICIES:
        raise ConfigError(f"unknown mover start policy {mover_start_policy!r}")
    n_mov = len(grid.movables)
    if n_movers is None:
        n_movers = n_mov
    if n_movers != n_mov:
        raise ConfigError(f"map has {n_mov} movable obstacles; need one mover each, got {n_movers}")
    free = grid.free_cells()
    if n_task < 0 or n_task > len(free):
        raise ConfigError(f"cannot place {n_task} task agents on {len(free)} free cells")
    rng = SplitMix64(seed)

    cells = list(free)
    for i in range(n_task):
        j = i + rng.bounded(len(cells) - i)
        cells[i], cells[j] = cells[j], cells[i]
    starts = cells[:n_task]

    ring = grid.workstation_cells()
    goals: list[int] = []
    used: set[int] = set()
    for _ in range(n_task):
        pool = ring if (rng.coin() and ring) else free
        if all(v in used for v in pool):
            pool = free
        while True:
            v = pool[rng.bounded(len(pool))]
            if v not in used:
                break
        used.add(v)
        goals.append(v)

    W = grid.width
    g = grid.graph
    taken = set(starts)
    movers: list[tuple[int, int | None]] = []
    if mover_start_policy == "under-shelf":
        for w in grid.movables:
            x, y = w % W, w // W
            cands = [w] + [y * W + xx for xx in range(max(0, x - 2), min(W, x + 3))
                           if xx != x and not g.passable[y * W + xx]]
            cands = [c for c in cands if c not in taken]
            if not cands:
                raise ConfigError(f"no start cell left near movable at ({x},{y})")
            s = cands[rng.bounded(len(cands))]
            taken.add(s)
            movers.append((s, w))
    else:
        pool = [v for v in free if v not in taken]
        if len(pool) < n_movers:
            raise ConfigError("not enough free cells for mover starts")
        for _ in range(n_movers):
            while True:
                s = pool[rng.bounded(len(pool))]
                if s not in taken:
                    break
            taken.add(s)
            movers.append((s, None))
    return Scenario(list(zip(starts, goals)), movers, seed, map_name)


# --------------------------------------------------- canonical instances

@dataclass
class CanonicalInstance:
    name: str
    grid: GridMap
    scenario: Scenario
    costs: dict = field(default_factory=dict)

    @property
    def problem(self) -> Problem:
        return self.scenario.to_problem(self.grid)


def _data(name: str) -> str:
    return resources.files("tmapf").joinpath("data", name).read_text(encoding="utf-8")


def load_map(path: str) -> GridMap:
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read())


def load_scenario(path: str, grid: GridMap) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), grid.width, grid.height)


def canonical_instances() -> dict[str, CanonicalInstance]:
    """Small hand-made instances with frozen optimal costs."""
    meta = json.loads(_data("canonical.json"))
    out = {}
    for name, entry in sorted(meta.items()):
        grid = parse_map(_data(entry["map"]))
        sc = parse_scenario(_data(entry["scenario"]), grid.width, grid.height)
        out[name] = CanonicalInstance(name, grid, sc, dict(entry.get("costs", {})))
    return out
