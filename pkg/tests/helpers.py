import random

from tmapf.core import Graph, MalformedInputError, Problem


def grid_from_rows(rows):
    """Graph plus movable list from '.', '@', 'M' rows."""
    H, W = len(rows), len(rows[0])
    passable, movables = [], []
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            passable.append(ch != "@")
            if ch == "M":
                movables.append(y * W + x)
    return Graph(W, H, passable), movables


def random_problem(rng: random.Random, tmapf: bool):
    """Small random instance (at most 4x4); ``None`` when the draw is unusable."""
    W, H = rng.randint(2, 4), rng.randint(2, 4)
    n = W * H
    passable = [rng.random() > 0.2 for _ in range(n)]
    g = Graph(W, H, passable)
    free = [v for v in range(n) if passable[v]]
    nt = rng.randint(1, 2 if tmapf else 3)
    if len(free) < 2 * nt + (1 if tmapf else 0) + 1:
        return None
    cells = rng.sample(free, len(free))
    if tmapf:
        mo = cells.pop()
        starts = [cells.pop() for _ in range(nt)]
        goals = rng.sample([v for v in free if v != mo], nt)
        ms = rng.choice([v for v in range(n) if v not in starts])
        p = Problem(g, starts, goals, (ms,), (mo,), (0,))
    else:
        starts = [cells.pop() for _ in range(nt)]
        goals = rng.sample(free, nt)
        p = Problem(g, starts, goals)
    try:
        p.check()
    except MalformedInputError:
        return None
    return p
