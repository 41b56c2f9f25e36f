import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from tmapf.conflicts import EDGE, VERTEX, Conflict, count_conflicts, detect_conflicts, first_conflict, split
from tmapf.constraints import BODY, OBSTACLE, Constraint, pickup_index
from tmapf.core import Graph, Problem

from helpers import grid_from_rows


def test_disjoint_paths():
    p = Problem(Graph(3, 3), (0, 6), (2, 8))
    assert detect_conflicts(p, [[0, 1, 2], [6, 7, 8]]) == []
    assert first_conflict(p, [[0, 1, 2], [6, 7, 8]]) is None


def test_vertex_conflict():
    p = Problem(Graph(5, 5), (0, 24), (24, 0))
    v = 2 * 5 + 3
    a = [0, 1, 2, 3, v, v]
    b = [24, 23, 22, 21, v, 21]
    cs = detect_conflicts(p, [a, b])
    assert cs == [Conflict(4, 0, 1, VERTEX, v)]


def test_edge_conflict():
    p = Problem(Graph(3, 1), (0, 2), (2, 0))
    assert detect_conflicts(p, [[0, 1, 2], [2, 1, 0]])[0].kind == VERTEX
    p2 = Problem(Graph(2, 1), (0, 1), (1, 0))
    assert detect_conflicts(p2, [[0, 1], [1, 0]]) == [Conflict(1, 0, 1, EDGE, 1, 0)]


def test_padding_by_waiting():
    p = Problem(Graph(3, 1), (0, 2), (1, 2))
    assert count_conflicts(p, [[0, 1], [2, 2, 1]]) == 1


def test_task_vs_parked_obstacle_is_mover_conflict(toy1):
    cs = detect_conflicts(toy1, [[1, 4, 7, 6], [3, 3, 3, 3, 4]])
    assert cs[0] == Conflict(1, 0, 1, VERTEX, 4, None, BODY, OBSTACLE)
    pos, neg = split(toy1, cs[0])
    assert pos == Constraint(1, 0, 4, True) and neg == Constraint(1, 0, 4)


def test_split_prefers_task_agent(toy1):
    c = Conflict(2, 0, 1, VERTEX, 7)
    assert split(toy1, c)[0].entity == 0
    c = Conflict(2, 0, 1, EDGE, 7, 4)
    pos, _ = split(toy1, c)
    assert (pos.entity, pos.prev, pos.vertex) == (0, 4, 7)


def test_carried_obstacle_vs_parked_obstacle():
    g, mov = grid_from_rows(["M.M", "..."])
    p = Problem(g, (), (), (0, 2), tuple(mov), (0, 1))
    # mover 0 carries its obstacle onto the other parked obstacle
    cs = detect_conflicts(p, [[0, 1, 2, 1, 0], [5, 5, 5, 5, 5, 2]])
    assert Conflict(2, 0, 1, VERTEX, 2, None, OBSTACLE, OBSTACLE) in cs
    pos, _ = split(p, Conflict(2, 0, 1, VERTEX, 2, None, OBSTACLE, OBSTACLE))
    assert pos.footprint == OBSTACLE and pos.entity == 0


def _occupancy(problem, paths, e, t):
    """Cells entity ``e`` covers at ``t``: body plus parked obstacle."""
    path = paths[e]
    v = path[min(t, len(path) - 1)]
    cells = {("body", v)}
    if problem.is_mover(e):
        home = problem.obstacle_vertex(problem.mover_of(e))
        p = pickup_index(path, home)
        cells.add(("obs", home if p is None or t < p else v))
    return cells


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_vertex_conflicts_match_pairwise_brute_force(data):
    g, mov = grid_from_rows(["....", ".M..", "...."])
    p = Problem(g, (0, 11), (3, 8), (7,), tuple(mov), (0,))
    paths = []
    for start in (0, 11, 7):
        n = data.draw(st.integers(1, 6))
        path = [start]
        for _ in range(n):
            path.append(data.draw(st.sampled_from((path[-1], *g.neighbors(path[-1])))))
        paths.append(path)
    found = {(c.time, c.a, c.b) for c in detect_conflicts(p, paths) if c.kind == VERTEX}
    horizon = max(map(len, paths))
    expect = set()
    for t in range(horizon):
        for a, b in itertools.combinations(range(3), 2):
            ca, cb = _occupancy(p, paths, a, t), _occupancy(p, paths, b, t)
            bodies = {v for k, v in ca if k == "body"} & {v for k, v in cb if k == "body"}
            # task body vs obstacle
            tb = {v for k, v in ca if k == "body"} & {v for k, v in cb if k == "obs"}
            if bodies or tb:
                expect.add((t, a, b))
    assert found == expect
