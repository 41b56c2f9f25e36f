import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmapf.constraints import Constraint, build_table
from tmapf.core import Graph, MalformedInputError, Problem
from tmapf.lowlevel import (Deadline, SearchTimeout, entity_cost, eta_lower_bound, mover_lowlevel,
                            path_consistent, spacetime_astar)

from helpers import grid_from_rows


def _row_table(cs=(), horizon=None):
    p = Problem(Graph(3, 1), (0,), (2,))
    return p, build_table(p, cs, 0, horizon=horizon)


def test_straight_line():
    p, t = _row_table()
    assert spacetime_astar(p.graph, 0, 2, t) == [0, 1, 2]


def test_negative_forces_wait():
    p, t = _row_table([Constraint(1, 0, 1)])
    path = spacetime_astar(p.graph, 0, 2, t)
    assert len(path) - 1 == 3 and path[1] == 0


def test_walled_goal_is_infeasible():
    g, _ = grid_from_rows([".@."])
    t = build_table(Problem(g, (0,), (2,)), (), 0)
    assert spacetime_astar(g, 0, 2, t) is None


def test_start_hard_blocked_is_malformed():
    g, _ = grid_from_rows(["@.."])
    t = build_table(Problem(g, (1,), (2,)), (), 0)
    with pytest.raises(MalformedInputError):
        spacetime_astar(g, 0, 2, t)


def test_goal_blocked_later_means_settle_after():
    p, t = _row_table([Constraint(6, 0, 2)], horizon=12)
    path = spacetime_astar(p.graph, 0, 2, t)
    assert len(path) - 1 == 7
    assert path[6] != 2


def test_landmark_visited_on_time():
    g = Graph(3, 3)
    p = Problem(g, (0,), (2,))
    t = build_table(p, [Constraint(3, 0, 7, positive=True)], 0)
    path = spacetime_astar(g, 0, 2, t)
    assert path[3] == 7
    assert len(path) - 1 == 3 + 3


def test_deadline_raises():
    d = Deadline(0.0)
    with pytest.raises(SearchTimeout):
        d.check()


def _dijkstra_arrival(g, start, goal, negs, T):
    """Earliest t with goal reachable at t and free at every later step up to T."""
    frontier = {start} if (start, 0) not in negs else set()
    layers = [frontier]
    for t in range(1, T + 1):
        nxt = {w for v in frontier for w in (v, *g.neighbors(v)) if g.passable[w] and (w, t) not in negs}
        layers.append(nxt)
        frontier = nxt
    for t, layer in enumerate(layers):
        if goal in layer and all((goal, u) not in negs for u in range(t, T + 1)):
            return t
    return None


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_astar_matches_time_expanded_dijkstra(data):
    W, H = data.draw(st.integers(1, 4)), data.draw(st.integers(1, 4))
    n = W * H
    passable = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    start, goal = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
    passable[start] = passable[goal] = True
    g = Graph(W, H, passable)
    negs = set(data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, 10)), max_size=12)))
    negs.discard((start, 0))
    p = Problem(g, (start,), (goal,))
    cs = [Constraint(t, 0, v) for v, t in sorted(negs)]
    table = build_table(p, cs, 0, horizon=20)
    path = spacetime_astar(g, start, goal, table)
    expect = _dijkstra_arrival(g, start, goal, negs, 20)
    if expect is None:
        assert path is None
        return
    assert path is not None and len(path) - 1 == expect
    # re-check against the raw constraint list
    for t, v in enumerate(path):
        assert (v, t) not in negs and g.passable[v]
        if t:
            assert g.has_edge(path[t - 1], v)
    assert path[-1] == goal
    assert path_consistent(p, 0, path, table)


def test_mover_adjacent_unconstrained(toy1):
    plan = mover_lowlevel(toy1, 0, build_table(toy1, (), 1))
    assert plan.path == [3, 4]
    assert (plan.pickup, plan.free_moves, plan.carried_moves) == (1, 1, 0)
    assert entity_cost(toy1, 1, plan.path, "cost2") == 1
    assert entity_cost(toy1, 1, plan.path, "cost1") == 0


def test_mover_forced_off_home(toy1):
    # picked up at t1, then the mover must leave its home for 5..7
    cs = [Constraint(1, 1, 4, positive=True)] + [Constraint(t, 1, 4) for t in (5, 6, 7)]
    table = build_table(toy1, cs, 1)
    plan = mover_lowlevel(toy1, 0, table, "cost1")
    assert plan.carried_moves == 2
    assert all(plan.path[t] != 4 for t in (5, 6, 7))
    assert plan.path[-1] == 4
    assert path_consistent(toy1, 1, plan.path, table)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0, 1, 2, 4, 6, 7, 8]), st.integers(0, 8)), max_size=8),
       st.sampled_from(["cost1", "cost2"]))
def test_mover_never_carries_onto_static(negs, cost):
    g, mov = grid_from_rows(["...", "@M@", "..."])
    p = Problem(g, (1,), (6,), (3,), tuple(mov), (0,))
    table = build_table(p, [Constraint(t, 1, v) for v, t in negs], 1)
    plan = mover_lowlevel(p, 0, table, cost)
    if plan is None:
        return
    assert all(g.passable[v] for v in plan.path[plan.pickup:])
    assert all((v, t) not in set(negs) for t, v in enumerate(plan.path))
    assert path_consistent(p, 1, plan.path, table)


def test_eta_examples(toy1, toy4):
    assert eta_lower_bound(toy4, 0, build_table(toy4, (), 1)) == 0
    assert eta_lower_bound(toy1, 0, build_table(toy1, (), 1)) == 1
    cs = [Constraint(1, 1, 4), Constraint(2, 1, 4)]
    assert eta_lower_bound(toy1, 0, build_table(toy1, cs, 1)) == 3


def test_eta_unreachable_is_inf():
    g, mov = grid_from_rows(["M.", ".."])
    p = Problem(g, (), (), (3,), tuple(mov), (0,))
    cs = [Constraint(t, 0, 0) for t in range(60)]
    assert eta_lower_bound(p, 0, build_table(p, cs, 0, horizon=80)) == 60
    # beyond the horizon the bound is infinite
    assert eta_lower_bound(p, 0, build_table(p, cs, 0)) == float("inf")
    table = build_table(p, (), 0, horizon=80)
    table.body_forever[0] = 0
    assert eta_lower_bound(p, 0, table) == float("inf")


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0, 1, 2, 3, 4, 6, 7, 8]), st.integers(0, 6)),
                min_size=1, max_size=8))
def test_eta_monotone_in_constraints(negs):
    g, mov = grid_from_rows(["...", ".M.", "..."])
    p = Problem(g, (), (), (8,), tuple(mov), (0,))
    prev = 0
    cs = []
    for v, t in negs:
        cs.append(Constraint(t, 0, v))
        eta = eta_lower_bound(p, 0, build_table(p, cs, 0))
        assert eta >= prev
        prev = eta
