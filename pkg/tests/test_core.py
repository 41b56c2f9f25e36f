import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import grid_from_rows
from tmapf.core import (Graph, MalformedInputError, Problem, Solution, State, UnsettledError,
                        bfs_path_length, cost1, cost2, cost_task_agent, paths_to_solution,
                        pre_pickup_moves, sum_of_costs, validate_state, validate_transition)


def toy1_problem():
    g, mov = grid_from_rows(["...", "@M@", "..."])
    return Problem(g, (1,), (6,), (3,), tuple(mov), (0,))


def toy1_witness():
    # mover picks up at t1, carries the obstacle out and back; task waits once
    return paths_to_solution(toy1_problem(), [[1, 1, 4, 7, 6], [3, 4, 7, 8, 7, 4]])


def test_graph_ids_and_neighbors():
    g = Graph(3, 2)
    assert g.num_vertices == 6
    assert g.vid(2, 1) == 5 and g.xy(5) == (2, 1)
    assert g.neighbors(4) == (1, 3, 5)
    assert g.has_edge(4, 4) and g.has_edge(4, 1) and not g.has_edge(0, 4)
    with pytest.raises(MalformedInputError):
        g.vid(3, 0)


def test_graph_distances_static_flag():
    g, _ = grid_from_rows(["...", "@@.", "..."])
    assert g.distances(6)[0] == 6
    assert g.distances(6, through_static=True)[0] == 2


def test_problem_check_rejects_bad_instances():
    g, mov = grid_from_rows(["...", "@M@", "..."])
    with pytest.raises(MalformedInputError):
        Problem(g, (1,), (4,), (3,), tuple(mov)).check()  # goal on movable
    with pytest.raises(MalformedInputError):
        Problem(g, (1,), (6,), (), tuple(mov)).check()  # movers != movables
    with pytest.raises(MalformedInputError):
        Problem(g, (1, 1), (6, 7)).check()
    with pytest.raises(MalformedInputError):
        Problem(g, (1,), (6,), (1,), tuple(mov)).check()
    with pytest.raises(MalformedInputError):
        Problem(g, (1,), (6,), (3,), tuple(mov), (1,)).check()
    toy1_problem().check()


def test_static_version_freezes_movables():
    p = toy1_problem().static_version()
    assert p.n_movers == 0 and p.movable_obstacles == ()
    assert not p.graph.passable[4]


def test_state_rules():
    p = toy1_problem()
    assert validate_state(p, p.start_state()).ok
    rep = validate_state(p, State((4,), (3,), (4,)))
    assert rep.rules() == {"S3'"}
    rep = validate_state(p, State((3,), (3,), (4,)))
    assert rep.rules() == {"S1", "S3'"}
    rep = validate_state(p, State((0,), (3,), (3,)))
    assert rep.rules() == {"S2"}
    # a mover under an obstacle is fine
    assert validate_state(p, State((0,), (4,), (4,))).ok


def test_two_obstacles_on_one_vertex():
    g, mov = grid_from_rows(["M.M"])
    p = Problem(g, (), (), (1, 0), tuple(mov), (0, 1))
    assert validate_state(p, State((), (1, 0), (1, 1))).rules() == {"S2"}


def test_transition_rules():
    p = toy1_problem()
    a = State((0,), (3,), (4,), 0)
    assert validate_transition(p, a, State((2,), (3,), (4,), 1)).rules() == {"T1'"}
    # obstacle moves without its mover
    assert validate_transition(p, a, State((0,), (3,), (7,), 1)).rules() == {"T3'"}
    # carried move is fine
    b = State((0,), (4,), (4,), 0)
    assert validate_transition(p, b, State((0,), (7,), (7,), 1)).ok


def test_swap_needs_real_movement():
    g = Graph(2, 1)
    p = Problem(g, (0, 1), (1, 0))
    rep = validate_transition(p, State((0, 1)), State((1, 0), time=1), "mapf")
    assert rep.rules() == {"T2'"}
    # a mover and its carried obstacle share a vertex and move together; no swap
    g2, mov = grid_from_rows(["M."])
    q = Problem(g2, (), (), (0,), tuple(mov), (0,))
    assert validate_transition(q, State((), (0,), (0,)), State((), (1,), (1,), 1)).ok


def test_mode_checks():
    p = toy1_problem()
    with pytest.raises(MalformedInputError):
        validate_state(p, p.start_state(), "mapf")
    with pytest.raises(MalformedInputError):
        validate_state(p, p.start_state(), "other")
    with pytest.raises(MalformedInputError):
        validate_state(p, State((0, 1), (3,), (4,)))


def test_task_cost_is_settle_time():
    g = Graph(3, 1)
    p = Problem(g, (0,), (2,))
    sol = Solution([State((v,), time=t) for t, v in enumerate([0, 1, 2, 1, 2, 2])])
    assert cost_task_agent(p, sol, 0) == 4
    with pytest.raises(UnsettledError):
        cost_task_agent(p, Solution([State((0,)), State((1,), time=1)]), 0)


def test_toy1_witness_costs():
    p, sol = toy1_problem(), toy1_witness()
    assert all(validate_state(p, s).ok for s in sol.states)
    assert all(validate_transition(p, a, b).ok for a, b in zip(sol.states, sol.states[1:]))
    assert sum_of_costs(p, sol) == 4
    assert cost1(p, sol) == 8
    assert cost2(p, sol) == 9
    assert pre_pickup_moves(p, sol) == [1]


def test_idle_movers_cost_equals_soc():
    g, mov = grid_from_rows(["....", ".M..", "...."])
    p = Problem(g, (0,), (3,), (5,), tuple(mov), (0,))
    sol = paths_to_solution(p, [[0, 1, 2, 3], [5]])
    assert cost1(p, sol) == cost2(p, sol) == sum_of_costs(p, sol) == 3


def _insert_wait(path, t):
    return path[:t + 1] + [path[t]] + path[t + 1:]


@given(st.integers(0, 0))
def test_wait_in_pre_pickup_keeps_costs(_):
    p = toy1_problem()
    base = toy1_witness()
    paths = [[1, 1, 1, 4, 7, 6], _insert_wait([3, 4, 7, 8, 7, 4], 0)]
    sol = paths_to_solution(p, paths)
    assert cost1(p, sol) - sum_of_costs(p, sol) == cost1(p, base) - sum_of_costs(p, base)
    assert pre_pickup_moves(p, sol) == pre_pickup_moves(p, base)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_task_wait_adds_one(data):
    g = Graph(4, 1)
    p = Problem(g, (0,), (3,))
    path = [0, 1, 2, 3]
    t = data.draw(st.integers(0, 2))
    longer = _insert_wait(path, t)
    a = cost_task_agent(p, Solution([State((v,), time=i) for i, v in enumerate(path)]), 0)
    b = cost_task_agent(p, Solution([State((v,), time=i) for i, v in enumerate(longer)]), 0)
    assert b == a + 1


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_tmapf_rules_reduce_to_mapf(data):
    W, H = data.draw(st.integers(1, 3)), data.draw(st.integers(1, 3))
    n = W * H
    passable = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    g = Graph(W, H, passable)
    k = data.draw(st.integers(1, 3))
    p = Problem(g, (0,) * k, (0,) * k)
    a = State(tuple(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k))))
    b = State(tuple(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k))), time=1)
    assert validate_state(p, a, "mapf").violations == validate_state(p, a, "tmapf").violations
    assert (validate_transition(p, a, b, "mapf").violations
            == validate_transition(p, a, b, "tmapf").violations)


def test_bfs_path_length():
    g, _ = grid_from_rows(["...", "@@.", "..."])
    assert bfs_path_length(g, 0, 6) == 6
    assert bfs_path_length(g, 0, 6, blocked={5}) == float("inf")
