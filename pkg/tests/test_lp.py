import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distmarket.lp import (
    EQ,
    GE,
    LE,
    Constraint,
    LpProblem,
    LpSolution,
    SolverOptions,
    Status,
    Variable,
    check_kkt,
    solve,
)
from helpers import enumerate_vertices, random_lp

INF = math.inf


def polygon_lp():
    # min -3x - 2y  s.t. x + y <= 4, 0 <= x <= 2, y >= 0
    return LpProblem.from_rows(
        [Variable(0, 2, -3, "x"), Variable(0, INF, -2, "y")],
        [Constraint({0: 1, 1: 1}, LE, 4)],
    )


def test_polygon_vertex_optimum():
    p = polygon_lp()
    # vertices (0,0) (2,0) (2,2) (0,4): objectives 0, -6, -10, -8
    bounded = LpProblem(p.cost, p.matrix, p.relations, p.rhs, p.lower, [2, 4])
    oracle_value, oracle_x = enumerate_vertices(bounded)
    assert oracle_value == pytest.approx(-10)
    sol = solve(p)
    assert sol.status is Status.OPTIMAL
    np.testing.assert_allclose(sol.primal, [2, 2])
    assert sol.objective == pytest.approx(oracle_value, abs=1e-12)
    np.testing.assert_allclose(sol.primal, oracle_x)


def test_single_binding_row_dual():
    p = LpProblem.from_rows([Variable(-INF, INF, 1.0)], [Constraint({0: 1}, GE, 5)])
    sol = solve(p)
    assert sol.status is Status.OPTIMAL
    assert sol.primal[0] == pytest.approx(5)
    assert sol.duals[0] == pytest.approx(1)


def test_empty_feasible_set():
    p = LpProblem.from_rows([Variable(-INF, INF, 0.0)], [Constraint({0: 1}, GE, 2), Constraint({0: 1}, LE, 1)])
    sol = solve(p)
    assert sol.status is Status.INFEASIBLE
    assert sol.infeasibility > SolverOptions().tol_feas


def test_unbounded_ray():
    p = LpProblem.from_rows([Variable(0, INF, -1.0), Variable(0, 1, 0.0)], [Constraint({1: 1}, LE, 1)])
    sol = solve(p)
    assert sol.status is Status.UNBOUNDED
    assert sol.ray[0] > 0
    assert p.cost @ sol.ray < 0


def test_unbounded_without_rows():
    assert solve(LpProblem.from_rows([Variable(0, INF, -1.0)], [])).status is Status.UNBOUNDED


def test_free_variables_and_equalities():
    # min x + y, x - y = 1, x + y >= 3, both free
    p = LpProblem.from_rows(
        [Variable(-INF, INF, 1), Variable(-INF, INF, 1)],
        [Constraint({0: 1, 1: -1}, EQ, 1), Constraint({0: 1, 1: 1}, GE, 3)],
    )
    sol = solve(p)
    assert sol.objective == pytest.approx(3)
    assert check_kkt(p, sol).passed(1e-9)


def test_upper_bound_flip_path():
    # optimum sits on upper bounds only, reached through bound flips
    p = LpProblem.from_rows(
        [Variable(0, 1, -1), Variable(0, 2, -1)],
        [Constraint({0: 1, 1: 1}, LE, 10)],
    )
    sol = solve(p)
    np.testing.assert_allclose(sol.primal, [1, 2])
    assert sol.duals[0] == pytest.approx(0)
    np.testing.assert_allclose(sol.reduced_costs, [-1, -1])


def test_redundant_equality_rows():
    p = LpProblem.from_rows(
        [Variable(0, 5, 1), Variable(0, 5, 2)],
        [Constraint({0: 1, 1: 1}, EQ, 3), Constraint({0: 2, 1: 2}, EQ, 6)],
    )
    sol = solve(p)
    assert sol.objective == pytest.approx(3)
    assert check_kkt(p, sol).passed(1e-9)


def test_iteration_limit_is_not_optimal():
    sol = solve(polygon_lp(), SolverOptions(max_iterations=1))
    assert sol.status is Status.ITERATION_LIMIT
    assert math.isnan(sol.objective)


def test_cycling_example_terminates():
    # Beale's example: cycles under textbook Dantzig pivoting without anti-cycling
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    p = LpProblem(c, A, (LE, LE, LE), [0, 0, 1], [0] * 4, [INF] * 4)
    sol = solve(p, SolverOptions(bland_after=1))
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(-0.05)
    assert check_kkt(p, sol).passed(1e-9)


def test_kkt_on_polygon():
    p = polygon_lp()
    report = check_kkt(p, solve(p))
    for metric in (report.primal_violation, report.dual_violation, report.complementarity, report.duality_gap):
        assert metric <= 1e-9


def test_kkt_detects_primal_perturbation():
    p = polygon_lp()
    sol = solve(p)
    bumped = LpSolution(sol.status, sol.primal + [1e-3, 0], sol.objective, sol.duals, sol.reduced_costs, 0)
    assert check_kkt(p, bumped).primal_violation == pytest.approx(1e-3, rel=1e-6)


def test_kkt_detects_wrong_dual_sign():
    p = polygon_lp()
    sol = solve(p)
    flipped = LpSolution(sol.status, sol.primal, sol.objective, -sol.duals, sol.reduced_costs, 0)
    assert check_kkt(p, flipped).dual_violation > 1


def test_zero_problem_gap():
    p = LpProblem.from_rows([Variable(0, 1, 0.0)], [Constraint({0: 1}, LE, 1)])
    assert check_kkt(p, solve(p)).duality_gap == 0


def test_dual_is_rhs_sensitivity():
    p = polygon_lp()
    y = solve(p).duals[0]
    eps = 1e-6
    bumped = LpProblem(p.cost, p.matrix, p.relations, p.rhs + eps, p.lower, p.upper)
    assert (solve(bumped).objective - solve(p).objective) / eps == pytest.approx(y, rel=1e-6)


def test_deterministic():
    p = random_lp(np.random.default_rng(11))
    a, b = solve(p), solve(p)
    assert a.status == b.status
    assert np.array_equal(a.primal, b.primal)
    assert np.array_equal(a.duals, b.duals)


def test_debug_log(tmp_path):
    path = tmp_path / "pivots.txt"
    solve(polygon_lp(), SolverOptions(debug_path=str(path)))
    assert "enter=" in path.read_text()


def test_problem_validation():
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], (LE,), [1.0], [2.0], [1.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[math.nan]], (LE,), [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], ("<",), [1.0], [0.0], [1.0])


def test_dict_round_trip():
    p = polygon_lp()
    q = LpProblem.from_dict(p.to_dict())
    assert np.array_equal(q.matrix, p.matrix)
    assert np.array_equal(q.upper, p.upper)
    assert q.var_names == ("x", "y")


@pytest.mark.parametrize("seed", range(5))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    for _ in range(40):
        p = random_lp(rng)
        sol = solve(p)
        oracle = enumerate_vertices(p)
        if oracle is None:
            assert sol.status is Status.INFEASIBLE
        else:
            assert sol.status is Status.OPTIMAL
            assert sol.objective == pytest.approx(oracle[0], abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_optimal_solutions_pass_kkt(seed):
    p = random_lp(np.random.default_rng(seed))
    sol = solve(p)
    if sol.status is Status.OPTIMAL:
        r = check_kkt(p, sol)
        assert r.primal_violation <= 1e-9
        assert r.dual_violation <= 1e-9
        assert r.complementarity <= 1e-8
        assert r.duality_gap <= 1e-9 * (1 + abs(sol.objective))
