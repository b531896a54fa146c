import itertools
import random
import time
from fractions import Fraction

import pytest

from qnnilp.ilp import IlpModel, Rel, check_assignment, normalize
from qnnilp.simplex import feasible_point
from qnnilp.solver import Status, solve

F = Fraction


def test_trivially_infeasible():
    m = IlpModel()
    x = m.add_var("x", 0, 5)
    m.add_constraint([(1, x)], Rel.GE, 3)
    m.add_constraint([(1, x)], Rel.LE, 2)
    assert solve(normalize(m)).status is Status.INFEASIBLE


def test_equality_solution():
    m = IlpModel()
    x = m.add_var("x", 0, 5)
    m.add_constraint([(2, x)], Rel.EQ, 4)
    res = solve(normalize(m))
    assert res.feasible and res.assignment == {x: 2}


def test_integrality_gap_is_closed():
    # 2x + 2y = 3 has rational but no integer solutions
    m = IlpModel()
    x, y = m.add_var("x", 0, 3), m.add_var("y", 0, 3)
    m.add_constraint([(2, x), (2, y)], Rel.EQ, 3)
    res = solve(normalize(m))
    assert res.status is Status.INFEASIBLE and res.stats.nodes >= 1


def test_expired_deadline_times_out():
    m = IlpModel()
    m.add_var("x", 0, 1)
    assert solve(m, deadline=time.monotonic() - 1).status is Status.TIMEOUT


def _random_model(rng):
    m = IlpModel()
    n = rng.randint(1, 4)
    for k in range(n):
        if rng.random() < 0.4:
            m.add_bool(f"b{k}")
        else:
            lo = rng.randint(-4, 2)
            m.add_var(f"x{k}", lo, lo + rng.randint(0, 5))
    for _ in range(rng.randint(1, 5)):
        vs = rng.sample(range(n), rng.randint(1, n))
        terms = [(F(rng.randint(-7, 7), rng.choice((1, 2, 3, 16))), v) for v in vs]
        rel = rng.choice((Rel.LE, Rel.LT, Rel.GE, Rel.EQ, Rel.LE))
        m.add_constraint(terms, rel, F(rng.randint(-10, 10), rng.choice((1, 2, 4))))
    if rng.random() < 0.3:
        vs = rng.sample(range(n), rng.randint(1, n))
        m.add_quadratic([(v, rng.randint(-2, 2)) for v in vs], rng.randint(0, 9))
    return m


def _enumerate(model):
    for point in itertools.product(*(range(v.lower, v.upper + 1) for v in model.variables)):
        ok = all(
            {
                Rel.LE: lambda a, b: a <= b,
                Rel.LT: lambda a, b: a < b,
                Rel.EQ: lambda a, b: a == b,
                Rel.GE: lambda a, b: a >= b,
            }[c.rel](sum(k * point[v] for k, v in c.terms), c.rhs)
            for c in model.constraints
        ) and all(sum((point[v] - c) ** 2 for v, c in q.square_terms) <= q.bound for q in model.quadratics)
        if ok:
            return True
    return False


def test_solver_agrees_with_enumeration():
    rng = random.Random(2024)
    counts = {True: 0, False: 0}
    for _ in range(1500):
        m = _random_model(rng)
        res = solve(normalize(m))
        expected = _enumerate(m)
        counts[expected] += 1
        assert res.feasible == expected
        if res.feasible:
            assert check_assignment(m, res.assignment)
    # both outcomes are exercised
    assert min(counts.values()) > 100


def test_solver_lazy_quadratic_forces_resplit():
    # the LP optimum sits at a box corner outside the disc; integers inside exist only near the centre
    m = IlpModel()
    x, y = m.add_var("x", -6, 6), m.add_var("y", -6, 6)
    m.add_constraint([(1, x), (1, y)], Rel.GE, 3)
    m.add_quadratic([(x, 0), (y, 0)], 5)
    res = solve(normalize(m))
    assert res.feasible and check_assignment(m, res.assignment)
    m.add_constraint([(1, x), (1, y)], Rel.GE, 4)
    assert solve(normalize(m)).status is Status.INFEASIBLE


def _lp_rows(rng, n):
    rows = []
    for _ in range(rng.randint(1, 5)):
        coefs = {j: rng.randint(-5, 5) for j in rng.sample(range(n), rng.randint(1, n))}
        rows.append((coefs, rng.randint(-10, 10), rng.random() < 0.25))
    return rows


def test_simplex_agrees_with_scipy():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = random.Random(8)
    for _ in range(600):
        n = rng.randint(1, 5)
        upper = [rng.randint(0, 6) for _ in range(n)]
        rows = _lp_rows(rng, n)
        point = feasible_point(rows, upper)
        A_ub = [[c.get(j, 0) for j in range(n)] for c, _, eq in rows if not eq]
        b_ub = [r for _, r, eq in rows if not eq]
        A_eq = [[c.get(j, 0) for j in range(n)] for c, _, eq in rows if eq]
        b_eq = [r for _, r, eq in rows if eq]
        ref = linprog(
            [0] * n,
            A_ub=A_ub or None,
            b_ub=b_ub or None,
            A_eq=A_eq or None,
            b_eq=b_eq or None,
            bounds=[(0, u) for u in upper],
            method="highs",
        )
        assert (point is not None) == (ref.status == 0)
        if point is not None:
            assert all(0 <= x <= u for x, u in zip(point, upper))
            for coefs, rhs, eq in rows:
                lhs = sum(c * point[j] for j, c in coefs.items())
                assert lhs == rhs if eq else lhs <= rhs
