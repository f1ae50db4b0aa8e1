from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from revealed_persuasion.farkas import (
    DUAL,
    EQ,
    LE,
    PRIMAL,
    Certificate,
    FeasibilitySystem,
    SystemBuilder,
    decide,
    replay,
    solve_lp,
)


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), F(0))


def test_small_optimum():
    # max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
    res = solve_lp([3, 2], A_ub=[[1, 1], [1, 3], [1, 0]], b_ub=[4, 6, 3])
    assert res.status == "optimal"
    assert res.x == (3, 1) and res.value == 11
    assert res.y_ub == (2, 0, 1)


def test_equality_with_negative_rhs():
    res = solve_lp([-1, -1], A_eq=[[-1, 2]], b_eq=[-2])
    assert res.status == "optimal" and res.x == (2, 0) and res.value == -2


def test_unbounded():
    assert solve_lp([1, 0], A_ub=[[-1, 1]], b_ub=[1]).status == "unbounded"


def test_infeasible_ray_separates():
    A_eq, b_eq = [[1, 1]], [1]
    A_ub, b_ub = [[-1, 0], [0, -1]], [-1, -1]
    res = solve_lp([0, 0], A_eq, b_eq, A_ub, b_ub)
    assert res.status == "infeasible"
    w = list(res.farkas_eq) + list(res.farkas_ub)
    rows = [list(r) for r in A_eq] + [list(r) for r in A_ub]
    for j in range(2):
        assert dot([r[j] for r in rows], w) >= 0
    assert all(v >= 0 for v in res.farkas_ub)  # slack columns
    assert dot(b_eq + b_ub, w) < 0


def test_degenerate_cycle_prone_lp_terminates():
    # Beale's classic cycling example under the textbook rule
    c = [F(3, 4), -150, F(1, 50), -6]
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    res = solve_lp(c, A_ub=A, b_ub=[0, 0, 1])
    assert res.status == "optimal" and res.value == F(1, 20)
    assert res.pivots < 50


lp_entries = st.integers(-5, 5)


@settings(max_examples=80, deadline=None)
@given(
    st.integers(2, 4).flatmap(
        lambda n: st.tuples(
            st.lists(lp_entries, min_size=n, max_size=n),
            st.lists(st.lists(lp_entries, min_size=n, max_size=n), min_size=1, max_size=3),
            st.lists(st.integers(0, 6), min_size=3, max_size=3),
            st.lists(st.lists(lp_entries, min_size=n, max_size=n), min_size=0, max_size=1),
        )
    )
)
def test_agrees_with_scipy(problem):
    c, A_ub, b_ub, A_eq = problem
    b_ub = b_ub[: len(A_ub)]
    b_eq = [1] * len(A_eq)
    res = solve_lp(c, A_eq, b_eq, A_ub, b_ub)
    ref = linprog(
        -np.array(c, float),
        A_ub=np.array(A_ub, float),
        b_ub=np.array(b_ub, float),
        A_eq=np.array(A_eq, float) if A_eq else None,
        b_eq=np.array(b_eq, float) if A_eq else None,
        method="highs",
    )
    expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert res.status == expected
    if expected == "optimal":
        assert float(res.value) == pytest.approx(-ref.fun, abs=1e-9)
        # exact strong duality and dual feasibility
        assert dot(b_eq, res.y_eq) + dot(b_ub, res.y_ub) == res.value
        assert all(v >= 0 for v in res.y_ub)
        for j in range(len(c)):
            col = [r[j] for r in A_eq] + [r[j] for r in A_ub]
            assert dot(col, list(res.y_eq) + list(res.y_ub)) >= c[j]


def toy_system(objective):
    b = SystemBuilder()
    for label, cost in zip(("p", "q", "r"), objective):
        b.add_column(label, F(cost))
    b.set("bal", "p", F(1))
    b.set("bal", "q", F(-1))
    b.add_row("cap", LE)
    b.set("cap", "r", F(1))
    b.set("cap", "p", F(-1))
    return b.build()


def test_decide_primal_and_dual():
    cert = decide(toy_system([-1, 0, 0]))
    assert cert.kind == PRIMAL and replay(toy_system([-1, 0, 0]), cert)
    system = toy_system([1, 1, 0])
    cert = decide(system)
    assert cert.kind == DUAL and replay(system, cert)


def test_decide_when_only_origin_is_feasible():
    system = FeasibilitySystem(((F(1), F(1)),), (EQ,), (F(-1), F(0)), ("r",), ("x", "y"))
    cert = decide(system)
    assert cert.kind == DUAL and replay(system, cert)


def test_replay_rejects_tampering():
    system = toy_system([1, 1, 0])
    cert = decide(system)
    bad = Certificate(DUAL, dual=tuple(v + 5 for v in cert.dual))
    assert not replay(system, bad)
    primal = decide(toy_system([-1, 0, 0]))
    assert not replay(toy_system([-1, 0, 0]), Certificate(PRIMAL, primal=(F(1), F(0), F(0))))
    assert not replay(toy_system([-1, 0, 0]), Certificate(PRIMAL, primal=primal.primal[:-1]))
    assert not replay(system, Certificate("other"))


def test_certificate_round_trip():
    for system in (toy_system([1, 1, 0]), toy_system([-1, 0, 0])):
        cert = decide(system)
        assert Certificate.from_dict(cert.to_dict()) == cert
    with pytest.raises(ValueError):
        Certificate.from_dict({"kind": "nope"})


def test_system_shape_checks():
    with pytest.raises(ValueError):
        FeasibilitySystem(((F(1),),), (EQ,), (F(0), F(0)), ("r",), ("x", "y"))
    with pytest.raises(ValueError):
        FeasibilitySystem(((F(1),),), ("ge",), (F(0),), ("r",), ("x",))
    b = SystemBuilder()
    b.add_column("x")
    with pytest.raises(ValueError):
        b.add_column("x")


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=3),
    st.lists(st.integers(-3, 3), min_size=4, max_size=4),
    st.lists(st.booleans(), min_size=3, max_size=3),
)
def test_decide_always_returns_a_replayable_certificate(matrix, objective, le_rows):
    kinds = tuple(LE if flag else EQ for flag in le_rows[: len(matrix)])
    system = FeasibilitySystem(
        tuple(tuple(F(v) for v in row) for row in matrix),
        kinds,
        tuple(F(v) for v in objective),
        tuple(range(len(matrix))),
        tuple("abcd"),
    )
    assert replay(system, decide(system))
