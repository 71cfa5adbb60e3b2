import numpy as np
import pytest

from coalloc.packing import (
    PackingSolution, UnboundedPackingError, packing_lp, solve_packing,
)


def test_single_variable():
    lp = packing_lp([1.0], [[2.0]], [4.0])
    sol = solve_packing(lp, eps=0.2, seed=1)
    assert 2 / 1.2 <= sol.objective_value <= 2 + 1e-9


def test_shared_budget():
    lp = packing_lp([1.0, 1.0], [[1.0, 1.0]], [1.0])
    sol = solve_packing(lp, eps=0.2, seed=1)
    assert 1 / 1.2 <= sol.objective_value <= 1 + 1e-9


def test_feasibility_is_exact():
    rng = np.random.default_rng(5)
    for trial in range(10):
        m, n = 30, 40
        a = (rng.random((m, n)) < 0.2) * rng.random((m, n))
        c = rng.random(n)
        c[a.max(axis=0) == 0] = 0.0
        b = 0.5 + rng.random(m)
        sol = solve_packing(packing_lp(c, a, b), eps=0.3, seed=trial)
        assert (sol.x >= 0).all()
        assert (a @ sol.x <= b * (1 + 1e-12)).all()


def test_deterministic_given_seed():
    rng = np.random.default_rng(9)
    a = (rng.random((20, 25)) < 0.3) * rng.random((20, 25))
    c = rng.random(25)
    c[a.max(axis=0) == 0] = 0.0
    b = 1.0 + rng.random(20)
    lp = packing_lp(c, a, b)
    s1 = solve_packing(lp, eps=0.2, seed=42)
    s2 = solve_packing(lp, eps=0.2, seed=42)
    assert np.array_equal(s1.x, s2.x)
    assert s1.objective_value == s2.objective_value


def test_objective_scaling_equivariance():
    rng = np.random.default_rng(10)
    a = (rng.random((25, 30)) < 0.3) * rng.random((25, 30))
    c = rng.random(30)
    c[a.max(axis=0) == 0] = 0.0
    b = 1.0 + rng.random(25)
    s1 = solve_packing(packing_lp(c, a, b), eps=0.2, seed=7)
    s2 = solve_packing(packing_lp(3.0 * c, a, b), eps=0.2, seed=7)
    assert np.allclose(s2.x, s1.x)
    assert np.isclose(s2.objective_value, 3.0 * s1.objective_value)


def test_unbounded_variable_rejected():
    lp = packing_lp([1.0, 1.0], [[1.0, 0.0]], [1.0])
    with pytest.raises(UnboundedPackingError):
        solve_packing(lp, eps=0.2, seed=0)


def test_zero_objective_trivial():
    lp = packing_lp([0.0, 0.0], [[1.0, 1.0]], [1.0])
    sol = solve_packing(lp, eps=0.2, seed=0)
    assert sol.objective_value == 0.0
    assert (sol.x == 0).all()


def test_bad_data_rejected():
    with pytest.raises(ValueError):
        packing_lp([1.0], [[-1.0]], [1.0])
    with pytest.raises(ValueError):
        packing_lp([1.0], [[1.0]], [0.0])
    with pytest.raises(ValueError):
        solve_packing(packing_lp([1.0], [[1.0]], [1.0]), eps=1.5, seed=0)


def test_ratio_against_float_reference():
    from scipy.optimize import linprog

    rng = np.random.default_rng(77)
    for trial in range(8):
        m = int(rng.integers(20, 80))
        n = int(rng.integers(20, 80))
        a = (rng.random((m, n)) < 0.15) * rng.random((m, n))
        c = rng.random(n)
        c[a.max(axis=0) == 0] = 0.0
        b = 0.5 + rng.random(m)
        if not (c > 0).any():
            continue
        sol = solve_packing(packing_lp(c, a, b), eps=0.2, seed=trial)
        res = linprog(-c, A_ub=a, b_ub=b, bounds=(0, None), method="highs")
        opt = -res.fun
        if opt > 0:
            assert sol.objective_value >= opt / 1.2
