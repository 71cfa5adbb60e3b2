import random
from fractions import Fraction as F

import pytest

from coalloc import mps
from coalloc import setcover as sc
from coalloc.games import (
    ExplicitGame, check_monotone, coalition, excess_vector, grand, lex_compare,
    shift_transform,
)


def triangle():
    return sc.game(sc.fixture("triangle"))


def random_monotone(rng, n):
    """Random monotone game: raw draws pushed up along the subset order."""
    c = {}
    for s in range(1, 1 << n):
        best = F(rng.randint(1, 40), rng.choice([1, 2, 3, 4]))
        t = (s - 1) & s
        while t:
            if c[t] > best:
                best = c[t]
            t = (t - 1) & s
        c[s] = best
    return ExplicitGame(n, c)


def test_triangle_nucleolus():
    y, trace = mps.mps_run(triangle())
    assert y == (F(2, 3),) * 3
    assert len(trace) <= 3


def test_triangle_happy():
    g = triangle()
    assert mps.total_value(g, mps.default_family(3), "happy") == F(3, 2)
    y, _ = mps.mps_run(g, mode="happy")
    assert y == (F(1, 2),) * 3


def test_triangle_least_core():
    eps, y = mps.least_core(triangle(), mps.default_family(3))
    assert eps == F(1, 3)
    assert sum(y) == 2


def test_single_player():
    g = ExplicitGame(1, {1: F(7, 2)})
    assert mps.mps_run(g)[0] == (F(7, 2),)
    assert mps.bruteforce_lexi(g) == (F(7, 2),)


def test_happy_total_needs_singletons():
    # without singleton rows the happiness LP has no upper bounds at all
    g = triangle()
    with pytest.raises(mps.InsufficientFamilyError):
        mps.total_value(g, [coalition([0, 1])], "happy")


def test_nine_player_fixture():
    g = sc.game(sc.fixture("three_triangles"))
    fam = mps.default_family(9)
    assert mps.total_value(g, fam, "happy") == F(9, 2)
    y, trace = mps.mps_run(g)
    outer = coalition([0, 1, 2, 6, 7, 8])
    for p in range(9):
        assert y[p] == (F(3, 5) if outer >> p & 1 else F(7, 15))
    assert len(trace) <= 9
    happy, _ = mps.mps_run(g, mode="happy")
    assert happy == (F(1, 2),) * 9
    eps, _ = mps.least_core(g, fam)
    assert eps == F(2, 5)


def test_nine_player_balanced_excess():
    # the nucleolus balances these two coalitions at excess -2/5
    g = sc.game(sc.fixture("three_triangles"))
    y, _ = mps.mps_run(g)
    a = grand(9) & ~1
    b = coalition([0, 1, 6, 7])
    assert g.cost(a) - sum(y[p] for p in range(9) if a >> p & 1) == F(-2, 5)
    assert g.cost(b) - sum(y[p] for p in range(9) if b >> p & 1) == F(-2, 5)


def test_nine_player_not_in_extended_happy_core():
    g = sc.game(sc.fixture("three_triangles"))
    fam = list(mps.default_family(9))
    y, _ = mps.mps_run(g)
    ok, _ = mps.core_membership(g, y, fam, "extended_happy_core")
    assert not ok
    happy, _ = mps.mps_run(g, mode="happy")
    ok, cert = mps.core_membership(g, happy, fam, "happy_core")
    assert ok and cert is None


def test_six_player_fixture():
    inst = sc.fixture("frac_dominated")
    y, _ = mps.mps_run(sc.game(inst), mode="happy")
    for p in range(6):
        assert y[p] == (F(16, 3) if p % 2 else F(14, 3))
    assert mps.mps_run(sc.game(inst))[0] == y
    fn, _ = mps.mps_run(sc.fractional_game(inst))
    assert fn == (F(5),) * 6


def test_cost_sensitivity():
    inst = sc.fixture("frac_dominated")
    base, _ = mps.mps_run(sc.game(inst), mode="happy")
    for cost in (17, 19):
        bumped = sc.with_set_cost(inst, 9, cost)
        y, _ = mps.mps_run(sc.game(bumped), mode="happy")
        assert y != base
        fn, _ = mps.mps_run(sc.fractional_game(bumped))
        if cost == 19:
            assert fn == (F(5),) * 6


def test_core_membership_basic():
    g = triangle()
    fam = list(mps.default_family(3))
    ok, cert = mps.core_membership(g, [F(1, 2)] * 3, fam, "core")
    assert not ok and cert == "total"
    ok, cert = mps.core_membership(g, [F(1), F(1), F(0)], fam, "core")
    assert not ok and cert == coalition([0, 1])


def test_cross_validation_random_games():
    rng = random.Random(20260826)
    for _ in range(40):
        n = rng.randint(2, 5)
        g = random_monotone(rng, n)
        assert check_monotone(g)
        for mode in ("nucleolus", "happy"):
            y, trace = mps.mps_run(g, mode=mode)
            assert y == mps.bruteforce_lexi(g, mode)
            assert len(trace) <= n


def test_stage_minimums_never_decrease():
    rng = random.Random(5)
    for _ in range(20):
        g = random_monotone(rng, rng.randint(2, 5))
        _, trace = mps.mps_run(g)
        xis = [t.xi for t in trace]
        assert xis == sorted(xis)


def test_nucleolus_is_lexicographically_maximal():
    # against random same-total allocations the nucleolus never loses
    rng = random.Random(11)
    g = triangle()
    y, _ = mps.mps_run(g)
    total = sum(y)
    base = excess_vector(g, y)
    for _ in range(30):
        a = F(rng.randint(-4, 8), 3)
        b = F(rng.randint(-4, 8), 3)
        other = (a, b, total - a - b)
        assert lex_compare(base, excess_vector(g, other)) >= 0


def test_shift_equivariance():
    rng = random.Random(99)
    for _ in range(10):
        n = rng.randint(2, 5)
        g = random_monotone(rng, n)
        shifts = [F(rng.randint(-6, 6), 2) for _ in range(n)]
        shifted = shift_transform(g, shifts)
        for mode in ("nucleolus", "happy"):
            y, _ = mps.mps_run(g, mode=mode)
            ys, _ = mps.mps_run(shifted, mode=mode)
            assert ys == tuple(v + s for v, s in zip(y, shifts))


def test_bruteforce_size_guard():
    from coalloc.games import SizeGuardError
    with pytest.raises(SizeGuardError):
        mps.bruteforce_lexi(ExplicitGame(9, {}))
