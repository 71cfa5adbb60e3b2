import random
from fractions import Fraction as F

import pytest

from coalloc import pcc
from coalloc.games import ExplicitGame, coalition, grand, members


def additive(n):
    return ExplicitGame(n, {1 << p: F(1) for p in range(n)})


def random_monotone(rng, n):
    c = {}
    for s in range(1, 1 << n):
        best = F(rng.randint(0, 30), rng.choice([1, 2, 3]))
        t = (s - 1) & s
        while t:
            if c[t] > best:
                best = c[t]
            t = (t - 1) & s
        c[s] = best
    return ExplicitGame(n, c)


def random_prizes(rng, n):
    return pcc.prize_vector([F(rng.randint(0, 12), rng.choice([1, 2]))
                             for _ in range(n)])


def random_proper_subspace(rng, n):
    while True:
        gens = [rng.randrange(1, 1 << n) for _ in range(rng.randint(0, n - 1))]
        l = pcc.subspace(n, gens)
        if l.is_proper():
            return l


def test_bruteforce_big_prizes_takes_everyone():
    n = 5
    sol = pcc.bruteforce_pcc(additive(n), [F(2)] * n)
    assert sol.coalition == grand(n)
    assert sol.objective([F(2)] * n) == n


def test_bruteforce_zero_prizes_takes_nobody():
    sol = pcc.bruteforce_pcc(additive(5), [F(0)] * 5)
    assert sol.coalition == 0
    assert sol.objective([F(0)] * 5) == 0


def test_bruteforce_against_double_loop():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(2, 6)
        g = random_monotone(rng, n)
        pi = random_prizes(rng, n)
        l = random_proper_subspace(rng, n)
        sol = pcc.bruteforce_pcc(g, pi, l)
        best = min(g.cost(s) + sum(pi[p] for p in range(n) if not s >> p & 1)
                   for s in range(1 << n) if not l.contains(s))
        assert sol.objective(pi) == best
        assert not l.contains(sol.coalition)


def test_restricted_no_restriction_is_plain_call():
    rng = random.Random(4)
    g = random_monotone(rng, 5)
    pi = random_prizes(rng, 5)
    plain = pcc.bruteforce_pcc(g, pi)
    sol = pcc.restricted_pcc(pcc.exact_oracle(), g, pi, 0, 0)
    assert sol.objective(pi) == plain.objective(pi)


def test_restricted_matches_restricted_enumeration():
    rng = random.Random(8)
    oracle = pcc.exact_oracle()
    for _ in range(30):
        n = rng.randint(2, 6)
        g = random_monotone(rng, n)
        pi = random_prizes(rng, n)
        a = rng.randrange(1 << n)
        b = rng.randrange(1 << n) & ~a
        sol = pcc.restricted_pcc(oracle, g, pi, a, b)
        assert a & ~sol.coalition == 0 and sol.coalition & b == 0
        assert sol.cost_estimate >= g.cost(sol.coalition)
        best = min(g.cost(s) + sum(pi[p] for p in range(n) if not s >> p & 1)
                   for s in range(1 << n) if a & ~s == 0 and s & b == 0)
        assert sol.objective(pi) <= best


def test_restricted_fully_pinned():
    g = additive(4)
    pi = [F(1)] * 4
    a = coalition([1, 3])
    sol = pcc.restricted_pcc(pcc.exact_oracle(), g, pi, a, grand(4) & ~a)
    assert sol.coalition == a
    assert sol.cost_estimate >= g.cost(a)


def test_restricted_rejects_overlap():
    with pytest.raises(ValueError):
        pcc.restricted_pcc(pcc.exact_oracle(), additive(3), [F(1)] * 3, 1, 1)


def test_trivial_subspace_reduces_to_plain():
    rng = random.Random(12)
    g = random_monotone(rng, 5)
    pi = random_prizes(rng, 5)
    l = pcc.subspace(5, [])
    sol = pcc.subspace_avoiding_pcc(pcc.exact_oracle(), g, pi, l, F(1, 2))
    best = min(g.cost(s) + sum(pi[p] for p in range(5) if not s >> p & 1)
               for s in range(1, 1 << 5))
    assert sol.objective(pi) == best
    assert sol.coalition != 0


def test_avoidance_guarantee_random():
    rng = random.Random(20260826)
    oracle = pcc.exact_oracle()
    for _ in range(60):
        n = rng.randint(2, 7)
        g = random_monotone(rng, n)
        pi = random_prizes(rng, n)
        l = random_proper_subspace(rng, n)
        sol = pcc.subspace_avoiding_pcc(oracle, g, pi, l, F(1, 2))
        assert not l.contains(sol.coalition)
        assert sol.cost_estimate >= g.cost(sol.coalition)
        opt = pcc.bruteforce_pcc(g, pi, l).objective(pi)
        assert sol.objective(pi) <= F(3, 2) * opt


def test_avoidance_engineered_escape():
    # optimum without the subspace constraint is {0,1,2}; the subspace
    # contains it, and dropping the cheap player 2 escapes
    n = 4
    c = {}
    for s in range(1, 1 << n):
        base = F(len(members(s)))
        c[s] = base
    star = coalition([0, 1, 2])
    c[star] = F(1, 2)
    c[grand(n)] = F(4)
    g = ExplicitGame(n, c)
    pi = pcc.prize_vector([F(3), F(3), F(1, 4), F(0)])
    l = pcc.subspace(n, [star])
    assert l.contains(star)
    sol = pcc.subspace_avoiding_pcc(pcc.exact_oracle(), g, pi, l, F(1, 2))
    assert not l.contains(sol.coalition)
    opt_free = pcc.bruteforce_pcc(g, pi)
    assert opt_free.coalition == star
    # dropping player 2 from the optimum is within the eps slack
    assert sol.objective(pi) <= F(3, 2) * opt_free.objective(pi)


def test_oracle_call_budget():
    calls = 0

    def counting(game, pi):
        nonlocal calls
        calls += 1
        return pcc.bruteforce_pcc(game, pi)

    oracle = pcc.PcOracle(counting, F(1))
    n = 6
    rng = random.Random(2)
    g = random_monotone(rng, n)
    pi = random_prizes(rng, n)
    l = pcc.subspace(n, [grand(n)])
    eps = F(1, 2)
    pcc.subspace_avoiding_pcc(oracle, g, pi, l, eps)
    free = sum(1 for p in range(n) if not l.contains(1 << p))
    k = 2  # ceil(1/eps)
    budget = free + sum(len(list(__import__("itertools").combinations(range(free), r)))
                        for r in range(k + 1))
    assert calls <= budget


def test_u_doubling_reaches_forced_set():
    # start U far too small; the reduction must keep doubling until the
    # forced player is worth taking
    g = ExplicitGame(3, {1: F(100), 2: F(1), 4: F(1)})
    pi = [F(0)] * 3
    sol = pcc.restricted_pcc(pcc.exact_oracle(), g, pi, 1, 0, u=F(1, 1024))
    assert sol.coalition & 1
