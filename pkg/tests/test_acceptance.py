"""End-to-end acceptance suite.

One test per criterion; each prints a single `criterion N: PASS/FAIL`
line (visible with -s, or in captured output) and asserts the same
condition. Reference optima that are too expensive to recompute on every
run (exact happy nucleolus of the 50-player instances, exact packing-LP
optima) are frozen under tests/data/ and loaded here; everything else is
computed live.
"""

import csv
import itertools
import json
import random
import time
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

from coalloc import mps, pcc, setcover, vrp
from coalloc.games import ExplicitGame, coalition, grand, members, shift_transform
from coalloc.packing import solve_packing
from lpgen import random_packing_lp
from test_mps import random_monotone

DATA = Path(__file__).parent / "data"
OUTPUT = Path(__file__).parent / "output"
N_INSTANCES = 20


def _line(num: int, ok: bool, detail: str) -> bool:
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} — {detail}")
    return ok


# ---------------------------------------------------------------------------
# criteria 1-3: the counterexample fixtures, exact rational equality


def test_criterion_01_triangle():
    t0 = time.perf_counter()
    g = setcover.game(setcover.fixture("triangle"))
    y, _ = mps.mps_run(g)
    yh, _ = mps.mps_run(g, mode="happy")
    wall = time.perf_counter() - t0
    ok = y == (F(2, 3),) * 3 and yh == (F(1, 2),) * 3 and wall < 1.0
    assert _line(1, ok, f"nucleolus 2/3, happy 1/2, {wall:.2f}s")


def test_criterion_02_nine_players_full_enumeration():
    t0 = time.perf_counter()
    g = setcover.game(setcover.fixture("three_triangles"))
    fam = mps.default_family(9)  # all 2^9 - 1 coalitions
    yh, _ = mps.mps_run(g, fam, mode="happy")
    y, _ = mps.mps_run(g, fam)
    eps, _ = mps.least_core(g, fam)
    in_ext, _ = mps.core_membership(g, y, fam, "extended_happy_core")
    wall = time.perf_counter() - t0
    want = tuple(F(3, 5) if p in (0, 1, 2, 6, 7, 8) else F(7, 15)
                 for p in range(9))
    ok = (yh == (F(1, 2),) * 9
          and mps.total_value(g, fam, "happy") == F(9, 2)
          and y == want and eps == F(2, 5) and not in_ext
          and wall < 30.0)
    assert _line(2, ok, f"happy 1/2 at 9/2, nucleolus 3/5 & 7/15, "
                        f"least-core 2/5, outside extended happy core, "
                        f"{wall:.1f}s")


def test_criterion_03_fractional_domination_sensitivity():
    t0 = time.perf_counter()
    inst = setcover.fixture("frac_dominated")
    yh, _ = mps.mps_run(setcover.game(inst), mode="happy")
    split = yh == tuple(F(16, 3) if p % 2 else F(14, 3) for p in range(6))
    fracs = (setcover.fractional_cost(inst, coalition([0, 1, 2])) == 17
             and setcover.fractional_cost(inst, coalition([3, 4, 5])) == 17)
    yf, _ = mps.mps_run(setcover.fractional_game(inst))
    moved = all(
        mps.mps_run(setcover.game(setcover.with_set_cost(inst, 9, c)),
                    mode="happy")[0] != yh
        for c in (17, 19))
    up = setcover.with_set_cost(inst, 9, 19)
    yf_up, _ = mps.mps_run(setcover.fractional_game(up))
    wall = time.perf_counter() - t0
    ok = (split and fracs and yf == (F(5),) * 6 and moved
          and yf_up == (F(5),) * 6 and wall < 10.0)
    assert _line(3, ok, f"split 5±1/3, fractional costs 17, fractional "
                        f"nucleolus 5, ±1 sensitivity, {wall:.1f}s")


# ---------------------------------------------------------------------------
# criteria 4-5: scheme cross-validation and shift equivariance


def test_criterion_04_scheme_cross_validation():
    rng = random.Random(40)
    bad = 0
    for _ in range(200):
        n = rng.randint(2, 6)
        g = random_monotone(rng, n)
        for mode in ("nucleolus", "happy"):
            y, trace = mps.mps_run(g, mode=mode)
            if y != mps.bruteforce_lexi(g, mode) or len(trace) > n:
                bad += 1
    assert _line(4, bad == 0,
                 f"200 games, both modes vs brute force, {bad} mismatches")


def test_criterion_05_shift_equivariance():
    rng = random.Random(50)
    bad = 0
    for _ in range(50):
        n = rng.randint(2, 5)
        g = random_monotone(rng, n)
        shifts = [F(rng.randint(-6, 6), 2) for _ in range(n)]
        shifted = shift_transform(g, shifts)
        for mode in ("nucleolus", "happy"):
            y, _ = mps.mps_run(g, mode=mode)
            ys, _ = mps.mps_run(shifted, mode=mode)
            if ys != tuple(a + d for a, d in zip(y, shifts)):
                bad += 1
    assert _line(5, bad == 0, f"50 shifted games, both modes, {bad} mismatches")


# ---------------------------------------------------------------------------
# criterion 6: approximate packing solver vs frozen exact optima


def test_criterion_06_packing_solver():
    opts = json.loads((DATA / "packing_opts.json").read_text())
    within = 0
    infeasible = 0
    t_solve = 0.0
    for seed in range(100):
        lp = random_packing_lp(seed)
        t0 = time.perf_counter()
        sol = solve_packing(lp, eps=0.2, seed=seed, restarts=5)
        t_solve += time.perf_counter() - t0
        x = [F(float(v)) for v in sol.x]
        for row, cap in zip(lp.matrix, lp.rhs):
            used = sum(F(row[j]) * x[j] for j in np.nonzero(row)[0])
            if used > F(cap):
                infeasible += 1
                break
        val = sum(F(c) * v for c, v in zip(lp.objective, x))
        if val * F(12, 10) >= F(opts[str(seed)]):
            within += 1
    ok = within >= 95 and infeasible == 0 and t_solve < 60.0
    assert _line(6, ok, f"{within}/100 within OPT/1.2, {infeasible} exact-"
                        f"feasibility violations, {t_solve:.1f}s total")


# ---------------------------------------------------------------------------
# criterion 7: subspace-avoiding prize collecting


def _random_proper_subspace(rng, n):
    while True:
        gens = [rng.randrange(1, 1 << n)
                for _ in range(rng.randint(1, n - 1))]
        l = pcc.subspace(n, gens)
        if l.is_proper() and any(not l.contains(1 << p) for p in range(n)):
            return l


def test_criterion_07_subspace_avoidance():
    rng = random.Random(70)
    bad = 0
    over_budget = 0
    eps = F(1, 2)
    for _ in range(200):
        n = rng.randint(2, 8)
        g = random_monotone(rng, n)
        pi = pcc.prize_vector([F(rng.randint(0, 12), rng.choice([1, 2]))
                               for _ in range(n)])
        l = _random_proper_subspace(rng, n)
        # the combinatorial bound counts enumerated subproblems; the
        # u-doubling restart inside a subproblem is licensed separately
        calls = 0
        inner = pcc.restricted_pcc

        def counting(oracle_, game, prizes, a, b, u=None):
            nonlocal calls
            calls += 1
            return inner(oracle_, game, prizes, a, b, u)

        oracle = pcc.exact_oracle()
        monkey = pytest.MonkeyPatch()
        monkey.setattr(pcc, "restricted_pcc", counting)
        try:
            sol = pcc.subspace_avoiding_pcc(oracle, g, pi, l, eps)
        finally:
            monkey.undo()
        opt = pcc.bruteforce_pcc(g, pi, l)
        if l.contains(sol.coalition) or (
                sol.objective(pi) > (1 + eps) * opt.objective(pi)):
            bad += 1
        free = sum(1 for p in range(n) if not l.contains(1 << p))
        budget = free + sum(len(list(itertools.combinations(range(free), r)))
                            for r in range(3))  # ceil(1/eps) = 2
        if calls > budget:
            over_budget += 1
    ok = bad == 0 and over_budget == 0
    assert _line(7, ok, f"200 games, {bad} guarantee violations, "
                        f"{over_budget} over the oracle-call budget")


# ---------------------------------------------------------------------------
# criteria 8-10: the vehicle-routing heuristic at desk scale


@pytest.fixture(scope="module")
def heuristic_runs():
    runs = {}
    for seed in range(N_INSTANCES):
        inst = vrp.random_instance(50, 5, seed)
        t0 = time.perf_counter()
        y, trace = vrp.run_heuristic(inst)
        runs[seed] = (y, trace, time.perf_counter() - t0)
    return runs


def test_criterion_08_heuristic_vs_exact(heuristic_runs):
    errors = []
    max_wall = 0.0
    for seed in range(N_INSTANCES):
        y, _, wall = heuristic_runs[seed]
        ref = np.load(DATA / f"exact50_{seed}.npy")
        errors.extend((np.abs(y - ref) / np.abs(ref)).tolist())
        max_wall = max(max_wall, wall)
    errors = np.array(errors)
    exact_times = json.loads((DATA / "exact50_times.json").read_text())
    max_exact = max(float(v) for v in exact_times.values())
    ok = (errors.mean() <= 0.10 and np.median(errors) <= 0.06
          and max_wall <= 60.0 and max_exact <= 900.0)
    assert _line(8, ok, f"rel error mean {errors.mean():.3f} (≤0.10) median "
                        f"{np.median(errors):.3f} (≤0.06), heuristic ≤"
                        f"{max_wall:.0f}s, exact reference ≤{max_exact:.0f}s")


def test_criterion_09_convergence(heuristic_runs):
    OUTPUT.mkdir(exist_ok=True)
    worst = 0.0
    for seed in range(N_INSTANCES):
        _, trace, _ = heuristic_runs[seed]
        with open(OUTPUT / f"convergence_seed{seed}.csv", "w",
                  newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "l1_rel_change", "pool_size",
                        "xi_final"])
            for r in trace:
                w.writerow([r.index, repr(r.l1_rel_change), r.pool_size,
                            repr(r.xi_final)])
        worst = max(worst, trace[-1].l1_rel_change)
    # one large smoke run: convergence must carry over past desk scale
    t0 = time.perf_counter()
    _, big_trace = vrp.run_heuristic(vrp.random_instance(200, 20, 0))
    big_wall = time.perf_counter() - t0
    big_chg = big_trace[-1].l1_rel_change
    ok = worst <= 0.05 and big_chg <= 0.05 and big_wall < 1200.0
    assert _line(9, ok, f"worst iter-11→12 change {worst:.4f} (≤0.05) over "
                        f"{N_INSTANCES} instances; n=200 k=20 smoke: change "
                        f"{big_chg:.4f} in {big_wall:.0f}s (<1200s)")


def test_criterion_10_determinism(heuristic_runs):
    from dataclasses import replace
    bad = 0
    # packing solver: reruns are bit-identical
    for seed in (0, 17, 45):
        lp = random_packing_lp(seed)
        a = solve_packing(lp, eps=0.2, seed=seed, restarts=5)
        b = solve_packing(lp, eps=0.2, seed=seed, restarts=5)
        if not np.array_equal(a.x, b.x):
            bad += 1
    # heuristic: reruns match the fixture runs bit for bit, and the
    # thread count plays no role
    for seed, threads in ((0, 1), (7, 16)):
        cfg = replace(vrp.HeuristicConfig(), threads=threads)
        y, trace = vrp.run_heuristic(vrp.random_instance(50, 5, seed), cfg)
        y0, trace0, _ = heuristic_runs[seed]
        if not np.array_equal(y, y0) or (
                [r.l1_rel_change for r in trace]
                != [r.l1_rel_change for r in trace0]):
            bad += 1
    assert _line(10, bad == 0, f"{bad} nondeterministic reruns (criteria "
                               f"6-9 pipelines, varying thread counts)")
