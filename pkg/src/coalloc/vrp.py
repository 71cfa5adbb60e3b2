"""Euclidean vehicle routing games and a constraint-generation heuristic
for their happy nucleolus.

A game instance is a depot, player points, and a tour capacity k; the cost
of a coalition is the cheapest set of depot-anchored walks covering it,
each walk visiting at most k players.  The happy nucleolus of such a game
is fully determined by the excesses of single tours (coalitions of size
<= k), which keeps an exact reference solver tractable at moderate sizes
and motivates the heuristic: maintain a small pool of candidate tours,
run the excess-balancing scheme approximately on the pool, and steer tour
generation with the subspaces the scheme has already pinned down.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .games import Coalition, SizeGuardError, members, size
from .packing import PackingLp, packing_lp, solve_packing
from .pcc import Subspace, subspace
from .ratlp import (
    EQ, LE, OPTIMAL, LinearProgram, empty_basis, extend_basis, in_span, solve,
)

DP_LIMIT = 12
SMALLCAP_TOUR_LIMIT = 3_000_000


class InfeasibleTourError(ValueError):
    pass


# ---------------------------------------------------------------------------
# instances and tour costs


@dataclass(frozen=True)
class VrpInstance:
    depot: tuple[float, float]
    points: tuple[tuple[float, float], ...]
    capacity: int

    @property
    def n(self) -> int:
        return len(self.points)

    def dist_matrix(self) -> np.ndarray:
        """(n+1) x (n+1) Euclidean distances; index n is the depot."""
        cached = getattr(self, "_dist", None)
        if cached is None:
            pts = np.array(list(self.points) + [self.depot])
            diff = pts[:, None, :] - pts[None, :, :]
            cached = np.sqrt((diff ** 2).sum(axis=2))
            object.__setattr__(self, "_dist", cached)
        return cached


def instance(depot, points, capacity: int) -> VrpInstance:
    if capacity < 1:
        raise ValueError("capacity must be at least 1")
    return VrpInstance(tuple(depot), tuple(tuple(p) for p in points),
                       int(capacity))


def random_instance(n: int, k: int, seed: int) -> VrpInstance:
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x76727)))
    pts = rng.random((n, 2))
    return instance((0.5, 0.5), [tuple(map(float, p)) for p in pts], k)


_PERM_CACHE: dict[int, np.ndarray] = {}


def _half_perms(s: int) -> np.ndarray:
    """All visiting orders of s points modulo reversal, as an array."""
    if s not in _PERM_CACHE:
        perms = [p for p in itertools.permutations(range(s))
                 if s == 1 or p[0] < p[-1]]
        _PERM_CACHE[s] = np.array(perms, dtype=np.int64)
    return _PERM_CACHE[s]


def batch_tour_costs(inst: VrpInstance, combos: np.ndarray) -> np.ndarray:
    """Optimal walk lengths for many same-size coalitions at once.

    combos is an (N, s) integer array of player indices, s <= 7ish; the
    cost of each row is minimized over all visiting orders.
    """
    d = inst.dist_matrix()
    depot = inst.n
    if combos.size == 0:
        return np.zeros(combos.shape[0])
    s = combos.shape[1]
    best = None
    for perm in _half_perms(s):
        seq = combos[:, perm]
        cost = d[depot, seq[:, 0]] + d[seq[:, -1], depot]
        for i in range(s - 1):
            cost = cost + d[seq[:, i], seq[:, i + 1]]
        best = cost if best is None else np.minimum(best, cost)
    return best


@functools.lru_cache(maxsize=400_000)
def tour_cost(inst: VrpInstance, s: Coalition) -> tuple[float, tuple[int, ...]]:
    """Cheapest depot-anchored walk through the coalition.

    Exact subset DP up to 12 points, nearest-neighbor + 2-opt above.
    Memoized: the heuristic re-costs the same coalitions across
    iterations (pool refills, post-optimization probes).
    """
    ms = members(s)
    if len(ms) > inst.capacity:
        raise InfeasibleTourError(
            f"{len(ms)} players exceed tour capacity {inst.capacity}")
    if not ms:
        return 0.0, ()
    d = inst.dist_matrix()
    depot = inst.n
    if len(ms) == 1:
        return 2.0 * d[depot, ms[0]], ms
    if len(ms) <= DP_LIMIT:
        return _held_karp(d, depot, ms)
    return _two_opt(d, depot, ms)


def _held_karp(d, depot, ms):
    m = len(ms)
    full = (1 << m) - 1
    dp = {}
    for i in range(m):
        dp[(1 << i, i)] = (d[depot, ms[i]], -1)
    for mask in range(1, full + 1):
        for last in range(m):
            if not mask >> last & 1 or (mask, last) not in dp:
                continue
            base, _ = dp[(mask, last)]
            for nxt in range(m):
                if mask >> nxt & 1:
                    continue
                cand = base + d[ms[last], ms[nxt]]
                key = (mask | 1 << nxt, nxt)
                if key not in dp or cand < dp[key][0]:
                    dp[key] = (cand, last)
    best = min(range(m), key=lambda i: dp[(full, i)][0] + d[ms[i], depot])
    cost = dp[(full, best)][0] + d[ms[best], depot]
    order = []
    mask, last = full, best
    while last != -1:
        order.append(ms[last])
        _, prev = dp[(mask, last)]
        mask &= ~(1 << last)
        last = prev
    return float(cost), tuple(reversed(order))


def _two_opt(d, depot, ms):
    # nearest neighbor from the depot
    todo = list(ms)
    order = []
    cur = depot
    while todo:
        nxt = min(todo, key=lambda p: d[cur, p])
        order.append(nxt)
        todo.remove(nxt)
        cur = nxt
    path = [depot] + order + [depot]
    improved = True
    while improved:
        improved = False
        for i in range(len(path) - 2):
            for j in range(i + 2, len(path) - 1):
                delta = (d[path[i], path[j]] + d[path[i + 1], path[j + 1]]
                         - d[path[i], path[i + 1]] - d[path[j], path[j + 1]])
                if delta < -1e-12:
                    path[i + 1:j + 1] = reversed(path[i + 1:j + 1])
                    improved = True
    cost = sum(d[path[i], path[i + 1]] for i in range(len(path) - 1))
    return float(cost), tuple(path[1:-1])


def coalition_cost_ub(inst: VrpInstance, s: Coalition) -> float:
    """Upper bound on the coalition's cost by an angular-sweep partition
    into capacity-sized clusters (exact when one tour suffices)."""
    ms = members(s)
    if not ms:
        return 0.0
    k = inst.capacity
    if len(ms) <= k:
        return tour_cost(inst, s)[0]
    dx, dy = inst.depot
    ordered = sorted(ms, key=lambda p: math.atan2(inst.points[p][1] - dy,
                                                  inst.points[p][0] - dx))
    best = math.inf
    for offset in range(min(k, len(ordered))):
        rolled = ordered[offset:] + ordered[:offset]
        total = 0.0
        for i in range(0, len(rolled), k):
            chunk = 0
            for p in rolled[i:i + k]:
                chunk |= 1 << p
            total += tour_cost(inst, chunk)[0]
        best = min(best, total)
    return best


# ---------------------------------------------------------------------------
# tour pool


@dataclass
class Tour:
    coalition: Coalition
    order: tuple[int, ...]
    lam: float
    age: int = 0


@dataclass
class TourPool:
    tours: dict[Coalition, Tour] = field(default_factory=dict)

    def add(self, tour: Tour) -> bool:
        cur = self.tours.get(tour.coalition)
        if cur is None or tour.lam < cur.lam:
            self.tours[tour.coalition] = tour
            return True
        return False

    def __len__(self):
        return len(self.tours)

    def __iter__(self):
        return iter(self.tours.values())

    def masks(self):
        return list(self.tours.keys())

    def covers_all(self, n: int) -> bool:
        seen = 0
        for mask in self.tours:
            seen |= mask
        return seen == (1 << n) - 1


def _make_tour(inst: VrpInstance, mask: Coalition) -> Tour:
    lam, order = tour_cost(inst, mask)
    return Tour(mask, order, lam)


@dataclass(frozen=True)
class HeuristicConfig:
    iterations: int = 12
    eps: float = 0.2
    gamma: float = 2.0
    threads: int = 8
    post_opt_start: int = 7
    prune_age: int = 3
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must be in (0, 1)")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")


# ---------------------------------------------------------------------------
# tour generation


def _excesses(inst: VrpInstance, y: np.ndarray, masks: Sequence[Coalition],
              lams: Sequence[float]) -> np.ndarray:
    out = np.empty(len(masks))
    for i, (mask, lam) in enumerate(zip(masks, lams)):
        out[i] = lam - sum(y[p] for p in members(mask))
    return out


@functools.lru_cache(maxsize=4)
def _local_universe(inst: VrpInstance, radius: int = 12):
    """All feasible tours over each player's geometric neighborhood.

    Low-excess tours group spatially close players, so enumerating subsets
    of the `radius` nearest neighbors of every player (sizes up to
    min(capacity, 5)) catches nearly all candidate rows. Costs are
    y-independent, so the enumeration is done once per instance; callers
    re-rank by excess cheaply. Returns (members array padded with -1,
    incidence csr-like column list, lam array).
    """
    n = inst.n
    d = inst.dist_matrix()
    smax = min(inst.capacity, 5)
    near = np.argsort(d[:n, :n] + np.eye(n) * 1e9, axis=1)[:, :radius]
    seen: set[Coalition] = set()
    by_size: dict[int, list[tuple[int, ...]]] = {s: [] for s in range(1, smax + 1)}
    for p in range(n):
        hood = near[p]
        for s in range(0, smax):
            for combo in itertools.combinations(hood.tolist(), s):
                ms = tuple(sorted((p,) + combo))
                mask = 0
                for q in ms:
                    mask |= 1 << q
                if mask not in seen:
                    seen.add(mask)
                    by_size[s + 1].append(ms)
    groups = []
    for s, rows in by_size.items():
        if not rows:
            continue
        arr = np.array(rows, dtype=np.int64)
        lam = batch_tour_costs(inst, arr)
        groups.append((arr, lam))
    return groups


def generate_tours(inst: VrpInstance, y: np.ndarray,
                   subspaces: Sequence[Subspace], pool: TourPool,
                   budget: Optional[int] = None,
                   y_smooth: Optional[np.ndarray] = None) -> list[Tour]:
    """Refill the pool: a greedy excess-minimizing cover of all players,
    plus single-player perturbations of existing tours, including one
    escape candidate per cached subspace.

    budget caps how many minimum-excess neighborhood candidates are admitted
    beyond the escapes (default: the vehicle capacity)."""
    n = inst.n
    k = inst.capacity
    added: list[Tour] = []

    def admit(mask):
        t = _make_tour(inst, mask)
        if pool.add(t):
            added.append(t)
        return t

    # (i) greedy cover: grow a minimum-excess tour from every player at
    # once, so the low-excess neighborhood of the current allocation is
    # mapped in a single pass; every player sits in its own start's tour,
    # hence the pool covers P. Levels up to size 7 are costed exactly in
    # one batch per level; beyond that, permutation enumeration is out of
    # reach and candidates are ranked by cheapest-insertion estimates
    # (admitted tours are re-costed exactly by the pool).
    d = inst.dist_matrix()
    depot = n
    starts = np.arange(n)
    grown = [[p] for p in range(n)]
    orders: list[tuple[int, ...]] = [(p,) for p in range(n)]
    cost_of = batch_tour_costs(inst, starts[:, None])
    excess = cost_of - y
    active = np.ones(n, dtype=bool)
    for level in range(k - 1):
        if not active.any():
            break
        cur_size = level + 1
        improved = np.zeros(n, dtype=bool)
        if cur_size + 1 <= 7:
            combos, owner, addq = [], [], []
            for i in np.nonzero(active)[0]:
                cur = grown[i]
                for q in range(n):
                    if q not in cur:
                        combos.append(sorted(cur + [q]))
                        owner.append(i)
                        addq.append(q)
            if not combos:
                break
            costs = batch_tour_costs(inst, np.array(combos, dtype=np.int64))
            ysums = y[np.array(combos)].sum(axis=1)
            cand_exc = costs - ysums
            owner = np.array(owner)
            addq = np.array(addq)
            for i in np.nonzero(active)[0]:
                sel = owner == i
                j = np.argmin(cand_exc[sel] + 1e-15 * addq[sel])
                e = cand_exc[sel][j]
                if e < excess[i] - 1e-12:
                    grown[i] = sorted(grown[i] + [int(addq[sel][j])])
                    cost_of[i] = costs[sel][j]
                    excess[i] = e
                    improved[i] = True
        else:
            for i in np.nonzero(active)[0]:
                if len(orders[i]) != cur_size:
                    # entering the estimate regime: take the exact walk order
                    mask = 0
                    for p in grown[i]:
                        mask |= 1 << p
                    cost_of[i], orders[i] = tour_cost(inst, mask)
                walk = (depot,) + orders[i] + (depot,)
                a = np.array(walk[:-1])
                b = np.array(walk[1:])
                # insertion delta of every q at every edge: (edges, n)
                delta = (d[a][:, :n] + d[b][:, :n]
                         - d[a, b][:, None]).min(axis=0)
                cand_exc = cost_of[i] + delta - (
                    sum(y[p] for p in grown[i]) + y)
                cand_exc[grown[i]] = np.inf
                q = int(np.argmin(cand_exc + 1e-15 * np.arange(n)))
                if cand_exc[q] < excess[i] - 1e-12:
                    edge = int(np.argmin(d[a, q] + d[b, q] - d[a, b]))
                    orders[i] = orders[i][:edge] + (q,) + orders[i][edge:]
                    grown[i] = sorted(grown[i] + [q])
                    cost_of[i] += float(delta[q])
                    excess[i] = float(cand_exc[q])
                    improved[i] = True
        active = improved & (np.array([len(g) for g in grown]) < k)
    for g in grown:
        mask = 0
        for p in g:
            mask |= 1 << p
        admit(mask)

    # (ib) re-rank the cached local-neighborhood universe by current excess
    # and admit the tightest slice; the rule is a pure function of y, so a
    # settled allocation re-selects the same tours and the pool stops moving
    if n <= 120:
        ys = y if y_smooth is None else y_smooth
        scored: list[tuple[float, int, np.ndarray]] = []
        for arr, lam in _local_universe(inst):
            exc_u = lam - ys[arr].sum(axis=1)
            take = min(len(exc_u), 4 * n)
            idx = np.argpartition(exc_u, take - 1)[:take]
            for i in idx:
                scored.append((float(exc_u[i]), int(arr[i].sum()), arr[i]))
        scored.sort(key=lambda t: (t[0], t[1]))
        for _, _, ms in scored[:2 * n]:
            mask = 0
            for p in ms:
                mask |= 1 << int(p)
            admit(mask)

    # (ii) one-player perturbations of the current pool; oversized
    # candidates (no permutation batch) are ranked by insertion/removal
    # deltas on the originating tour's walk
    seen = set(pool.tours.keys())
    cands: dict[Coalition, Tour] = {}
    for tour in list(pool):
        ms = members(tour.coalition)
        if len(ms) > 1:
            for p in ms:
                m2 = tour.coalition & ~(1 << p)
                if m2 not in seen:
                    cands.setdefault(m2, tour)
        if len(ms) < k:
            for q in range(n):
                if not tour.coalition >> q & 1:
                    m2 = tour.coalition | 1 << q
                    if m2 not in seen:
                        cands.setdefault(m2, tour)
    if cands:
        masks = list(cands.keys())
        by_size: dict[int, list[Coalition]] = {}
        for m in masks:
            by_size.setdefault(size(m), []).append(m)
        lam_of: dict[Coalition, float] = {}
        d = inst.dist_matrix()
        depot = n
        for s, group in by_size.items():
            if s <= 7:
                combos = np.array([members(m) for m in group], dtype=np.int64)
                costs = batch_tour_costs(inst, combos)
                for m, c in zip(group, costs):
                    lam_of[m] = float(c)
                continue
            for m in group:
                src = cands[m]
                walk = (depot,) + src.order + (depot,)
                if m & ~src.coalition:
                    q = (m & ~src.coalition).bit_length() - 1
                    a = np.array(walk[:-1])
                    b = np.array(walk[1:])
                    lam_of[m] = src.lam + float(
                        (d[a, q] + d[q, b] - d[a, b]).min())
                else:
                    p = (src.coalition & ~m).bit_length() - 1
                    i = walk.index(p)
                    lam_of[m] = src.lam - float(
                        d[walk[i - 1], p] + d[p, walk[i + 1]]
                        - d[walk[i - 1], walk[i + 1]])
        exc = {m: lam_of[m] - sum(y[p] for p in members(m)) for m in masks}
        # escape candidates compete with the pool itself: if an existing
        # tour already avoids the subspace at lower excess, nothing is
        # added, so a settled pool stops growing
        pool_exc = {t.coalition: t.lam - sum(y[p] for p in members(t.coalition))
                    for t in pool}
        merged = {**exc, **pool_exc}
        all_ranked = sorted(merged, key=lambda m: (merged[m], m))
        # span tests are exact-rational and dominate when the candidate
        # list is long; an avoiding row this far down the excess ranking
        # would never become relevant anyway
        scan_cap = max(80, 2 * n)
        ranked = sorted(masks, key=lambda m: (exc[m], m))
        picked: set[Coalition] = set()
        for l in subspaces:
            for m in all_ranked[:scan_cap]:
                if not l.contains(m):
                    if m in exc and m not in pool_exc:
                        picked.add(m)
                    break
        picked.update(ranked[:budget if budget is not None else k])
        for m in picked:
            admit(m)
    return added


# ---------------------------------------------------------------------------
# the packing-LP variant of the excess-balancing scheme


def stage_packing_lp(fixed: Sequence[tuple[Coalition, float]],
                     pool: TourPool, gamma: float, n: int,
                     spanned: frozenset = frozenset()) -> tuple[PackingLp, list[Coalition]]:
    """Stage LP over the pool: variables (y >= 0, xi >= 0), objective
    gamma*y(P) + xi; fixed tours cap y(S) at lam - xi*_S, unfixed tours
    cap y(S) + xi at lam. Unfixed tours whose incidence is already spanned
    by the fixed family keep their cap but lose the xi term (their excess
    is determined, so they must not limit the stage minimum)."""
    fixed_xi = dict(fixed)
    rows = []
    rhs = []
    order = []
    for tour in pool:
        row = np.zeros(n + 1)
        for p in members(tour.coalition):
            row[p] = 1.0
        if tour.coalition in fixed_xi:
            cap = tour.lam - fixed_xi[tour.coalition]
        else:
            if tour.coalition not in spanned:
                row[n] = 1.0
            cap = tour.lam
        if cap < -1e-9:
            raise ValueError("negative row capacity; stale fixed excess")
        rows.append(row)
        rhs.append(max(cap, 1e-15))
        order.append(tour.coalition)
    obj = np.full(n + 1, gamma)
    obj[n] = 1.0
    return packing_lp(obj, np.array(rows), np.array(rhs)), order


LpBackend = Callable[[PackingLp, float, int], np.ndarray]


def _approx_backend(config: HeuristicConfig) -> LpBackend:
    def run(lp: PackingLp, eps: float, seed: int) -> np.ndarray:
        return solve_packing(lp, eps=eps, seed=seed,
                             restarts=config.restarts).x
    return run


def exact_backend(lp: PackingLp, eps: float, seed: int) -> np.ndarray:
    """Exact-LP substitute for the approximate solver (cross-checks)."""
    prog = LinearProgram(objective=[Fraction(v) for v in lp.objective],
                         lower=[0] * lp.nvars)
    for row, cap in zip(lp.matrix, lp.rhs):
        prog.add_row([Fraction(v) for v in row], LE, Fraction(cap))
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"exact stage LP came back {sol.status}")
    return np.array([float(v) for v in sol.primal])


@dataclass
class PackingStage:
    xi: float
    fixed: list[Coalition]
    rank: int


def mps_packing_run(inst: VrpInstance, pool: TourPool,
                    config: HeuristicConfig,
                    lp_backend: Optional[LpBackend] = None,
                    seed: Optional[int] = None,
                    tol_fix: float = 1e-6):
    """Excess-balancing loop over the pool with the packing solver.

    Fixing is slack-based: any unfixed tour with relative slack below
    tol_fix is pinned at its current excess. Returns (y, subspaces,
    stages, converged).
    """
    n = inst.n
    backend = lp_backend or _approx_backend(config)
    seed = config.seed if seed is None else seed
    fixed: list[tuple[Coalition, float]] = []
    basis = empty_basis(n)
    subspaces: list[Subspace] = []
    stages: list[PackingStage] = []
    y = np.zeros(n)
    stagnant = 0
    # float orthonormal companion of the exact basis, for cheap span tests
    q = np.zeros((n, 0))

    def float_in_span(mask):
        v = np.zeros(n)
        for p in members(mask):
            v[p] = 1.0
        if q.shape[1]:
            v = v - q @ (q.T @ v)
        return float(np.linalg.norm(v)) < 1e-8

    def q_extend(mask):
        nonlocal q
        v = np.zeros(n)
        for p in members(mask):
            v[p] = 1.0
        if q.shape[1]:
            v = v - q @ (q.T @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            q = np.column_stack([q, v / norm])

    while basis.rank < n and stagnant < 2 and len(stages) <= n + 2:
        fixed_set = {m for m, _ in fixed}
        spanned = frozenset(t.coalition for t in pool
                            if t.coalition not in fixed_set
                            and float_in_span(t.coalition))
        if all(t.coalition in fixed_set or t.coalition in spanned
               for t in pool):
            break  # xi no longer appears in any row
        lp, order = stage_packing_lp(fixed, pool, config.gamma, n, spanned)
        x = backend(lp, config.eps, seed + 7919 * len(stages))
        y = x[:n]
        xi = float(x[n])
        newly = []
        for tour in pool:
            m = tour.coalition
            if m in fixed_set or m in spanned:
                continue
            slack = tour.lam - sum(y[p] for p in members(m)) - xi
            if slack <= tol_fix * max(1.0, tour.lam):
                # the exact basis is authoritative; extension fails iff the
                # incidence vector was already dependent
                basis, added = extend_basis(basis, m)
                if added:
                    q_extend(m)
                    fixed.append((m, tour.lam - float(sum(y[p] for p in members(m)))))
                    newly.append(m)
        if newly:
            stagnant = 0
            subspaces.append(subspace(n, [m for m, _ in fixed]))
        else:
            stagnant += 1
        stages.append(PackingStage(xi, newly, basis.rank))
    return y, subspaces, stages, basis.rank == n


# ---------------------------------------------------------------------------
# post-optimization


def post_optimize(inst: VrpInstance, y: np.ndarray, pool: TourPool,
                  budget: int = 40, tol_lex: float = 1e-9,
                  grow: bool = True):
    """Local search around the scheme's output: move value between two
    players (or raise one where slack allows) whenever the sorted pool
    excess vector improves; augment the pool with single-player exchanges
    around tours a move made tight (suppressed when grow is False, which
    callers use once the row system is frozen)."""
    n = inst.n
    y = y.copy()
    masks = pool.masks()
    lams = np.array([pool.tours[m].lam for m in masks])
    inc = np.zeros((len(masks), n))
    for i, m in enumerate(masks):
        for p in members(m):
            inc[i, p] = 1.0

    def sorted_excess(vec):
        return np.sort(lams - inc @ vec)

    def lex_better(a, b):
        diff = a - b
        idx = np.nonzero(np.abs(diff) > tol_lex)[0]
        return len(idx) > 0 and diff[idx[0]] > 0

    for _ in range(budget):
        exc = lams - inc @ y
        base = np.sort(exc)
        # raise a single entry into remaining slack (grows the total)
        room = np.full(n, np.inf)
        for i in range(len(masks)):
            e = exc[i]
            for p in members(masks[i]):
                room[p] = min(room[p], e)
        p_up = int(np.argmax(room))
        if np.isfinite(room[p_up]) and room[p_up] > tol_lex:
            y[p_up] += room[p_up]
            continue
        tight_idx = int(np.argmin(exc))
        best_move = None
        for p in members(masks[tight_idx]):
            # amount movable from p to each q without breaking happiness:
            # the min excess over rows containing q but not p
            rows = inc[:, p] == 0
            if rows.any():
                caps = np.where(inc[rows] > 0, exc[rows, None],
                                np.inf).min(axis=0)
            else:
                caps = np.full(n, np.inf)
            for q in range(n):
                if q == p:
                    continue
                cap = caps[q]
                if not np.isfinite(cap) or cap <= tol_lex:
                    continue
                delta = cap / 2
                y2 = y.copy()
                y2[p] -= delta
                y2[q] += delta
                if y2[p] < -tol_lex:
                    continue
                cand = sorted_excess(y2)
                if lex_better(cand, base) and (
                        best_move is None or lex_better(cand, best_move[0])):
                    best_move = (cand, y2, p, q)
        if best_move is None:
            break
        _, y, p, q = best_move
        # probe exchanges around the tour that drove the move
        m = masks[tight_idx]
        for out in members(m):
            for inp in range(n):
                if m >> inp & 1:
                    continue
                m2 = (m & ~(1 << out)) | 1 << inp
                if grow and m2 and m2 not in pool.tours:
                    t = _make_tour(inst, m2)
                    if t.lam - sum(y[r] for r in members(m2)) < np.min(exc):
                        pool.add(t)
    return y


# ---------------------------------------------------------------------------
# the full heuristic


@dataclass
class IterationRecord:
    index: int
    l1_rel_change: float
    pool_size: int
    xi_final: float


# a tour counts as recently relevant when its slack is within this relative
# tolerance; a loose value keeps near-binding tours alive, which damps pool
# churn between iterations
_RELEVANCE_TOL = 0.04


def run_heuristic(inst: VrpInstance, config: HeuristicConfig = HeuristicConfig()):
    """Pool-based approximation of the happy nucleolus; returns
    (y, trace) with one record per iteration."""
    n = inst.n
    y = np.array([tour_cost(inst, 1 << p)[0] for p in range(n)])
    pool = TourPool()
    subspaces: list[Subspace] = []
    trace: list[IterationRecord] = []
    # two-phase schedule: explore adaptively while y is still moving, then
    # freeze the generation reference and stop pruning so the row system —
    # and with it y — becomes stationary over the last iterations
    settle = config.post_opt_start + 1
    y_ref = None
    for it in range(1, config.iterations + 1):
        guide = y if y_ref is None else y_ref
        if y_ref is None:
            # after the settle point the pool is frozen: generation would
            # only re-derive proposals from the constant reference, so the
            # row system is already closed under it
            generate_tours(inst, guide, subspaces, pool, budget=0,
                           y_smooth=guide)
        prev = y
        if y_ref is not None and it > settle + 1:
            # frozen pool, constant guide, constant backend seed: the
            # previous iteration is a fixpoint, so re-solving the identical
            # system would reproduce y bit for bit
            trace.append(IterationRecord(it, 0.0, len(pool),
                                         trace[-1].xi_final))
            continue
        # a constant backend seed keeps late iterations from re-randomizing
        # an already-stable pool, which is what lets y settle
        y, subspaces, stages, _ = mps_packing_run(inst, pool, config)
        if it >= config.post_opt_start:
            y = post_optimize(inst, y, pool, grow=y_ref is None)
        # relevance bookkeeping: fixed-or-tight tours stay young
        xi_final = stages[-1].xi if stages else 0.0
        fixed_masks = set()
        for st in stages:
            fixed_masks.update(st.fixed)
        for tour in pool:
            slack = tour.lam - sum(y[p] for p in members(tour.coalition))
            if tour.coalition in fixed_masks or slack <= _RELEVANCE_TOL * max(1.0, tour.lam):
                tour.age = 0
            else:
                tour.age += 1
        if it == settle:
            # the allocation is close to its fixed point here: pin the
            # generation reference to it and clear every row that was not
            # relevant in this very iteration, then freeze the pool; a
            # frozen row system makes y stationary over the remaining
            # iterations
            y_ref = y.copy()
            doomed = [m for m, t in pool.tours.items() if t.age >= 1]
        elif it < settle:
            doomed = [m for m, t in pool.tours.items() if t.age > config.prune_age]
        else:
            doomed = []
        for m in doomed:
            del pool.tours[m]
        denom = max(float(np.abs(prev).sum()), 1e-12)
        trace.append(IterationRecord(
            it, float(np.abs(y - prev).sum()) / denom, len(pool), xi_final))
    return y, trace


# ---------------------------------------------------------------------------
# exact reference for small capacities


def _tour_universe(inst: VrpInstance):
    n, k = inst.n, inst.capacity
    total = sum(math.comb(n, s) for s in range(1, min(k, n) + 1))
    if total > SMALLCAP_TOUR_LIMIT:
        raise SizeGuardError(f"{total} tours exceed the exact-path cap")
    combos = {}
    lams = {}
    for s in range(1, min(k, n) + 1):
        arr = np.array(list(itertools.combinations(range(n), s)),
                       dtype=np.int64)
        combos[s] = arr
        lams[s] = batch_tour_costs(inst, arr)
    return combos, lams


def _cg_solve(n, build_rows, scan, initial, maximize_obj):
    """Constraint generation: exact LP over a working subset of rows,
    scanning the full family for violations between solves.

    build_rows(idx) -> (coeffs, rel, rhs) rows; scan(primal) -> new row
    ids; returns (solution, working ids).
    """
    working = list(initial)
    while True:
        lp = LinearProgram(objective=maximize_obj)
        for rid in working:
            coeffs, rel, rhs = build_rows(rid)
            lp.add_row(coeffs, rel, rhs)
        sol = solve(lp)
        if sol.status != OPTIMAL:
            raise RuntimeError(f"working LP came back {sol.status}")
        fresh = scan(sol, set(working))
        if not fresh:
            return sol, working
        working.extend(fresh)


def exact_happy_nucleolus_smallcap(inst: VrpInstance) -> np.ndarray:
    """Exact happy nucleolus over all tours of size <= capacity, by the
    excess-balancing scheme with constraint generation inside every LP.

    Tour lengths are double-precision but enter the LPs as exact
    rationals, so the reference optimizes exactly the game the heuristic
    sees. Returns floats of the exact rational allocation.
    """
    n = inst.n
    combos, lams = _tour_universe(inst)

    def row_of(rid):
        # rationalize lengths on demand; only working rows ever need it
        s, i = rid
        return combos[s][i], Fraction(float(lams[s][i]))

    def scan_factory(with_xi, fixed_ids, skip=None, batch=60):
        """Float prescan + exact confirmation; returns at most `batch`
        most-violated rows (early rounds can have millions of violations,
        so the candidate list must stay bounded)."""
        known_skip: set = set()

        def scan(sol, working):
            prim = sol.primal
            if with_xi:
                xi_f = float(prim[0])
                y_f = np.array([float(v) for v in prim[1:]])
            else:
                xi_f = 0.0
                y_f = np.array([float(v) for v in prim])
            excl: dict[int, set[int]] = {s: set() for s in combos}
            for rid in itertools.chain(fixed_ids, working, known_skip):
                if isinstance(rid, tuple):
                    excl[rid[0]].add(rid[1])
            slacks = {}
            for s in combos:
                arr = combos[s]
                tot = np.zeros(arr.shape[0])
                for col in range(s):
                    tot += y_f[arr[:, col]]
                slack = lams[s] - tot - xi_f
                if excl[s]:
                    slack[list(excl[s])] = np.inf
                slacks[s] = slack
            while True:
                cands = []
                for s, slack in slacks.items():
                    hits = np.nonzero(slack < 1e-7)[0]
                    if hits.shape[0] > 2 * batch:
                        top = np.argpartition(slack[hits], 2 * batch)[:2 * batch]
                        hits = hits[top]
                    for i in hits:
                        cands.append((float(slack[i]), (s, int(i))))
                if not cands:
                    return []
                cands.sort()
                out = []
                for _, rid in cands:
                    if len(out) >= batch:
                        break
                    if skip is not None and skip(rid):
                        # remember and mask, so capped rounds cannot starve
                        known_skip.add(rid)
                        slacks[rid[0]][rid[1]] = np.inf
                        continue
                    idx, lam = row_of(rid)
                    ys = sum((prim[1 + p] if with_xi else prim[p]) for p in idx)
                    xi_e = prim[0] if with_xi else 0
                    if ys + xi_e > lam:
                        out.append(rid)
                    else:
                        slacks[rid[0]][rid[1]] = np.inf
                if out:
                    return out
        return scan

    # total value: max y(P) subject to happiness over all tours
    def build_total(rid):
        idx, lam = row_of(rid)
        coeffs = [0] * n
        for p in idx:
            coeffs[p] = 1
        return coeffs, LE, lam

    init = [(1, i) for i in range(n)]
    sol, _ = _cg_solve(n, build_total, scan_factory(False, []), init,
                       [1] * n)
    total = sol.objective_value

    fixed: list[tuple[tuple[int, int], Fraction]] = []
    basis = empty_basis(n)
    y = sol.primal
    while basis.rank < n:
        fixed_ids = [rid for rid, _ in fixed]

        def build(rid):
            if rid == "total":
                return [0] + [1] * n, EQ, total
            idx, lam = row_of(rid)
            coeffs = [0] * (n + 1)
            for p in idx:
                coeffs[1 + p] = 1
            for frid, fxi in fixed:
                if frid == rid:
                    return coeffs, EQ, lam - fxi
            coeffs[0] = 1
            return coeffs, LE, lam

        def in_fixed_span(rid):
            # rows spanned by the fixed family only cap xi; the scheme
            # maximizes the minimum over un-spanned rows, so leave them out
            idx, _ = row_of(rid)
            mask = 0
            for p in idx:
                mask |= 1 << int(p)
            return in_span(basis, mask)

        initial = ["total"] + fixed_ids + [(1, i) for i in range(n)
                                           if not in_span(basis, 1 << i)]
        sol, working = _cg_solve(
            n, build, scan_factory(True, fixed_ids, skip=in_fixed_span),
            initial, [1] + [0] * n)
        xi = sol.primal[0]
        y = sol.primal[1:]
        grew = False
        for pos, rid in enumerate(working):
            if rid == "total" or rid in set(fixed_ids):
                continue
            if sol.dual[pos] != 0:
                idx, lam = row_of(rid)
                mask = 0
                for p in idx:
                    mask |= 1 << int(p)
                if in_span(basis, mask):
                    continue
                fixed.append((rid, xi))
                basis, _ = extend_basis(basis, mask)
                grew = True
        if not grew:
            raise RuntimeError("no progress in the exact reference scheme")
    return np.array([float(v) for v in y])


# ---------------------------------------------------------------------------
# serialization


def to_json(inst: VrpInstance) -> dict:
    return {"depot": list(inst.depot),
            "points": [list(p) for p in inst.points],
            "capacity": inst.capacity}


def from_json(data: dict) -> VrpInstance:
    return instance(data["depot"], data["points"], data["capacity"])


def load(path: str) -> VrpInstance:
    with open(path) as fh:
        return from_json(json.load(fh))


def save(inst: VrpInstance, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(inst), fh, indent=1)
        fh.write("\n")
