"""Approximate solver for packing linear programs.

max c.x  s.t.  A x <= b,  x >= 0, with c, A, b nonnegative and b > 0.

The solver is a width-independent multiplicative-weights scheme: constraint
weights follow a softmax of the relative loads, every coordinate whose
price-to-value ratio is near-best gets a multiplicative bump, and the best
rescaled iterate is kept. Randomness only perturbs the starting point and
tie-breaking, so a seed makes a run reproducible; independent seeded
restarts amplify the constant success probability. The returned point is
always exactly feasible (final scaling step).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np


class UnboundedPackingError(ValueError):
    """Some variable has positive objective but appears in no constraint."""


@dataclass(frozen=True)
class PackingLp:
    objective: np.ndarray  # (n,) nonnegative
    matrix: np.ndarray     # (m, n) nonnegative
    rhs: np.ndarray        # (m,) strictly positive

    @property
    def nvars(self) -> int:
        return self.objective.shape[0]

    @property
    def nrows(self) -> int:
        return self.matrix.shape[0]


def packing_lp(objective, matrix, rhs) -> PackingLp:
    c = np.asarray(objective, dtype=float)
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape != (b.shape[0], c.shape[0]):
        raise ValueError("matrix shape does not match objective/rhs")
    if (c < 0).any() or (a < 0).any():
        raise ValueError("packing data must be nonnegative")
    if (b <= 0).any():
        raise ValueError("rhs must be strictly positive")
    return PackingLp(c, a, b)


@dataclass(frozen=True)
class PackingSolution:
    x: np.ndarray
    objective_value: float


def _solve_batch(c, a_hat, rng, restarts, iters, eta, step) -> np.ndarray:
    """All restarts at once on the row-normalized system a_hat x <= 1.

    Returns an (restarts, n) array of the best rescaled iterate per run.
    """
    n = a_hat.shape[1]
    colmax = a_hat.max(axis=0)
    live = (c > 0) & (colmax > 0)
    x = np.zeros((restarts, n))
    # tiny random starts keep ties broken differently across restarts
    x[:, live] = (0.5 + 0.5 * rng.random((restarts, int(live.sum())))) \
        / (n * colmax[live])
    best_x = x.copy()
    best_val = np.full(restarts, -1.0)
    at = a_hat.T
    for _ in range(iters):
        load = x @ at
        top = load.max(axis=1)
        ok = top > 0
        if ok.any():
            val = (x @ c) / np.where(ok, top, 1.0)
            better = ok & (val > best_val)
            if better.any():
                best_val[better] = val[better]
                best_x[better] = x[better] / top[better, None]
        w = np.exp(eta * (load - top[:, None]))
        w /= w.sum(axis=1, keepdims=True)
        price = w @ a_hat
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = np.where(live[None, :], c[None, :] / price, 0.0)
        theta = ratio.max(axis=1)
        good = np.isfinite(theta) & (theta > 0)
        if not good.any():
            break
        grow = good[:, None] & live[None, :] & (ratio >= theta[:, None] * 0.85)
        x = np.where(grow, x * (1.0 + step), x)
    return best_x


def _extract_x(tab, basis, n):
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = max(tab[i, -1], 0.0)
    return x


def _pivot(tab, basis, i, j):
    tab[i] /= tab[i, j]
    factor = tab[:, j].copy()
    factor[i] = 0.0
    tab -= np.outer(factor, tab[i])
    basis[i] = j


def _crossover_simplex(c, a_hat) -> Optional[np.ndarray]:
    """Exact-face interior point of max c.x s.t. a_hat x <= 1, x >= 0.

    Phase A is a plain tableau simplex from the all-slack basis (feasible
    because the rhs is 1, so no phase 1 is needed). Phase B then walks the
    optimal face: restricted to zero-reduced-cost pivots it maximizes the
    slacks of the still-tight rows, iteratively dropping rows that gain
    slack, and averages the points it visits. In the returned point a
    constraint is tight iff it is tight in *every* optimum, which is what
    downstream tightness-based logic needs to be stable. Returns None when
    an iteration cap is hit or an unbounded direction shows up.
    """
    m, n = a_hat.shape
    tol = 1e-9
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a_hat
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = 1.0
    tab[-1, :n] = -c
    basis = list(range(n, n + m))
    cap = 25 * (m + n) + 200

    def run(obj_row, allowed=None, cap=cap):
        """Minimize obj_row (a view into tab) by pivoting; True on success."""
        for it in range(cap):
            obj = obj_row[:n + m]
            if allowed is not None:
                obj = np.where(allowed, obj, 0.0)
            if it < 3 * cap // 4:
                j = int(np.argmin(obj))
                if obj[j] >= -tol:
                    return True
            else:
                # Bland's rule guards against cycling near the end
                cand = np.nonzero(obj < -tol)[0]
                if cand.size == 0:
                    return True
                j = int(cand[0])
            col = tab[:m, j]
            pos = col > tol
            if not pos.any():
                return None  # unbounded
            ratios = np.where(pos, tab[:m, -1] / np.where(pos, col, 1.0),
                              np.inf)
            _pivot(tab, basis, int(np.argmin(ratios)), j)
        return False

    if not run(tab[-1]):
        return None
    points = [_extract_x(tab, basis, n)]

    # phase B: entering columns must keep the objective optimal
    allowed = tab[-1, :n + m] <= tol
    slack_cols = np.arange(n, n + m)
    target = [r for r in range(m)
              if (1.0 - a_hat @ points[0])[r] <= 1e-7]
    cap_b = 3 * (m + n) // 2 + 50
    for _ in range(2):
        if not target:
            break
        srow = np.zeros(n + m + 1)
        srow[slack_cols[target]] = -1.0
        for i, bi in enumerate(basis):
            if srow[bi] != 0.0:
                srow -= srow[bi] * tab[i]
        sub = run(srow, allowed, cap=cap_b)
        if sub is False:
            break
        if sub is None:
            # slack unbounded inside the face: certainly not always-tight
            pass
        x = _extract_x(tab, basis, n)
        points.append(x)
        slack = 1.0 - a_hat @ x
        still = [r for r in target if slack[r] <= 1e-9]
        if len(still) == len(target):
            break
        target = still
    return np.mean(points, axis=0)


def _saturation_sweep(c, a_hat, x) -> np.ndarray:
    """Push single coordinates up to their bottleneck, by value."""
    slack = 1.0 - a_hat @ x
    np.maximum(slack, 0.0, out=slack)
    x = x.copy()
    for j in np.argsort(-c):
        if c[j] <= 0:
            continue
        col = a_hat[:, j]
        rows = col > 0
        if not rows.any():
            continue
        room = float((slack[rows] / col[rows]).min())
        if room > 0:
            x[j] += room
            slack -= room * col
            np.maximum(slack, 0.0, out=slack)
    return x


def solve_packing(lp: PackingLp, eps: float = 0.2, seed: int = 0,
                  restarts: int = 5,
                  iters: Optional[int] = None) -> PackingSolution:
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    c = lp.objective
    a = lp.matrix
    b = lp.rhs
    n = lp.nvars
    colmax_raw = a.max(axis=0) if lp.nrows else np.zeros(n)
    if ((c > 0) & (colmax_raw == 0)).any():
        raise UnboundedPackingError(
            "positive-objective variable appears in no constraint")
    if lp.nrows == 0 or not (c > 0).any():
        return PackingSolution(np.zeros(n), 0.0)

    a_hat = a / b[:, None]
    polish = lp.nrows * n <= 120_000
    if iters is None:
        # the basis polish below dwarfs the iterate quality on small
        # problems, so a short run suffices as the guaranteed floor there
        iters = min(int(180 / eps), 120) if polish else int(180 / eps)
    eta = 8.0 / eps
    step = eps / 10.0

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    runs = _solve_batch(c, a_hat, rng, max(1, restarts), iters, eta, step)
    best = None
    for x in runs:
        top = (a_hat @ x).max()
        if top > 1.0:
            x = x / top
        x = _saturation_sweep(c, a_hat, x)
        # the sweep works in floats; clamp before judging the restart
        top = (a_hat @ x).max()
        if top > 1.0:
            x = x / top
        val = float(c @ x)
        if best is None or val > best[1]:
            best = (x, val)

    if polish:
        # deterministic polish on small problems; the returned point sits in
        # the relative interior of the optimal face, so downstream
        # tightness-based logic sees forced rows, not one vertex's choices
        x = _crossover_simplex(c, a_hat)
        if x is not None:
            top = (a_hat @ x).max()
            if top > 1.0:
                x = x / top
            val = float(c @ x)
            if val > best[1]:
                best = (x, val)

    x, val = best
    # float row sums can overshoot capacities by rounding slivers; verify
    # in exact arithmetic and, if needed, rescale with a margin comfortably
    # above any accumulated float error so feasibility holds exactly
    top = Fraction(0)
    for i in range(lp.nrows):
        used = sum(Fraction(float(a[i, j])) * Fraction(float(x[j]))
                   for j in np.nonzero(a[i])[0])
        ratio = used / Fraction(float(b[i]))
        if ratio > top:
            top = ratio
    if top > 1:
        x = x * float(1 / (top * (1 + Fraction(1, 1 << 40))))
        val = float(c @ x)
    return PackingSolution(x, val)
