"""Iterative LP scheme for the nucleolus and the happy nucleolus over
explicit coalition families, together with a slow independent oracle and
core-set membership checks.

Each stage maximizes the minimum excess over coalitions whose incidence
vectors are not yet spanned by the fixed family, then fixes every coalition
carrying a nonzero optimal dual. The scheme terminates in at most n stages
with the allocation pinned by the fixed equalities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional, Sequence

from .games import (
    Allocation, Coalition, Game, SizeGuardError, allocation, coalition_sum,
    grand, members,
)
from .ratlp import (
    EQ, LE, OPTIMAL, UNBOUNDED, LinearProgram, SpanBasis, empty_basis,
    extend_basis, in_span, solve,
)

Mode = Literal["nucleolus", "happy"]

BRUTEFORCE_LIMIT = 8


class MpsError(RuntimeError):
    """A stage LP came back infeasible/unbounded on supposedly valid input."""


class InsufficientFamilyError(ValueError):
    """The coalition family does not bound the total-value LP."""


def default_family(n: int) -> list[Coalition]:
    """All nonempty coalitions (the empty one lies in every span)."""
    return list(range(1, 1 << n))


def total_value(game: Game, family: Sequence[Coalition], mode: Mode) -> Fraction:
    """Total value V: c(P) for the nucleolus; for the happy variant the
    maximum total of any allocation that keeps every family coalition
    happy, solved as one exact LP."""
    if mode == "nucleolus":
        return game.cost(grand(game.n))
    if mode != "happy":
        raise ValueError(f"unknown mode {mode!r}")
    n = game.n
    lp = LinearProgram(objective=[1] * n)
    for s in family:
        if s == 0:
            continue
        row = [1 if s >> p & 1 else 0 for p in range(n)]
        lp.add_row(row, LE, game.cost(s))
    sol = solve(lp)
    if sol.status == UNBOUNDED:
        raise InsufficientFamilyError(
            "happiness LP unbounded: family too sparse (missing singletons?)")
    if sol.status != OPTIMAL:
        raise MpsError(f"happiness LP came back {sol.status}")
    return sol.objective_value


@dataclass
class MpsState:
    """Fixed coalitions with their recorded excess targets, the rational
    basis of their incidence span, and the total value V."""

    n: int
    total: Fraction
    fixed: list[tuple[Coalition, Fraction]] = field(default_factory=list)
    basis: SpanBasis = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.basis is None:
            self.basis = empty_basis(self.n)


def _stage_lp(state: MpsState, family: Sequence[Coalition], game: Game):
    """LP of one stage; variables are (xi, y_0..y_{n-1}).

    Returns (lp, ineq) where ineq maps inequality row index -> coalition.
    Coalitions already in span(fixed) are skipped, as is the empty one.
    """
    n = game.n
    lp = LinearProgram(objective=[1] + [0] * n)
    for s, xs in state.fixed:
        lp.add_row([0] + [1 if s >> p & 1 else 0 for p in range(n)], EQ,
                   game.cost(s) - xs)
    lp.add_row([0] + [1] * n, EQ, state.total)
    ineq = {}
    for s in family:
        if s == 0 or in_span(state.basis, s):
            continue
        lp.add_row([1] + [1 if s >> p & 1 else 0 for p in range(n)], LE,
                   game.cost(s))
        ineq[len(lp.rows) - 1] = s
    return lp, ineq


def build_stage_lp(state: MpsState, family: Sequence[Coalition], game: Game) -> LinearProgram:
    return _stage_lp(state, family, game)[0]


@dataclass
class StageRecord:
    xi: Fraction
    fixed: list[Coalition]
    rank: int

    def to_json(self) -> dict:
        from .jsonio import format_rational
        return {"xi": format_rational(self.xi),
                "fixed": [list(members(s)) for s in self.fixed],
                "rank": self.rank}


def mps_run(game: Game, family: Optional[Sequence[Coalition]] = None,
            mode: Mode = "nucleolus") -> tuple[tuple[Fraction, ...], list[StageRecord]]:
    """Exact (happy) nucleolus over the family; returns (allocation, trace)."""
    n = game.n
    if family is None:
        family = default_family(n)
    if n == 1:
        c1 = game.cost(1)
        return (c1,), [StageRecord(Fraction(0), [1], 1)]
    state = MpsState(n, total_value(game, family, mode))
    trace: list[StageRecord] = []
    y = None
    while not state.basis.is_full():
        lp, ineq = _stage_lp(state, family, game)
        sol = solve(lp)
        if sol.status != OPTIMAL:
            raise MpsError(f"stage LP came back {sol.status}")
        xi = sol.primal[0]
        y = sol.primal[1:]
        newly = []
        for idx, s in ineq.items():
            if sol.dual[idx] != 0:
                state.fixed.append((s, xi))
                state.basis, added = extend_basis(state.basis, s)
                newly.append(s)
        if not newly:
            raise MpsError("stage fixed no coalition; optimal dual degenerate?")
        rank_before = trace[-1].rank if trace else 0
        trace.append(StageRecord(xi, newly, state.basis.rank))
        if state.basis.rank == rank_before:
            raise MpsError("span did not grow; scheme would not terminate")
        if len(trace) > n:
            raise MpsError("more stages than players; scheme is broken")
    return tuple(y), trace


# ---------------------------------------------------------------------------
# slow independent oracle: the plain sequential-LP method


def bruteforce_lexi(game: Game, mode: Mode = "nucleolus") -> tuple[Fraction, ...]:
    """(Happy) nucleolus by repeatedly maximizing the minimum excess and
    freezing every coalition that is tight in all optima, without span
    tracking. Exact reference for cross-validation; n <= 8."""
    n = game.n
    if n > BRUTEFORCE_LIMIT:
        raise SizeGuardError(f"bruteforce oracle capped at n={BRUTEFORCE_LIMIT}")
    if n == 1:
        return (game.cost(1),)
    family = default_family(n)
    total = total_value(game, family, mode)
    frozen: dict[Coalition, Fraction] = {}

    def build(extra_obj=None, pin_xi=None):
        lp = LinearProgram(objective=extra_obj or ([1] + [0] * n))
        for s, e in frozen.items():
            lp.add_row([0] + [1 if s >> p & 1 else 0 for p in range(n)], EQ,
                       game.cost(s) - e)
        lp.add_row([0] + [1] * n, EQ, total)
        for s in family:
            if s not in frozen:
                lp.add_row([1] + [1 if s >> p & 1 else 0 for p in range(n)], LE,
                           game.cost(s))
        if pin_xi is not None:
            lp.add_row([1] + [0] * n, EQ, pin_xi)
        return lp

    while True:
        sol = solve(build())
        if sol.status != OPTIMAL:
            raise MpsError(f"oracle stage LP came back {sol.status}")
        xi = sol.primal[0]
        y = sol.primal[1:]
        progressed = False
        for s in family:
            if s in frozen:
                continue
            if game.cost(s) - coalition_sum(y, s) != xi:
                continue  # not even tight at this optimum
            probe = [0] + [-(1 if s >> p & 1 else 0) for p in range(n)]
            psol = solve(build(extra_obj=probe, pin_xi=xi))
            if psol.status != OPTIMAL:
                raise MpsError("tightness probe failed")
            # max of c(S) - y(S) - xi over all optima
            if psol.objective_value + game.cost(s) - xi == 0:
                frozen[s] = xi
                progressed = True
        if not progressed:
            raise MpsError("no coalition tight in all optima; cannot make progress")
        vecs = [[1] * n] + [[1 if s >> p & 1 else 0 for p in range(n)]
                            for s in frozen]
        if _rank(vecs) == n:
            break
    return tuple(_solve_equalities(game, frozen, total, n))


def _rank(vectors) -> int:
    rows = [[Fraction(v) for v in r] for r in vectors]
    rank = 0
    for col in range(len(rows[0])):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [v - f * w for v, w in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _solve_equalities(game: Game, frozen, total, n):
    """y from the frozen equalities plus y(P)=total (full rank by caller)."""
    rows = [[Fraction(1)] * n + [Fraction(total)]]
    for s, e in frozen.items():
        rows.append([Fraction(1 if s >> p & 1 else 0) for p in range(n)]
                    + [game.cost(s) - e])
    rank = 0
    pivots = []
    for col in range(n):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [v - f * w for v, w in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    y = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        y[col] = rows[i][n]
    return y


# ---------------------------------------------------------------------------
# core sets


def least_core(game: Game, family: Sequence[Coalition]) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Smallest eps such that some y with y(P)=c(P) satisfies
    y(S) <= c(S) + eps for every proper nonempty family coalition."""
    n = game.n
    p_all = grand(n)
    lp = LinearProgram(objective=[1] + [0] * n, maximize=False)
    lp.add_row([0] + [1] * n, EQ, game.cost(p_all))
    for s in family:
        if s == 0 or s == p_all:
            continue
        lp.add_row([-1] + [1 if s >> p & 1 else 0 for p in range(n)], LE,
                   game.cost(s))
    sol = solve(lp)
    if sol.status != OPTIMAL:
        raise MpsError(f"least-core LP came back {sol.status}")
    return sol.primal[0], tuple(sol.primal[1:])


CoreKind = Literal["core", "happy_core", "extended_happy_core"]


def core_membership(game: Game, y: Allocation, family: Sequence[Coalition],
                    which: CoreKind = "core"):
    """Membership check with a certificate: the violated constraint (as a
    coalition, or 'total') on failure, or a dominating witness allocation
    for the extended happy core."""
    n = game.n
    y = allocation(y)
    p_all = grand(n)

    def happiness_violation():
        for s in family:
            if s and game.cost(s) < coalition_sum(y, s):
                return s
        return None

    if which == "core":
        if coalition_sum(y, p_all) != game.cost(p_all):
            return False, "total"
        s = happiness_violation()
        return (True, None) if s is None else (False, s)
    if which == "happy_core":
        if coalition_sum(y, p_all) != total_value(game, family, "happy"):
            return False, "total"
        s = happiness_violation()
        return (True, None) if s is None else (False, s)
    if which == "extended_happy_core":
        if coalition_sum(y, p_all) != game.cost(p_all):
            return False, "total"
        vh = total_value(game, family, "happy")
        lp = LinearProgram(objective=[0] * n)
        lp.add_row([1] * n, EQ, vh)
        for s in family:
            if s:
                lp.add_row([1 if s >> p & 1 else 0 for p in range(n)], LE,
                           game.cost(s))
        for p in range(n):
            row = [0] * n
            row[p] = 1
            lp.add_row(row, LE, y[p])
        sol = solve(lp)
        if sol.status == OPTIMAL:
            return True, tuple(sol.primal)
        return False, None
    raise ValueError(f"unknown core kind {which!r}")
