"""Exact rational linear programming and rational linear algebra.

A dense two-phase simplex with Bland's rule over exact rationals
(gmpy2.mpq when available, else fractions.Fraction). Every optimal solve
returns a matching dual certificate; strong duality and complementary
slackness are checked exactly before a solution is handed out.

LPs with many rows and few variables (the typical shape in the nucleolus
scheme, where rows are coalitions) are solved through their explicit dual
so the simplex basis stays small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .games import Coalition, DimensionError, members

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _Q = Fraction

Rat = Union[int, Fraction, str]

LE, EQ, GE = "<=", "=", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpInternalError(RuntimeError):
    """Exact self-certification of an LP solution failed."""


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(int(v.numerator), int(v.denominator)) if hasattr(v, "numerator") \
        else Fraction(v)


def _q(v):
    if isinstance(v, float):
        return _Q(Fraction(v))
    if isinstance(v, Fraction):
        return _Q(v.numerator, v.denominator)
    return _Q(v)


@dataclass
class LinearProgram:
    """max/min objective . x subject to rows (coeffs, relation, rhs).

    `lower[j]` may be 0 (nonnegative variable) or None (free); upper bounds
    are not supported directly -- add them as rows.
    """

    objective: Sequence[Rat]
    rows: list[tuple[Sequence[Rat], str, Rat]] = field(default_factory=list)
    maximize: bool = True
    lower: Optional[Sequence[Optional[int]]] = None  # entries 0 or None

    @property
    def nvars(self) -> int:
        return len(self.objective)

    def add_row(self, coeffs: Sequence[Rat], rel: str, rhs: Rat) -> None:
        if rel not in (LE, EQ, GE):
            raise ValueError(f"unknown relation {rel!r}")
        if len(coeffs) != self.nvars:
            raise DimensionError("row width does not match objective")
        self.rows.append((coeffs, rel, rhs))

    def _lower(self) -> list[Optional[int]]:
        if self.lower is None:
            return [None] * self.nvars
        if len(self.lower) != self.nvars:
            raise DimensionError("one bound entry per variable required")
        return list(self.lower)

    def dump(self) -> str:
        """Plain-text inequality form, for debugging."""
        sense = "max" if self.maximize else "min"
        lines = [f"{sense} " + " + ".join(f"{_to_fraction(_q(c))}*x{j}"
                                          for j, c in enumerate(self.objective))]
        for coeffs, rel, rhs in self.rows:
            lhs = " + ".join(f"{_to_fraction(_q(c))}*x{j}"
                             for j, c in enumerate(coeffs) if _q(c) != 0)
            lines.append(f"  {lhs or '0'} {rel} {_to_fraction(_q(rhs))}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: str
    primal: Optional[list[Fraction]] = None
    dual: Optional[list[Fraction]] = None
    objective_value: Optional[Fraction] = None
    #: Farkas vector over rows (infeasible) or improving ray (unbounded)
    certificate: Optional[list[Fraction]] = None


# ---------------------------------------------------------------------------
# standard-form core: min c.x  s.t.  A x = b, x >= 0


def _pivot(tab, cost, basis, r, c):
    prow = tab[r]
    piv = prow[c]
    if piv != 1:
        inv = 1 / piv
        prow = [v * inv for v in prow]
        tab[r] = prow
    # pivot rows are often sparse (0/1 incidence data); skipping the zero
    # columns avoids the dominant share of exact-arithmetic work
    nz = [j for j, v in enumerate(prow) if v]
    sparse = 3 * len(nz) < len(prow)
    for i, row in enumerate(tab):
        if i != r:
            f = row[c]
            if f:
                if sparse:
                    row = list(row)
                    for j in nz:
                        row[j] -= f * prow[j]
                    tab[i] = row
                else:
                    tab[i] = [a - f * b if b else a
                              for a, b in zip(row, prow)]
    f = cost[c]
    if f:
        cost[:] = [a - f * b if b else a for a, b in zip(cost, prow)]
    basis[r] = c


def _run_simplex(tab, cost, basis, barred):
    """Dantzig's rule with a Bland fallback for anti-cycling.

    Returns 'optimal' or ('unbounded', entering_col)."""
    ncols = len(cost) - 1
    while True:
        enter = -1
        for j in range(ncols):
            if j not in barred and cost[j] < 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL, -1
        leave = -1
        best = None
        for i, row in enumerate(tab):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED, enter
        _pivot(tab, cost, basis, leave, enter)


def _standard_solve(a_rows, b, c):
    """min c.x s.t. a_rows x = b, x >= 0 (exact).

    Returns (status, x, y, obj, extra) where y are the equality duals and
    extra is a Farkas vector (infeasible) or ray (unbounded) in x-space.
    """
    m = len(a_rows)
    n = len(c)
    zero = _Q(0)
    # flip rows to make rhs nonnegative, then append one artificial per row
    tab = []
    bq = []
    row_sign = []
    for i in range(m):
        row = list(a_rows[i])
        rhs = b[i]
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            row_sign.append(-1)
        else:
            row_sign.append(1)
        art = [zero] * m
        art[i] = _Q(1)
        tab.append(row + art + [rhs])
        bq.append(rhs)
    basis = list(range(n, n + m))
    ncols = n + m

    # phase 1: minimize sum of artificials
    cost = [zero] * (ncols + 1)
    for j in range(n):
        cost[j] = -sum(row[j] for row in tab)
    cost[-1] = -sum(bq)
    status, _ = _run_simplex(tab, cost, basis, barred=set())
    assert status == OPTIMAL
    if -cost[-1] > 0:
        # infeasible; Farkas vector y = phase-1 duals (rc(art_i) = 1 - y_i),
        # mapped back through the rhs sign flips
        farkas = [row_sign[i] * (1 - cost[n + i]) for i in range(m)]
        return INFEASIBLE, None, None, None, farkas

    # drive leftover artificials (basic at zero) out of the basis, else a
    # degenerate basis can fake an unbounded ray in phase 2
    for i in range(m):
        if basis[i] >= n:
            piv = next((j for j in range(n) if tab[i][j] != 0), -1)
            if piv >= 0:
                _pivot(tab, cost, basis, i, piv)

    # phase 2: minimize real objective, artificials barred from entering
    barred = set(range(n, ncols))
    cost = [zero] * (ncols + 1)
    for j in range(ncols):
        cj = c[j] if j < n else zero
        cost[j] = cj - sum(c[basis[i]] * tab[i][j] for i in range(m)
                           if basis[i] < n)
    cost[-1] = -sum(c[basis[i]] * tab[i][-1] for i in range(m) if basis[i] < n)
    status, enter = _run_simplex(tab, cost, basis, barred)
    if status == UNBOUNDED:
        ray = [zero] * n
        ray[enter] = _Q(1)
        for i in range(m):
            if basis[i] < n:
                ray[basis[i]] = -tab[i][enter]
        return UNBOUNDED, None, None, None, ray

    x = [zero] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][-1]
    # duals read off the artificial columns: rc(art_i) = -y_i in phase 2,
    # mapped back through the internal rhs sign flips
    y = [-row_sign[i] * cost[n + i] for i in range(m)]
    obj = -cost[-1]
    return OPTIMAL, x, y, obj, None


# ---------------------------------------------------------------------------
# general-form interface


def _normalized(lp: LinearProgram):
    """Rows with GE flipped to LE; returns (rows, flips) in exact arithmetic."""
    rows = []
    flips = []
    for coeffs, rel, rhs in lp.rows:
        cq = [_q(v) for v in coeffs]
        rq = _q(rhs)
        if rel == GE:
            rows.append(([-v for v in cq], LE, -rq))
            flips.append(-1)
        else:
            rows.append((cq, rel, rq))
            flips.append(1)
    return rows, flips


def _solve_primal(lp: LinearProgram) -> LpSolution:
    nv = lp.nvars
    lower = lp._lower()
    rows, flips = _normalized(lp)
    sgn = -1 if lp.maximize else 1  # core minimizes

    # column layout: free var -> (+,-) pair; nonneg var -> single column
    cols = []  # per original var: (col_index, split?)
    k = 0
    for j in range(nv):
        if lower[j] is None:
            cols.append((k, True))
            k += 2
        elif lower[j] == 0:
            cols.append((k, False))
            k += 1
        else:
            raise ValueError("lower bounds other than 0/None are not supported")
    nstd = k + len(rows)  # plus one slack per LE row (0 coeff for EQ)

    obj = [_q(v) for v in lp.objective]
    c_std = [_Q(0)] * nstd
    for j in range(nv):
        base, split = cols[j]
        c_std[base] = sgn * obj[j]
        if split:
            c_std[base + 1] = -sgn * obj[j]

    a_std = []
    b_std = []
    for i, (coeffs, rel, rhs) in enumerate(rows):
        row = [_Q(0)] * nstd
        for j in range(nv):
            v = coeffs[j]
            if v:
                base, split = cols[j]
                row[base] = v
                if split:
                    row[base + 1] = -v
        if rel == LE:
            row[k + i] = _Q(1)
        a_std.append(row)
        b_std.append(rhs)

    status, x_std, y_std, obj_std, extra = _standard_solve(a_std, b_std, c_std)
    if status == INFEASIBLE:
        farkas = [_to_fraction(flips[i] * extra[i]) for i in range(len(rows))]
        return LpSolution(INFEASIBLE, certificate=farkas)
    if status == UNBOUNDED:
        ray = []
        for j in range(nv):
            base, split = cols[j]
            d = extra[base] - extra[base + 1] if split else extra[base]
            ray.append(_to_fraction(d))
        return LpSolution(UNBOUNDED, certificate=ray)

    x = []
    for j in range(nv):
        base, split = cols[j]
        v = x_std[base] - x_std[base + 1] if split else x_std[base]
        x.append(v)
    dual = [sgn * flips[i] * y_std[i] for i in range(len(rows))]
    value = sgn * obj_std if lp.maximize else obj_std
    return _certified(lp, x, dual, value)


def _certified(lp: LinearProgram, x, dual, value) -> LpSolution:
    """Exact primal/dual feasibility, complementary slackness, strong duality."""
    obj = [_q(v) for v in lp.objective]
    got = sum(c * v for c, v in zip(obj, x))
    if got != value:
        raise LpInternalError("objective mismatch")
    lower = lp._lower()
    for j in range(lp.nvars):
        if lower[j] == 0 and x[j] < 0:
            raise LpInternalError("primal bound violated")
    dual_rhs = _Q(0)
    at_y = [_Q(0)] * lp.nvars
    for i, (coeffs, rel, rhs) in enumerate(lp.rows):
        cq = [_q(v) for v in coeffs]
        rq = _q(rhs)
        lhs = sum(c * v for c, v in zip(cq, x))
        if rel == EQ and lhs != rq:
            raise LpInternalError("equality row violated")
        if rel == LE and lhs > rq:
            raise LpInternalError("<= row violated")
        if rel == GE and lhs < rq:
            raise LpInternalError(">= row violated")
        yi = dual[i]
        if yi:
            if lhs != rq:
                raise LpInternalError("complementary slackness violated")
            want = 1 if lp.maximize else -1
            if rel == LE and (yi > 0) != (want > 0) and yi != 0:
                raise LpInternalError("dual sign violated on <= row")
            if rel == GE and (yi < 0) != (want > 0) and yi != 0:
                raise LpInternalError("dual sign violated on >= row")
        dual_rhs += yi * rq
        for j in range(lp.nvars):
            if cq[j]:
                at_y[j] += yi * cq[j]
    for j in range(lp.nvars):
        diff = at_y[j] - obj[j]
        if lower[j] is None:
            if diff != 0:
                raise LpInternalError("dual feasibility violated (free var)")
        else:
            # nonneg var: reduced cost sign depends on sense; x_j > 0 -> tight
            ok = diff >= 0 if lp.maximize else diff <= 0
            if not ok:
                raise LpInternalError("dual feasibility violated")
            if x[j] > 0 and diff != 0:
                raise LpInternalError("complementary slackness violated (var)")
    if dual_rhs != value:
        raise LpInternalError("strong duality violated")
    return LpSolution(OPTIMAL,
                      primal=[_to_fraction(v) for v in x],
                      dual=[_to_fraction(v) for v in dual],
                      objective_value=_to_fraction(value))


def _dual_program(lp: LinearProgram):
    """Explicit dual of a max-form LP with rows normalized to LE/EQ."""
    rows, flips = _normalized(lp)
    lower = lp._lower()
    obj = [_q(v) for v in lp.objective]
    m = len(rows)
    dual = LinearProgram(objective=[rhs for _, _, rhs in rows],
                         maximize=False,
                         lower=[0 if rel == LE else None for _, rel, _ in rows])
    for j in range(lp.nvars):
        col = [rows[i][0][j] for i in range(m)]
        rel = EQ if lower[j] is None else GE
        dual.add_row(col, rel, obj[j])
    return dual, flips


def _solve_via_dual(lp: LinearProgram) -> LpSolution:
    if not lp.maximize:
        neg = LinearProgram([-_q(v) for v in lp.objective], list(lp.rows),
                            maximize=True, lower=lp.lower)
        sol = _solve_via_dual(neg)
        if sol.status == OPTIMAL:
            return LpSolution(OPTIMAL, primal=sol.primal,
                              dual=[-d for d in sol.dual],
                              objective_value=-sol.objective_value)
        return sol

    dual_lp, flips = _dual_program(lp)
    dsol = _solve_primal(dual_lp)
    if dsol.status == UNBOUNDED:
        return LpSolution(INFEASIBLE, certificate=dsol.certificate)
    if dsol.status == INFEASIBLE:
        return _solve_primal(lp)  # unbounded or infeasible: disambiguate directly
    # primal of the dual = our dual (undo GE flips); duals of the dual = our primal
    y = [flips[i] * _q(v) for i, v in enumerate(dsol.primal)]
    x = [_q(v) for v in dsol.dual]
    value = _q(dsol.objective_value)
    return _certified(lp, x, y, value)


def solve(lp: LinearProgram, method: str = "auto") -> LpSolution:
    """Exact LP solve with certified optimal primal/dual pair.

    method: 'primal', 'dual' (solve the explicit dual; pays off when there
    are many more rows than variables), or 'auto'.
    """
    if method == "auto":
        method = "dual" if len(lp.rows) > 3 * lp.nvars + 10 else "primal"
    if method == "dual":
        return _solve_via_dual(lp)
    return _solve_primal(lp)


# ---------------------------------------------------------------------------
# rational span tracking for coalition incidence vectors


@dataclass(frozen=True)
class SpanBasis:
    """Reduced-echelon rational basis of a set of incidence vectors."""

    n: int
    rows: tuple[tuple[Fraction, ...], ...] = ()
    pivots: tuple[int, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.rows)

    def is_full(self) -> bool:
        return self.rank == self.n


def empty_basis(n: int) -> SpanBasis:
    return SpanBasis(n)


def incidence(s: Coalition, n: int) -> tuple[Fraction, ...]:
    vec = [Fraction(0)] * n
    for p in members(s):
        if p >= n:
            raise DimensionError(f"player {p} outside 0..{n - 1}")
        vec[p] = Fraction(1)
    return tuple(vec)


def _reduce(basis: SpanBasis, vec: Sequence[Fraction]) -> list[Fraction]:
    v = list(vec)
    for row, piv in zip(basis.rows, basis.pivots):
        f = v[piv]
        if f:
            for j in range(basis.n):
                if row[j]:
                    v[j] -= f * row[j]
    return v

def in_span(basis: SpanBasis, s: Union[Coalition, Sequence[Fraction]]) -> bool:
    """Whether the incidence vector of `s` lies in span(basis), exactly."""
    vec = incidence(s, basis.n) if isinstance(s, int) else s
    if len(vec) != basis.n:
        raise DimensionError("vector length does not match basis dimension")
    return not any(_reduce(basis, vec))


def extend_basis(basis: SpanBasis, s: Union[Coalition, Sequence[Fraction]]) -> tuple[SpanBasis, bool]:
    """Returns (new_basis, added). Rank grows by one iff `s` was independent."""
    vec = incidence(s, basis.n) if isinstance(s, int) else list(s)
    if len(vec) != basis.n:
        raise DimensionError("vector length does not match basis dimension")
    red = _reduce(basis, vec)
    piv = next((j for j, v in enumerate(red) if v), -1)
    if piv < 0:
        return basis, False
    inv = 1 / red[piv]
    new_row = tuple(v * inv for v in red)
    rows = [list(r) for r in basis.rows]
    for r in rows:
        f = r[piv]
        if f:
            for j in range(basis.n):
                if new_row[j]:
                    r[j] -= f * new_row[j]
    rows.append(list(new_row))
    pivots = list(basis.pivots) + [piv]
    order = sorted(range(len(rows)), key=lambda i: pivots[i])
    return SpanBasis(basis.n,
                     tuple(tuple(rows[i]) for i in order),
                     tuple(pivots[i] for i in order)), True
