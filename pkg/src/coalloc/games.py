"""Core domain model: players, coalitions, cost oracles and excess arithmetic.

Coalitions are plain ints used as bitmasks over player indices 0..n-1.
Exact-path allocations and costs are `fractions.Fraction`; the vehicle
routing heuristic works with floats instead and never enumerates 2^n.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

Coalition = int
Rational = Union[Fraction, int]

EMPTY: Coalition = 0

#: games larger than this refuse full 2^n enumeration
ENUMERATION_LIMIT = 20
#: exhaustive monotonicity / subadditivity checks are capped here
CHECK_LIMIT = 12


class SizeGuardError(ValueError):
    """An operation would enumerate more coalitions than its guard allows."""


class DimensionError(ValueError):
    """Mismatched player count between a game and an allocation/coalition."""


def coalition(players: Iterable[int]) -> Coalition:
    mask = 0
    for p in players:
        if p < 0:
            raise ValueError(f"negative player index {p}")
        mask |= 1 << p
    return mask


def members(s: Coalition) -> tuple[int, ...]:
    out = []
    p = 0
    while s:
        if s & 1:
            out.append(p)
        s >>= 1
        p += 1
    return tuple(out)


def size(s: Coalition) -> int:
    return s.bit_count()


def grand(n: int) -> Coalition:
    return (1 << n) - 1


def all_coalitions(n: int, include_empty: bool = True) -> Iterator[Coalition]:
    if n > ENUMERATION_LIMIT:
        raise SizeGuardError(f"refusing to enumerate 2^{n} coalitions (limit {ENUMERATION_LIMIT})")
    return iter(range(0 if include_empty else 1, 1 << n))


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v)
    return Fraction(v)


class Game:
    """Cost oracle over coalitions with c(empty) = 0.

    Subclasses implement `_cost`; results are memoized keyed by coalition
    bits. The memo is lock-protected so oracles are safe for concurrent
    evaluation.
    """

    def __init__(self, n: int, *, monotone: Optional[bool] = None,
                 subadditive: Optional[bool] = None):
        if n < 1:
            raise ValueError("need at least one player")
        self.n = n
        self.monotone = monotone
        self.subadditive = subadditive
        self._cache: dict[Coalition, Fraction] = {EMPTY: Fraction(0)}
        self._lock = threading.Lock()

    def validate(self, s: Coalition) -> None:
        if s < 0 or s >= (1 << self.n):
            raise DimensionError(f"coalition {bin(s)} invalid for {self.n} players")

    def cost(self, s: Coalition) -> Fraction:
        self.validate(s)
        with self._lock:
            cached = self._cache.get(s)
        if cached is not None:
            return cached
        value = _as_fraction(self._cost(s))
        with self._lock:
            self._cache[s] = value
        return value

    def _cost(self, s: Coalition) -> Rational:
        raise NotImplementedError


class ExplicitGame(Game):
    """Game defined by an explicit coalition -> cost table.

    Unlisted coalitions default to the sum of the listed singleton costs of
    their members (additive extension); a fully explicit table needs no
    default.
    """

    def __init__(self, n: int, costs: dict[Coalition, Rational], **flags):
        super().__init__(n, **flags)
        self._table = {s: _as_fraction(v) for s, v in costs.items()}
        if self._table.get(EMPTY, Fraction(0)) != 0:
            raise ValueError("c(empty) must be 0")

    def _cost(self, s: Coalition) -> Fraction:
        v = self._table.get(s)
        if v is not None:
            return v
        total = Fraction(0)
        for p in members(s):
            w = self._table.get(1 << p)
            if w is None:
                raise KeyError(f"no cost listed for coalition {members(s)} "
                               f"and no singleton cost for player {p}")
            total += w
        return total


class OracleGame(Game):
    """Game wrapping an arbitrary cost callable."""

    def __init__(self, n: int, fn: Callable[[Coalition], Rational], **flags):
        super().__init__(n, **flags)
        self._fn = fn

    def _cost(self, s: Coalition) -> Rational:
        return self._fn(s)


Allocation = Sequence[Fraction]


def allocation(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(_as_fraction(v) for v in values)


def coalition_sum(y: Allocation, s: Coalition):
    total = 0
    for p in members(s):
        total = y[p] + total
    return total


def excess(game: Game, s: Coalition, y: Allocation) -> Fraction:
    """c(S) - y(S)."""
    if len(y) != game.n:
        raise DimensionError(f"allocation has {len(y)} entries, game has {game.n} players")
    game.validate(s)
    return game.cost(s) - coalition_sum(y, s)


@dataclass(frozen=True)
class ExcessVector:
    """Per-coalition excesses of an enumerated family, sorted non-decreasingly."""

    entries: tuple[tuple[Coalition, Fraction], ...]

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(e for _, e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def excess_vector(game: Game, y: Allocation,
                  family: Optional[Sequence[Coalition]] = None) -> ExcessVector:
    if family is None:
        if game.n > ENUMERATION_LIMIT:
            raise SizeGuardError(
                f"n={game.n} > {ENUMERATION_LIMIT}: pass an explicit coalition family")
        family = range(1 << game.n)
    pairs = [(s, excess(game, s, y)) for s in family]
    pairs.sort(key=lambda it: (it[1], it[0]))
    return ExcessVector(tuple(pairs))


LESS, EQUAL, GREATER = -1, 0, 1


def lex_compare(a: ExcessVector, b: ExcessVector) -> int:
    """Lexicographic comparison of sorted excess values.

    Returns GREATER when `a` is lexicographically preferred (its first
    differing entry is larger), LESS when `b` is, EQUAL otherwise.
    """
    if len(a) != len(b):
        raise DimensionError("excess vectors have different lengths")
    for (_, ea), (_, eb) in zip(a.entries, b.entries):
        if ea != eb:
            return GREATER if ea > eb else LESS
    return EQUAL


def check_monotone(game: Game) -> bool:
    """Exhaustive check of c(S) <= c(T) for S subset of T (n <= CHECK_LIMIT)."""
    n = game.n
    if n > CHECK_LIMIT:
        raise SizeGuardError(f"monotonicity check capped at n={CHECK_LIMIT}")
    # c is monotone iff adding any single player never decreases cost
    for s in range(1 << n):
        cs = game.cost(s)
        for p in range(n):
            if not s & (1 << p) and game.cost(s | (1 << p)) < cs:
                return False
    return True


def check_subadditive(game: Game) -> bool:
    """Exhaustive check of c(S u T) <= c(S) + c(T) for disjoint S, T."""
    n = game.n
    if n > CHECK_LIMIT:
        raise SizeGuardError(f"subadditivity check capped at n={CHECK_LIMIT}")
    for u in range(1, 1 << n):
        cu = game.cost(u)
        # proper nonempty submasks of u; each unordered pair seen twice, cheap enough
        s = (u - 1) & u
        while s:
            if game.cost(s) + game.cost(u & ~s) < cu:
                return False
            s = (s - 1) & u
    return True


class ShiftedGame(Game):
    """Value-function form of a game: cost c_s(S) = c(S) + sum of member shifts.

    The negated cost -c_s is the value function. Excesses satisfy
    excess_c(S, y) = excess_{c_s}(S, y + shifts), so the (happy) nucleolus of
    the shifted game is the original one plus the shifts.
    """

    def __init__(self, base: Game, shifts: Sequence[Rational]):
        if len(shifts) != base.n:
            raise DimensionError("one shift per player required")
        super().__init__(base.n, monotone=None, subadditive=base.subadditive)
        self.base = base
        self.shifts = allocation(shifts)

    def _cost(self, s: Coalition) -> Fraction:
        return self.base.cost(s) + coalition_sum(self.shifts, s)

    def value(self, s: Coalition) -> Fraction:
        return -self.cost(s)

    def value_nonneg(self, family: Optional[Sequence[Coalition]] = None) -> bool:
        """Whether the value function is >= 0 on the enumerated family."""
        if family is None:
            family = all_coalitions(self.n)
        return all(self.value(s) >= 0 for s in family)


def shift_transform(game: Game, shifts: Sequence[Rational]) -> ShiftedGame:
    return ShiftedGame(game, shifts)
