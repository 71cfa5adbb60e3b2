"""Prize-collecting coalition selection.

Given per-player prizes, pick a coalition S minimizing cost-estimate plus
forfeited prizes, lambda + pi(P \\ S).  Three layers:

  * an exact brute-force solver (doubles as an alpha = 1 oracle),
  * a reduction that restricts any oracle to coalitions between two given
    sets A and B via modified prizes (huge on A, zero on B),
  * a reduction that forces the answer's incidence vector out of a given
    linear subspace, at the price of an extra eps in the guarantee.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .games import Coalition, Game, SizeGuardError, members
from .ratlp import SpanBasis, empty_basis, extend_basis, in_span

BRUTEFORCE_LIMIT = 14
_MAX_DOUBLINGS = 64


class NoFeasibleCoalitionError(RuntimeError):
    pass


class OracleProtocolError(RuntimeError):
    """Oracle kept returning solutions missing the forced in-set."""


def prize_vector(values: Sequence) -> tuple[Fraction, ...]:
    pi = tuple(Fraction(v) for v in values)
    if any(v < 0 for v in pi):
        raise ValueError("prizes must be nonnegative")
    return pi


@dataclass(frozen=True)
class Subspace:
    """Span of a set of coalition incidence vectors."""

    generators: tuple[Coalition, ...]
    basis: SpanBasis

    @property
    def n(self) -> int:
        return self.basis.n

    def contains(self, s: Coalition) -> bool:
        return in_span(self.basis, s)

    def is_proper(self) -> bool:
        return self.basis.rank < self.basis.n


def subspace(n: int, generators: Sequence[Coalition]) -> Subspace:
    basis = empty_basis(n)
    for s in generators:
        basis, _ = extend_basis(basis, s)
    return Subspace(tuple(generators), basis)


@dataclass(frozen=True)
class PcSolution:
    coalition: Coalition
    cost_estimate: Fraction

    def objective(self, pi: Sequence[Fraction]) -> Fraction:
        out = sum(v for p, v in enumerate(pi) if not self.coalition >> p & 1)
        return self.cost_estimate + out


@dataclass(frozen=True)
class PcOracle:
    """alpha-approximation oracle for unconstrained prize collecting."""

    fn: Callable[[Game, Sequence[Fraction]], PcSolution]
    alpha: Fraction = Fraction(1)

    def __call__(self, game: Game, pi: Sequence[Fraction]) -> PcSolution:
        return self.fn(game, pi)


def bruteforce_pcc(game: Game, pi: Sequence[Fraction],
                   l: Optional[Subspace] = None) -> PcSolution:
    """Exact optimum by full enumeration, skipping span(l) when given.

    Ties go to the coalition with the smallest bit pattern.
    """
    n = game.n
    if n > BRUTEFORCE_LIMIT:
        raise SizeGuardError(f"brute force capped at n={BRUTEFORCE_LIMIT}")
    pi = prize_vector(pi)
    total = sum(pi)
    best = None
    for s in range(1 << n):
        if l is not None and l.contains(s):
            continue
        obj = game.cost(s) + total - sum(pi[p] for p in members(s))
        if best is None or obj < best[0]:
            best = (obj, s)
    if best is None:
        raise NoFeasibleCoalitionError("every coalition lies in the subspace")
    return PcSolution(best[1], game.cost(best[1]))


def exact_oracle(l: Optional[Subspace] = None) -> PcOracle:
    return PcOracle(lambda game, pi: bruteforce_pcc(game, pi, l), Fraction(1))


def _default_u(game: Game, pi: Sequence[Fraction]) -> Fraction:
    try:
        singles = [game.cost(1 << p) for p in range(game.n)]
        base = max([*singles, *pi, Fraction(1)])
        return base * game.n
    except Exception:
        return Fraction(1)


def restricted_pcc(oracle: PcOracle, game: Game, pi: Sequence[Fraction],
                   a: Coalition, b: Coalition,
                   u: Optional[Fraction] = None) -> PcSolution:
    """Best coalition S with a <= S <= P \\ b, by reweighting prizes.

    Players of `a` get a prize so large (alpha*U + 1) that any solution
    skipping them is beaten by adding them; players of `b` get prize 0 and
    are stripped from the answer afterwards (the cost estimate survives the
    removal for monotone games). If the oracle still skips part of `a`, U
    was too small: double and retry.
    """
    if a & b:
        raise ValueError("in-set and out-set overlap")
    pi = prize_vector(pi)
    u = _default_u(game, pi) if u is None else Fraction(u)
    for _ in range(_MAX_DOUBLINGS):
        bonus = oracle.alpha * u + 1
        hat = [bonus if a >> p & 1 else
               Fraction(0) if b >> p & 1 else pi[p]
               for p in range(game.n)]
        sol = oracle(game, hat)
        if a & ~sol.coalition == 0:
            return PcSolution(sol.coalition & ~b, sol.cost_estimate)
        u *= 2
    raise OracleProtocolError("oracle never produced the forced in-set")


def _candidate_key(pi):
    def key(cand: PcSolution):
        return (cand.objective(pi), cand.coalition)
    return key


def subspace_avoiding_pcc(oracle: PcOracle, game: Game,
                          pi: Sequence[Fraction], l: Subspace,
                          eps) -> PcSolution:
    """(alpha + eps)-approximate prize collecting outside span(l).

    Two candidate families, both enumerated in full:
      (a) force one free player p in, then drop p again if needed -- one of
          S, S \\ {p} escapes the span because {p} alone does;
      (b) guess the set O of high-prize players left out of the optimum
          (|O| <= ceil(1/eps)) and pin the optimum's free-player part I
          exactly via the in/out reduction.
    The cheapest candidate outside the span wins; ties break toward the
    smallest bit pattern.
    """
    n = game.n
    pi = prize_vector(pi)
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not l.is_proper():
        raise ValueError("subspace must be proper")
    free = [p for p in range(n) if not l.contains(1 << p)]
    if not free:
        raise NoFeasibleCoalitionError(
            "every singleton lies in the subspace; cannot branch")
    k = math.ceil(1 / eps)
    free_mask = 0
    for p in free:
        free_mask |= 1 << p

    candidates: list[PcSolution] = []

    def offer(s: Coalition, lam: Fraction):
        if not l.contains(s):
            candidates.append(PcSolution(s, lam))

    # (a): the optimum may keep some free player; forcing that player in
    # costs nothing, and if the oracle's answer lands inside the span,
    # removing the forced player takes it out (monotone cost keeps lambda).
    for p in free:
        sol = restricted_pcc(oracle, game, pi, 1 << p, 0)
        offer(sol.coalition, sol.cost_estimate)
        offer(sol.coalition & ~(1 << p), sol.cost_estimate)

    # (b): the optimum may shed free players. Their total prize is what the
    # guarantee loses, so only the <= k highest-prize dropouts matter; guess
    # them as O, reconstruct the kept free players I by prize threshold, and
    # pin S's free part to exactly I.
    def subsets(pool, limit):
        for r in range(limit + 1):
            for combo in itertools.combinations(pool, r):
                mask = 0
                for p in combo:
                    mask |= 1 << p
                yield mask, combo

    for o_mask, o_list in subsets(free, k):
        if len(o_list) == k:
            tq, tp = min(((pi[q], q) for q in o_list))
            i_mask = 0
            for p in free:
                if not o_mask >> p & 1 and (pi[p], p) > (tq, tp):
                    i_mask |= 1 << p
        else:
            i_mask = free_mask & ~o_mask
        sol = restricted_pcc(oracle, game, pi, i_mask, free_mask & ~i_mask)
        offer(sol.coalition, sol.cost_estimate)

    if not candidates:
        raise NoFeasibleCoalitionError("no candidate escaped the subspace")
    return min(candidates, key=_candidate_key(pi))
