"""Set-covering games: integral and fractional cover costs, plus the three
hard-coded counterexample instances used throughout the test suite."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .games import Coalition, Game, SizeGuardError, coalition, members, size
from .jsonio import format_rational, parse_rational
from .ratlp import GE, LinearProgram, OPTIMAL, solve

#: exhaustive cover search refuses larger instances
MAX_SETS = 24
MAX_PLAYERS = 12


@dataclass(frozen=True)
class SetCoverInstance:
    n: int
    sets: tuple[tuple[Coalition, Fraction], ...]

    def __post_init__(self):
        covered = 0
        for s, cost in self.sets:
            if cost < 0:
                raise ValueError("set costs must be nonnegative")
            if s >= (1 << self.n):
                raise ValueError("set contains players outside the instance")
            covered |= s
        if covered != (1 << self.n) - 1:
            raise ValueError("every player must appear in at least one set")


def instance(n: int, sets: Sequence[tuple[Sequence[int], object]]) -> SetCoverInstance:
    return SetCoverInstance(n, tuple((coalition(m), Fraction(parse_rational(c)))
                                     for m, c in sets))


def cover_cost(inst: SetCoverInstance, s: Coalition) -> Fraction:
    """Exact minimum cost of input sets whose union contains s.

    Members outside s may be covered too. Branch and bound over cost-sorted
    sets, branching on the lowest uncovered player.
    """
    if len(inst.sets) > MAX_SETS and inst.n > MAX_PLAYERS:
        raise SizeGuardError("instance too large for exhaustive cover search")
    if s == 0:
        return Fraction(0)
    by_player: list[list[int]] = [[] for _ in range(inst.n)]
    order = sorted(range(len(inst.sets)), key=lambda j: inst.sets[j][1])
    for j in order:
        for p in members(inst.sets[j][0]):
            by_player[p].append(j)
    best = [sum(c for _, c in inst.sets)]

    def dfs(uncovered: Coalition, acc: Fraction):
        if acc >= best[0]:
            return
        if not uncovered:
            best[0] = acc
            return
        p = (uncovered & -uncovered).bit_length() - 1
        for j in by_player[p]:
            st, c = inst.sets[j]
            dfs(uncovered & ~st, acc + c)

    dfs(s, Fraction(0))
    return best[0]


def fractional_cost(inst: SetCoverInstance, s: Coalition) -> Fraction:
    """Optimal fractional covering cost of s over the input sets.

    Exact LP: min sum_j a_j cost_j  s.t.  sum_{j: p in set_j} a_j >= 1 for
    every p in s, a >= 0. For set-covering games this equals the
    all-coalitions fractional-cost LP because each coalition cost decomposes
    into input-set costs (cross-checked on small instances in the tests).
    """
    if s == 0:
        return Fraction(0)
    k = len(inst.sets)
    lp = LinearProgram(objective=[c for _, c in inst.sets], maximize=False,
                       lower=[0] * k)
    for p in members(s):
        lp.add_row([1 if inst.sets[j][0] >> p & 1 else 0 for j in range(k)], GE, 1)
    sol = solve(lp)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"fractional cover LP came back {sol.status}")
    return sol.objective_value


class SetCoverGame(Game):
    def __init__(self, inst: SetCoverInstance):
        super().__init__(inst.n, monotone=True, subadditive=True)
        self.instance = inst

    def _cost(self, s: Coalition) -> Fraction:
        return cover_cost(self.instance, s)


class FractionalGame(Game):
    """Game whose oracle is the fractional cover cost (c_f <= c pointwise)."""

    def __init__(self, inst: SetCoverInstance):
        super().__init__(inst.n, monotone=True, subadditive=True)
        self.instance = inst

    def _cost(self, s: Coalition) -> Fraction:
        return fractional_cost(self.instance, s)


def game(inst: SetCoverInstance) -> SetCoverGame:
    return SetCoverGame(inst)


def fractional_game(inst: SetCoverInstance) -> FractionalGame:
    return FractionalGame(inst)


def fractionally_dominated(inst: SetCoverInstance, s: Coalition) -> bool:
    """Whether c_f(s) < c(s)."""
    return fractional_cost(inst, s) < cover_cost(inst, s)


# ---------------------------------------------------------------------------
# fixtures


def fixture(name: str) -> SetCoverInstance:
    """The three reference instances: 'triangle', 'three_triangles' and
    'frac_dominated'."""
    if name == "triangle":
        return instance(3, [([0, 1], 1), ([0, 2], 1), ([1, 2], 1)])
    if name == "three_triangles":
        sets = []
        for base in (0, 3, 6):
            sets += [([base, base + 1], 1), ([base, base + 2], 1),
                     ([base + 1, base + 2], 1)]
        sets += [([0, 1, 2, 3, 4, 5], 3), ([3, 4, 5, 6, 7, 8], 3)]
        return instance(9, sets)
    if name == "frac_dominated":
        sets = [([2, 5], 10), ([0, 3], 10), ([1, 4], 10),
                ([0, 1], 10), ([1, 2], 10), ([3, 4], 10), ([4, 5], 10),
                ([0, 2], 14), ([3, 5], 14),
                ([0, 1, 2], 18)]
        return instance(6, sets)
    raise ValueError(f"unknown fixture {name!r}")


def with_set_cost(inst: SetCoverInstance, index: int, cost) -> SetCoverInstance:
    """Copy of the instance with one set's cost replaced."""
    sets = list(inst.sets)
    sets[index] = (sets[index][0], Fraction(parse_rational(cost)))
    return SetCoverInstance(inst.n, tuple(sets))


# ---------------------------------------------------------------------------
# JSON format: {"n": int, "sets": [{"members": [indices], "cost": "p/q"}]}


def to_json(inst: SetCoverInstance) -> dict:
    return {"n": inst.n,
            "sets": [{"members": list(members(s)), "cost": format_rational(c)}
                     for s, c in inst.sets]}


def from_json(data: dict) -> SetCoverInstance:
    return instance(int(data["n"]),
                    [(e["members"], e["cost"]) for e in data["sets"]])


def load(path: str) -> SetCoverInstance:
    with open(path) as fh:
        return from_json(json.load(fh))


def save(inst: SetCoverInstance, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(inst), fh, indent=1)
        fh.write("\n")
