"""Rational string handling and the JSON file formats.

Rationals are serialized as "p/q" strings (or plain integers / decimal
strings, which parse exactly).
"""

from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction
from typing import Union


def parse_rational(v: Union[str, int, float, Fraction]) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v)
    s = str(v).strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num.strip()), int(den.strip()))
    return Fraction(Decimal(s))


def format_rational(v: Fraction) -> str:
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def detect_schema(path: str) -> str:
    """'explicit', 'setcover' or 'vrp', decided by top-level keys."""
    with open(path) as fh:
        data = json.load(fh)
    keys = set(data)
    matches = []
    if "costs" in keys:
        matches.append("explicit")
    if "sets" in keys:
        matches.append("setcover")
    if "points" in keys and "depot" in keys:
        matches.append("vrp")
    if len(matches) != 1:
        raise ValueError(f"cannot identify game type of {path}: keys {sorted(keys)}")
    return matches[0]


# ---------------------------------------------------------------------------
# explicit-game files: {"n": int, "costs": [{"members": [...], "cost": "p/q"}]}


def explicit_game_from_json(data: dict):
    from .games import ExplicitGame, coalition
    table = {coalition(e["members"]): parse_rational(e["cost"])
             for e in data["costs"]}
    return ExplicitGame(int(data["n"]), table)


def explicit_game_to_json(n: int, costs: dict) -> dict:
    from .games import members
    return {"n": n,
            "costs": [{"members": list(members(s)), "cost": format_rational(c)}
                      for s, c in sorted(costs.items())]}


def load_explicit_game(path: str):
    with open(path) as fh:
        return explicit_game_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# allocation files: {"allocation": ["p/q" | float, ...]}


def save_allocation(path: str, values, exact: bool) -> None:
    if exact:
        out = [format_rational(v) for v in values]
    else:
        out = [float(v) for v in values]
    with open(path, "w") as fh:
        json.dump({"allocation": out}, fh, indent=1)
        fh.write("\n")


def load_allocation(path: str) -> list[Fraction]:
    with open(path) as fh:
        data = json.load(fh)
    return [parse_rational(v) for v in data["allocation"]]
