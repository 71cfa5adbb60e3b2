import json
from fractions import Fraction as F

import pytest

from coalloc.games import check_monotone, check_subadditive, coalition, grand
from coalloc import setcover as sc


def test_triangle_costs():
    inst = sc.fixture("triangle")
    g = sc.game(inst)
    assert g.cost(coalition([0, 1])) == 1
    assert g.cost(grand(3)) == 2
    assert g.cost(0) == 0
    # two players are covered by one unit edge, a third needs a second set
    for p in range(3):
        assert g.cost(1 << p) == 1


def test_triangle_fractional_grand():
    # half of each of the three unit edges covers everyone
    inst = sc.fixture("triangle")
    assert sc.fractional_cost(inst, grand(3)) == F(3, 2)


def test_uncoverable_player_rejected():
    with pytest.raises(ValueError):
        sc.instance(3, [([0, 1], 1)])


def test_three_triangles_costs():
    inst = sc.fixture("three_triangles")
    g = sc.game(inst)
    assert g.cost(grand(9)) == 5
    assert g.cost(coalition([0, 1, 6, 7])) == 2
    # a whole triangle takes two of its unit edges
    assert g.cost(coalition([0, 1, 2])) == 2
    # the cost-3 sets are never cheaper for a single triangle
    assert g.cost(coalition([3, 4, 5])) == 2


def test_frac_dominated_costs():
    inst = sc.fixture("frac_dominated")
    g = sc.game(inst)
    assert g.cost(grand(6)) == 30
    # {p4,p5,p6}: edges {p4,p5} + {p5,p6}
    assert g.cost(coalition([3, 4, 5])) == 20
    assert sc.fractional_cost(inst, coalition([0, 1, 2])) == 17
    assert sc.fractional_cost(inst, coalition([3, 4, 5])) == 17
    assert sc.fractionally_dominated(inst, coalition([0, 1, 2]))
    # a lone edge is covered exactly at its own cost
    assert not sc.fractionally_dominated(inst, coalition([0, 1]))


def test_fixture_games_monotone_subadditive():
    for name in ("triangle", "frac_dominated"):
        g = sc.game(sc.fixture(name))
        assert check_monotone(g)
        assert check_subadditive(g)


def test_fractional_below_cover_everywhere():
    inst = sc.fixture("frac_dominated")
    for s in range(1 << 6):
        assert sc.fractional_cost(inst, s) <= sc.cover_cost(inst, s)


def test_additive_instance_has_no_fractional_gap():
    inst = sc.instance(4, [([p], F(p + 1, 2)) for p in range(4)])
    for s in range(1 << 4):
        assert sc.fractional_cost(inst, s) == sc.cover_cost(inst, s)


def test_unknown_fixture():
    with pytest.raises(ValueError):
        sc.fixture("pentagon")


def test_json_round_trip(tmp_path):
    inst = sc.fixture("frac_dominated")
    path = tmp_path / "inst.json"
    sc.save(inst, str(path))
    again = sc.load(str(path))
    assert again == inst
    # the file is plain JSON with exact rational costs
    data = json.loads(path.read_text())
    assert data["n"] == 6
