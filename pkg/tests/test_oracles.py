from fractions import Fraction

import pytest

from tbtrg.constraints import ConstraintSet, LinearIneq
from tbtrg.oracles import (
    OracleExplosion,
    SampleGrid,
    box_vertices,
    brute_expand,
    containment_witness,
    exact_maximum,
    grid_satisfiable,
    region_contains,
)

GRID = SampleGrid.uniform(["T0", "T1"], -3, 3, Fraction(1, 2))


def _cs(*rows):
    return ConstraintSet.of(rows)


def test_region_contains_examples():
    a = _cs(LinearIneq.diff("T1", "T0", 1))
    b = _cs(LinearIneq.diff("T1", "T0", 2))
    assert region_contains(a, a, GRID)
    assert region_contains(a, b, GRID)
    assert not region_contains(b, a, GRID)
    w = containment_witness(b, a, GRID)
    assert w is not None and 1 < w["T1"] - w["T0"] <= 2


def test_empty_region_vacuous():
    empty = _cs(LinearIneq.diff("T0", None, -1), LinearIneq.make({"T0": -1}, 0))
    assert grid_satisfiable(empty, GRID) is None
    assert region_contains(empty, _cs(LinearIneq.diff("T1", "T0", -100)), GRID)


def test_grid_points_finite():
    pts = list(SampleGrid.uniform(["x"], 0, 1, Fraction(1, 4)).points())
    assert [p["x"] for p in pts] == [Fraction(i, 4) for i in range(5)]


def test_vertex_oracle():
    c = _cs(LinearIneq.diff("x", None, 2), LinearIneq.make({"x": -1}, 0), LinearIneq.make({"x": 1, "y": 1}, 3),
            LinearIneq.make({"y": -1}, 0))
    verts = {tuple(v[s] for s in ("x", "y")) for v in box_vertices(c, ["x", "y"])}
    assert verts == {(0, 0), (2, 0), (0, 3), (2, 1)}
    assert exact_maximum(c, {"x": 1, "y": 2}, ["x", "y"]) == 6


def test_depth_zero(one_step):
    net, s = one_step
    assert brute_expand(net, s, 0) == {s.digest: s}
    with pytest.raises(ValueError):
        brute_expand(net, s, -1)


def test_one_transition_depth_one(one_step):
    net, s = one_step
    assert len(brute_expand(net, s, 1)) == 2


def test_cycle_depth_three(models):
    net, s = models["cycle"]
    assert len(brute_expand(net, s, 3)) <= 4


def test_explosion_cap(models):
    net, s = models["gasburner"]
    with pytest.raises(OracleExplosion):
        brute_expand(net, s, 6, cap=20)
