import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbtrg.constraints import (
    ConstraintSet,
    LinearIneq,
    UnsatisfiableError,
    canonicalize,
    closure,
    dbm_of,
    eliminate,
    entails,
    entails_all,
    fourier_motzkin,
    is_satisfiable,
)
from tbtrg.constraints.dbm import project, reduced_rows
from tbtrg.oracles import SampleGrid, containment_witness, exact_entails, exact_satisfiable

d = LinearIneq.diff  # d(x, y, c) is x - y <= c


def cs(*rows):
    return ConstraintSet.of(rows)


def test_row_construction_drops_constants_and_scales():
    assert LinearIneq.make({}, 1) is True
    assert LinearIneq.make({}, -1) is False
    assert LinearIneq.make({"T0": 0}, 3) is True
    row = LinearIneq.make({"T1": 2, "T0": -2}, 3)
    assert row == d("T1", "T0", F(3, 2))
    assert all(c != 0 for _, c in row.terms)
    assert cs(False).infeasible


def test_duplicate_rows_are_stored_once():
    c = cs(d("T0", "T1", 0), LinearIneq.make({"T1": -3, "T0": 3}, 0))
    assert len(c) == 1
    assert c.symbols == {"T0", "T1"}


# --- satisfiability ------------------------------------------------------


def test_empty_set_is_satisfiable():
    assert is_satisfiable(cs())


def test_contradictory_pair():
    assert not is_satisfiable(cs(d("T1", "T0", 1), d("T0", "T1", -2)))


def test_negative_cycle_of_four_rows():
    c = cs(d("T0", "T1", 0), d("T1", "T0", F(3, 2)), d("T2", "T1", F(1, 2)), d("T0", "T2", -3))
    assert not is_satisfiable(c)
    grid = SampleGrid.uniform(c.symbols, -4, 4, F(1, 2))
    assert all(not c.holds_at(p) for p in grid.points())


def test_general_rows_go_through_simplex():
    c = cs(LinearIneq.make({"x": 1, "y": 1}, 2), LinearIneq.make({"x": -1, "y": -2}, -5))
    assert is_satisfiable(c)
    assert not is_satisfiable(c.conjoin([LinearIneq.make({"y": 1}, 2)]))


# --- entailment ----------------------------------------------------------


def test_entails_weaker_bound():
    assert entails(cs(d("T1", "T0", 1)), d("T1", "T0", 2))


def test_does_not_entail_stronger_bound():
    assert not entails(cs(d("T1", "T0", 2)), d("T1", "T0", 1))


def test_entails_by_transitivity():
    assert entails(cs(d("T0", "T1", 0), d("T1", "T2", 0)), d("T0", "T2", 0))


def test_entails_from_false_is_an_error():
    with pytest.raises(UnsatisfiableError):
        entails(cs(d("T1", "T0", 1), d("T0", "T1", -2)), d("T0", "T1", 5))


def test_entails_unbounded_direction_is_false():
    assert not entails(cs(d("T0", "T1", 0)), d("T1", "T0", 100))


def test_entails_general_row():
    c = cs(LinearIneq.make({"x": 1}, 1), LinearIneq.make({"y": 1}, 1))
    assert entails(c, LinearIneq.make({"x": 1, "y": 1}, 2))
    assert not entails(c, LinearIneq.make({"x": 1, "y": 1}, F(3, 2)))


# --- elimination ---------------------------------------------------------


def test_eliminate_leaves_nothing_for_lone_symbol():
    c = cs(d("T0", "T1", -1), d("T1", "T0", 2))
    assert len(eliminate(c, "T0")) == 0


def test_eliminate_middle_symbol():
    out = eliminate(cs(d("T0", "T1", 0), d("T1", "T2", 0)), "T1")
    assert set(out.rows) == {d("T0", "T2", 0)}


def test_eliminate_path_sum_both_backends():
    c = cs(d("T1", "T0", 1), d("T2", "T1", 1))
    assert set(eliminate(c, "T1").rows) == {d("T2", "T0", 2)}
    assert set(fourier_motzkin(c, "T1").rows) == {d("T2", "T0", 2)}


def test_eliminate_requires_symbol():
    with pytest.raises(ValueError):
        eliminate(cs(d("T0", "T1", 0)), "T9")


def test_eliminate_general_rows():
    c = cs(
        LinearIneq.make({"x": 1, "y": 1}, 4),
        LinearIneq.make({"x": -1}, -1),
        LinearIneq.make({"y": 2, "z": -1}, 0),
        LinearIneq.make({"y": -1}, 0),
    )
    out = eliminate(c, "y")
    expected = cs(LinearIneq.make({"x": 1}, 4), LinearIneq.make({"x": -1}, -1), LinearIneq.make({"z": -1}, 0))
    assert "y" not in out.symbols
    assert entails_all(out, expected) and entails_all(expected, out)


# --- closure -------------------------------------------------------------


def test_closure_single_symbol_unchanged():
    dv = dbm_of(cs(), ["T0"])
    closed = closure(dv)
    assert closed.matrix == dv.matrix and not closed.unsat


def test_closure_path_entry():
    closed = closure(dbm_of(cs(d("T1", "T0", 1), d("T2", "T1", 1))))
    assert closed.bound("T2", "T0") == 2


def test_closure_flags_negative_cycle():
    assert closure(dbm_of(cs(d("T1", "T0", 1), d("T0", "T1", -2)))).unsat


def test_closure_diagonal_zero_and_idempotent():
    closed = closure(dbm_of(cs(d("T1", "T0", 1), d("T2", "T1", F(1, 3)), d(None, "T0", 0))))
    assert all(closed.matrix[i][i] == 0 for i in range(closed.size))
    again = closure(type(closed)(closed.index, closed.matrix, False, False))
    assert again.matrix == closed.matrix


def test_dbm_absent_for_general_rows():
    assert dbm_of(cs(LinearIneq.make({"x": 1, "y": 1}, 1))) is None


# --- canonical form ------------------------------------------------------


def test_canonicalize_scale():
    out = canonicalize(cs(LinearIneq.make({"T1": 2, "T0": -2}, 3)), ["T0", "T1"])
    assert set(out.rows) == {d("T1", "T0", F(3, 2))}


def test_canonicalize_empty():
    assert len(canonicalize(cs(), [])) == 0


def test_canonicalize_merges_duplicates():
    out = canonicalize(cs(d("T0", "T1", 0), LinearIneq.make({"T1": -1, "T0": 1}, 0)), ["T0", "T1"])
    assert len(out) == 1


def test_canonicalize_missing_symbol():
    with pytest.raises(ValueError):
        canonicalize(cs(d("T0", "T1", 0)), ["T0"])


def test_canonicalize_equal_regions_give_equal_rows():
    a = cs(d("T0", "T1", 0), d("T1", "T2", 0), d("T0", "T2", 0))
    b = cs(d("T0", "T1", 0), d("T1", "T2", 0))
    order = ["T0", "T1", "T2"]
    assert canonicalize(a, order) == canonicalize(b, order)


# --- properties ----------------------------------------------------------

SYMS = ["T0", "T1", "T2", "T3"]
coef = st.integers(-3, 3)
bound = st.integers(-6, 6).map(F) | st.fractions(-6, 6, max_denominator=2)


@st.composite
def rows(draw, syms=SYMS, difference=False):
    if difference:
        x = draw(st.sampled_from(syms + [None]))
        y = draw(st.sampled_from([s for s in syms + [None] if s != x]))
        return d(x, y, draw(bound))
    coeffs = {s: draw(coef) for s in draw(st.lists(st.sampled_from(syms), min_size=1, max_size=3, unique=True))}
    row = LinearIneq.make(coeffs, draw(bound))
    return row if not isinstance(row, bool) else d(syms[0], syms[1], draw(bound))


def sets(difference=False, syms=SYMS):
    return st.lists(rows(syms, difference), min_size=1, max_size=5).map(ConstraintSet.of)


@settings(max_examples=60, deadline=None)
@given(sets(difference=True, syms=SYMS[:3]), st.sampled_from(SYMS[:3]), st.integers(0, 2**16))
def test_projection_soundness_by_sampling(c, s, seed):
    rnd = random.Random(seed)
    if s not in c.symbols or not is_satisfiable(c):
        return
    out = eliminate(c, s)
    assert s not in out.symbols
    checked = 0
    for _ in range(4000):
        p = {x: F(rnd.randint(-16, 16), 2) for x in SYMS[:3]}
        if c.holds_at(p):
            checked += 1
            assert out.holds_at(p)
        if checked >= 1000:
            break


@settings(max_examples=40, deadline=None)
@given(sets(difference=False, syms=SYMS[:3]), st.sampled_from(SYMS[:3]), st.integers(0, 2**16))
def test_fourier_motzkin_soundness_by_sampling(c, s, seed):
    rnd = random.Random(seed)
    if s not in c.symbols or not is_satisfiable(c):
        return
    out = fourier_motzkin(c, s)
    for _ in range(1000):
        p = {x: F(rnd.randint(-12, 12), 2) for x in SYMS[:3]}
        if c.holds_at(p):
            assert out.holds_at(p)


@settings(max_examples=80, deadline=None)
@given(sets(difference=True), st.sampled_from(SYMS))
def test_dbm_and_fourier_motzkin_agree(c, s):
    if s not in c.symbols or not is_satisfiable(c):
        return
    a, b = eliminate(c, s), fourier_motzkin(c, s)
    assert entails_all(a, b) and entails_all(b, a)


@settings(max_examples=80, deadline=None)
@given(sets(difference=True))
def test_reduced_rows_keep_the_region(c):
    closed = closure(dbm_of(c))
    if closed.unsat:
        return
    red = ConstraintSet.of(reduced_rows(closed))
    assert entails_all(red, c) and entails_all(c, red)
    keep = sorted(c.symbols)[1:]
    proj = project(closed, keep)
    assert closure(type(proj)(proj.index, proj.matrix, False, False)).matrix == proj.matrix


@settings(max_examples=100, deadline=None)
@given(sets(), rows())
def test_satisfiability_is_monotone(c, r):
    if not is_satisfiable(c):
        assert not is_satisfiable(c.conjoin([r]))


@settings(max_examples=60, deadline=None)
@given(sets(syms=SYMS[:3]), rows(SYMS[:3]))
def test_entails_agrees_with_oracles(c, r):
    assert is_satisfiable(c) == exact_satisfiable(c)
    if not is_satisfiable(c):
        return
    claimed = entails(c, r)
    assert claimed == exact_entails(c, r)
    if claimed:
        grid = SampleGrid.uniform(SYMS[:3], -4, 4, F(1, 2))
        assert containment_witness(c, ConstraintSet.of([r]), grid) is None
