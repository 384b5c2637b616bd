"""Satisfiability, entailment, projection and canonical form."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import simplex
from .dbm import closed_view, dbm_of, closure, project, reduced_rows
from .linear import ConstraintSet, LinearIneq, row_sort_key, sym_key


class UnsatisfiableError(ValueError):
    """Entailment was asked from an unsatisfiable constraint set."""


def is_satisfiable(c: ConstraintSet) -> bool:
    if c.infeasible:
        return False
    if not c.rows:
        return True
    cache = c._cache
    if "sat" in cache:
        return cache["sat"]
    d = closed_view(c)
    if d is not None:
        sat = not d.unsat
    else:
        sat = simplex.solve(list(c.rows)).status != simplex.INFEASIBLE
    cache["sat"] = sat
    return sat


def maximize(c: ConstraintSet, objective: Mapping[str, Fraction]) -> simplex.LPResult:
    """Exact LP optimum of ``objective`` over ``c``."""
    if c.infeasible:
        return simplex.LPResult(simplex.INFEASIBLE)
    return simplex.solve(list(c.rows), objective)


def difference_bound(c: ConstraintSet, x: Optional[str], y: Optional[str]) -> Optional[Fraction]:
    """Tightest ``k`` with ``c |= x - y <= k``; ``None`` means unbounded."""
    if x == y:
        return Fraction(0)
    d = closed_view(c)
    if d is not None:
        pos = d.position()
        if (x is not None and x not in pos) or (y is not None and y not in pos):
            return None
        return d.matrix[pos[x]][pos[y]]
    obj: dict = {}
    if x is not None:
        obj[x] = Fraction(1)
    if y is not None:
        obj[y] = obj.get(y, 0) - 1
    res = maximize(c, obj)
    if res.status == simplex.UNBOUNDED:
        return None
    return res.value


def entails(c: ConstraintSet, row: LinearIneq) -> bool:
    """``c |= row``, i.e. ``c and (row.lhs > row.bound)`` is unsatisfiable."""
    if not is_satisfiable(c):
        raise UnsatisfiableError("entailment from an unsatisfiable set is vacuous")
    if row in c.rows:
        return True
    d = closed_view(c)
    diff = row.difference
    if d is not None and diff is not None:
        pos = d.position()
        x, y = diff
        if (x is not None and x not in pos) or (y is not None and y not in pos):
            return False
        b = d.matrix[pos[x]][pos[y]]
        return b is not None and b <= row.bound
    if not row.symbols <= c.symbols:
        return False
    res = maximize(c, row.coeffs)
    if res.status == simplex.UNBOUNDED:
        return False
    return res.value <= row.bound


def entails_all(c: ConstraintSet, other: ConstraintSet) -> bool:
    """``c |= every row of other``; the inclusion test of two regions."""
    if other.infeasible:
        return not is_satisfiable(c)
    return all(entails(c, r) for r in other.sorted_rows)


def _prune_redundant(rows: Sequence[LinearIneq]) -> list:
    """Greedy removal of rows entailed by the remaining ones."""
    kept = sorted(set(rows), key=row_sort_key)
    i = 0
    while i < len(kept):
        rest = ConstraintSet(frozenset(kept[:i] + kept[i + 1:]))
        if rest.rows and entails(rest, kept[i]):
            del kept[i]
        else:
            i += 1
    return kept


def fourier_motzkin(c: ConstraintSet, s: str, prune: bool = True) -> ConstraintSet:
    """Project ``s`` out of ``c`` by Fourier-Motzkin combination."""
    pos, neg, rest = [], [], []
    for r in c.rows:
        a = r.coeffs.get(s, 0)
        if a > 0:
            pos.append(r)
        elif a < 0:
            neg.append(r)
        else:
            rest.append(r)
    new = list(rest)
    for p in sorted(pos, key=row_sort_key):
        ap = p.coeffs[s]
        for q in sorted(neg, key=row_sort_key):
            aq = -q.coeffs[s]
            coeffs: dict = {}
            for t, v in p.terms:
                coeffs[t] = coeffs.get(t, 0) + v * aq
            for t, v in q.terms:
                coeffs[t] = coeffs.get(t, 0) + v * ap
            coeffs.pop(s, None)
            new.append(LinearIneq.make(coeffs, p.bound * aq + q.bound * ap))
    out = ConstraintSet.of(new)
    if out.infeasible or not prune or not is_satisfiable(out):
        return out
    return ConstraintSet(frozenset(_prune_redundant(list(out.rows))))


def eliminate(c: ConstraintSet, s: str) -> ConstraintSet:
    """Projection of ``c`` onto ``c.symbols - {s}``."""
    if s not in c.symbols:
        raise ValueError(f"symbol {s!r} does not occur in the constraint set")
    return eliminate_many(c, [s])


def eliminate_many(c: ConstraintSet, syms: Iterable[str]) -> ConstraintSet:
    drop = set(syms) & c.symbols
    if not drop or c.infeasible:
        return c
    d = closed_view(c)
    if d is not None:
        if d.unsat:
            return ConstraintSet(frozenset(), True)
        kept = project(d, c.symbols - drop)
        return ConstraintSet(frozenset(reduced_rows(kept)))
    out = c
    for s in sorted(drop, key=sym_key):
        if s in out.symbols:
            out = fourier_motzkin(out, s)
            if out.infeasible:
                return out
            if _is_dbm(out):
                return eliminate_many(out, drop)
    return out


def _is_dbm(c: ConstraintSet) -> bool:
    return all(r.difference is not None for r in c.rows)


def canonicalize(c: ConstraintSet, order: Sequence[str]) -> ConstraintSet:
    """Canonical row set for ``c`` under the symbol ``order``.

    Difference systems go through closure and minimal reduction, so equal
    solution sets give equal results.  General systems are deduplicated and
    stripped of redundant rows.
    """
    rank = {s: i for i, s in enumerate(order)}
    missing = c.symbols - rank.keys()
    if missing:
        raise ValueError(f"order is missing symbols: {sorted(missing, key=sym_key)}")
    if c.infeasible:
        return c
    if not c.rows:
        return c
    d = dbm_of(c, sorted(c.symbols, key=lambda s: rank[s]))
    if d is not None:
        d = closure(d)
        if d.unsat:
            return ConstraintSet(frozenset(), True)
        return ConstraintSet(frozenset(reduced_rows(d)))
    if not is_satisfiable(c):
        return ConstraintSet(frozenset(), True)
    return ConstraintSet(frozenset(_prune_redundant(list(c.rows))))


def ordered_rows(c: ConstraintSet, order: Sequence[str]) -> list:
    rank = {s: i for i, s in enumerate(order)}
    return sorted(c.rows, key=lambda r: row_sort_key(r, rank))
