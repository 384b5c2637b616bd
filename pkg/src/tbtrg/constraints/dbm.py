"""Difference-bound matrices: the Floyd-Warshall path of the kernel.

Entry ``(i, j)`` bounds ``x_i - x_j``; index 0 is the zero reference, so
``x <= c`` lives at ``(x, 0)`` and ``-x <= c`` at ``(0, x)``.  ``None`` is +oo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .linear import ConstraintSet, LinearIneq, sym_key

ZERO = None  # the zero reference in difference pairs


@dataclass(frozen=True)
class DbmView:
    index: tuple  # (ZERO, sym1, sym2, ...)
    matrix: tuple  # tuple of tuples of Fraction | None
    closed: bool = False
    unsat: bool = False

    @property
    def size(self) -> int:
        return len(self.index)

    def position(self) -> dict:
        return {s: i for i, s in enumerate(self.index)}

    def bound(self, x, y) -> Optional[Fraction]:
        pos = self.position()
        return self.matrix[pos[x]][pos[y]]


def is_difference_set(c: ConstraintSet) -> bool:
    return all(r.difference is not None for r in c.rows)


def dbm_of(c: ConstraintSet, symbols: Sequence[str] | None = None) -> Optional[DbmView]:
    """Matrix view of ``c`` or ``None`` when some row is not difference-form."""
    if not is_difference_set(c):
        return None
    if symbols is None:
        symbols = sorted(c.symbols, key=sym_key)
    index = (ZERO,) + tuple(symbols)
    pos = {s: i for i, s in enumerate(index)}
    n = len(index)
    m: list = [[None] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = Fraction(0)
    for r in c.rows:
        x, y = r.difference
        i, j = pos[x], pos[y]
        if m[i][j] is None or r.bound < m[i][j]:
            m[i][j] = r.bound
    unsat = c.infeasible
    return DbmView(index, tuple(tuple(row) for row in m), False, unsat)


def closure(d: DbmView) -> DbmView:
    """All-pairs tightest bounds; flags a negative cycle as unsatisfiable.

    Runs on integers scaled by the common denominator, which is exact and
    avoids Fraction arithmetic in the cubic loop.
    """
    if d.closed:
        return d
    n = d.size
    scale = 1
    for row in d.matrix:
        for v in row:
            if v is not None and v.denominator != 1:
                scale = math.lcm(scale, v.denominator)
    m = [[None if v is None else v.numerator * (scale // v.denominator) for v in row] for row in d.matrix]
    for k in range(n):
        mk = m[k]
        for i in range(n):
            mik = m[i][k]
            if mik is None:
                continue
            mi = m[i]
            for j in range(n):
                mkj = mk[j]
                if mkj is None:
                    continue
                v = mik + mkj
                cur = mi[j]
                if cur is None or v < cur:
                    mi[j] = v
    unsat = d.unsat or any(m[i][i] < 0 for i in range(n))
    matrix = tuple(tuple(None if v is None else Fraction(v, scale) for v in row) for row in m)
    return DbmView(d.index, matrix, True, unsat)


def project(d: DbmView, keep: Iterable) -> DbmView:
    """Drop every symbol not in ``keep``; ``d`` must be closed."""
    assert d.closed
    keep = set(keep)
    idx = [i for i, s in enumerate(d.index) if i == 0 or s in keep]
    index = tuple(d.index[i] for i in idx)
    matrix = tuple(tuple(d.matrix[i][j] for j in idx) for i in idx)
    return DbmView(index, matrix, True, d.unsat)


def reduced_rows(d: DbmView) -> list:
    """A minimal row set with the same closure as ``d`` (``d`` closed, sat).

    Zero-weight cycles are collapsed first: members of one equivalence class
    are chained in index order, the class representative (lowest index)
    carries the inter-class edges, and an inter-class edge is dropped when a
    two-hop path through another representative already yields it.
    """
    assert d.closed and not d.unsat
    n = d.size
    m = d.matrix
    rep = list(range(n))
    for i in range(n):
        if rep[i] != i:
            continue
        for j in range(i + 1, n):
            if rep[j] == j and m[i][j] is not None and m[j][i] is not None and m[i][j] + m[j][i] == 0:
                rep[j] = i
    classes: dict = {}
    for i in range(n):
        classes.setdefault(rep[i], []).append(i)
    rows = []

    def emit(i, j):
        row = LinearIneq.diff(d.index[i], d.index[j], m[i][j])
        if row is not True:
            rows.append(row)

    for members in classes.values():
        if len(members) > 1:
            for a, b in zip(members, members[1:] + members[:1]):
                emit(a, b)
    reps = sorted(classes)
    for i in reps:
        for j in reps:
            if i == j or m[i][j] is None:
                continue
            implied = False
            for k in reps:
                if k == i or k == j:
                    continue
                if m[i][k] is not None and m[k][j] is not None and m[i][k] + m[k][j] <= m[i][j]:
                    implied = True
                    break
            if not implied:
                emit(i, j)
    return rows


def closed_view(c: ConstraintSet) -> Optional[DbmView]:
    """Cached closed DBM of ``c`` (``None`` when not difference-form)."""
    cache = c._cache
    if "dbm" not in cache:
        d = dbm_of(c)
        cache["dbm"] = closure(d) if d is not None else None
    return cache["dbm"]
