"""Two-phase dense-tableau Simplex over rationals with Bland's rule.

Solves ``max c.x  s.t.  A x <= b`` for free variables ``x`` by the split
``x = x+ - x-``.  Small problems only: it is the fallback for constraint
sets that do not fit a difference-bound matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .linear import LinearIneq, sym_key

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass
class LPResult:
    status: str
    value: Optional[Fraction] = None
    point: Optional[dict] = None


def _pivot(tab: list, basis: list, r: int, col: int) -> None:
    prow = tab[r]
    p = prow[col]
    if p != 1:
        inv = _ONE / p
        prow = [v * inv for v in prow]
        tab[r] = prow
    nz = [(j, v) for j, v in enumerate(prow) if v]
    for i, row in enumerate(tab):
        if i == r:
            continue
        f = row[col]
        if not f:
            continue
        for j, v in nz:
            row[j] -= f * v
    basis[r] = col


def _run(tab: list, basis: list, ncols: int, allowed: Sequence[bool]) -> bool:
    """Maximize the objective stored in the last row; False if unbounded.

    The objective row holds reduced costs ``z_j - c_j``; a negative entry is
    an improving column.  Bland: lowest improving column, lowest basic
    variable among ratio ties.
    """
    m = len(tab) - 1
    obj = tab[m]
    while True:
        col = -1
        for j in range(ncols):
            if allowed[j] and obj[j] < 0:
                col = j
                break
        if col < 0:
            return True
        best = None
        r = -1
        for i in range(m):
            a = tab[i][col]
            if a > 0:
                ratio = tab[i][ncols] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[r]):
                    best = ratio
                    r = i
        if r < 0:
            return False
        _pivot(tab, basis, r, col)
        obj = tab[m]


def solve(rows: Sequence[LinearIneq], objective: Mapping[str, Fraction] | None = None) -> LPResult:
    """Maximize ``objective`` over ``rows``; feasibility only when omitted."""
    syms = set()
    for r in rows:
        syms.update(r.symbols)
    if objective:
        syms.update(objective)
    syms = sorted(syms, key=sym_key)
    nv = len(syms)
    col_of = {s: i for i, s in enumerate(syms)}
    m = len(rows)
    # columns: x+ (nv), x- (nv), slack (m), artificial (m)
    n_struct = 2 * nv
    n_slack = m
    art_idx = []
    tab = []
    for i, r in enumerate(rows):
        line = [_ZERO] * (n_struct + n_slack)
        for s, c in r.terms:
            j = col_of[s]
            line[j] = c
            line[nv + j] = -c
        line[n_struct + i] = _ONE
        rhs = r.bound
        if rhs < 0:
            line = [-v for v in line]
            rhs = -rhs
            art_idx.append(i)
        tab.append(line + [rhs])
    n_art = len(art_idx)
    ncols = n_struct + n_slack + n_art
    for i in range(m):
        tab[i] = tab[i][:-1] + [_ZERO] * n_art + [tab[i][-1]]
    for k, i in enumerate(art_idx):
        tab[i][n_struct + n_slack + k] = _ONE
    art_pos = {i: k for k, i in enumerate(art_idx)}
    basis = []
    for i in range(m):
        basis.append(n_struct + n_slack + art_pos[i] if i in art_pos else n_struct + i)

    if n_art:
        # phase 1: maximize -sum(artificial); reduced costs row
        obj = [_ZERO] * (ncols + 1)
        for k in range(n_art):
            obj[n_struct + n_slack + k] = _ONE
        for i in art_idx:
            row = tab[i]
            for j in range(ncols + 1):
                obj[j] -= row[j]
        tab.append(obj)
        _run(tab, basis, ncols, [True] * ncols)
        if tab[-1][ncols] < 0:
            return LPResult(INFEASIBLE)
        tab.pop()
        # drive remaining artificials out of the basis
        first_art = n_struct + n_slack
        for i in range(m):
            if basis[i] >= first_art:
                for j in range(first_art):
                    if tab[i][j] != 0:
                        _pivot(tab, basis, i, j)
                        break
    allowed = [j < n_struct + n_slack for j in range(ncols)]

    obj = [_ZERO] * (ncols + 1)
    if objective:
        for s, c in objective.items():
            j = col_of[s]
            obj[j] = -Fraction(c)
            obj[nv + j] = Fraction(c)
        for i in range(m):
            b = basis[i]
            f = obj[b]
            if f:
                row = tab[i]
                for j in range(ncols + 1):
                    obj[j] -= f * row[j]
    tab.append(obj)
    if not _run(tab, basis, ncols, allowed):
        return LPResult(UNBOUNDED)
    values = [_ZERO] * ncols
    for i in range(m):
        values[basis[i]] = tab[i][ncols]
    point = {s: values[col_of[s]] - values[nv + col_of[s]] for s in syms}
    return LPResult(OPTIMAL, tab[-1][ncols], point)
