"""Slow, independent reference checks used by the test-suite.

Constraint oracles evaluate rows directly on rational points: a finite grid
(one-sided: it can refute containment but never prove it) and an exact
vertex enumeration inside a large box (Gaussian elimination over every
choice of tight rows).  Neither touches the kernel's Simplex or DBM code.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .model.firing import InfeasibleFiring, enabled_bindings, fire_raw
from .model.net import Net
from .model.state import SymbolicState, normalize


class OracleExplosion(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleGrid:
    """Per-symbol inclusive ranges ``(lo, hi)`` sampled every ``step``."""

    ranges: tuple  # ((sym, lo, hi), ...)
    step: Fraction = Fraction(1)

    @classmethod
    def uniform(cls, symbols: Iterable[str], lo, hi, step=1) -> "SampleGrid":
        return cls(tuple((s, Fraction(lo), Fraction(hi)) for s in sorted(symbols)), Fraction(step))

    def points(self):
        axes = []
        for _, lo, hi in self.ranges:
            n = int((hi - lo) / self.step)
            axes.append([lo + i * self.step for i in range(n + 1)])
        names = [s for s, _, _ in self.ranges]
        for combo in itertools.product(*axes):
            yield dict(zip(names, combo))


def _rows(c) -> list:
    """``[(coeffs dict, bound)]`` from a ConstraintSet or row iterable."""
    if getattr(c, "infeasible", False):
        return [({}, Fraction(-1))]
    return [(dict(r.terms), r.bound) for r in c]


def _holds(rows, point) -> bool:
    return all(sum(coef * point.get(s, 0) for s, coef in terms.items()) <= b for terms, b in rows)


def grid_satisfiable(c, grid: SampleGrid) -> Optional[dict]:
    """A grid point satisfying ``c``, or ``None``."""
    rows = _rows(c)
    for p in grid.points():
        if _holds(rows, p):
            return p
    return None


def containment_witness(c_a, c_b, grid: SampleGrid) -> Optional[dict]:
    """A grid point in region A but outside region B, or ``None``."""
    ra, rb = _rows(c_a), _rows(c_b)
    for p in grid.points():
        if _holds(ra, p) and not _holds(rb, p):
            return p
    return None


def region_contains(c_a, c_b, grid: SampleGrid) -> bool:
    """No grid point of A lies outside B (vacuously true for empty A)."""
    return containment_witness(c_a, c_b, grid) is None


# --- exact vertex enumeration --------------------------------------------


def _solve_square(a: list, b: list) -> Optional[list]:
    """Unique solution of ``a x = b`` or ``None`` when singular."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def box_vertices(c, symbols: Sequence[str], box=10**5) -> list:
    """Vertices of ``c`` intersected with ``[-box, box]^d``."""
    syms = list(symbols)
    d = len(syms)
    rows = _rows(c)
    if any(not terms and b < 0 for terms, b in rows):
        return []
    box = Fraction(box)
    dense = [([terms.get(s, 0) for s in syms], b) for terms, b in rows if terms]
    for i in range(d):
        e = [0] * d
        e[i] = 1
        dense.append((list(e), box))
        e[i] = -1
        dense.append((list(e), box))
    if d == 0:
        return [{}]
    seen = set()
    out = []
    for combo in itertools.combinations(range(len(dense)), d):
        x = _solve_square([dense[k][0] for k in combo], [Fraction(dense[k][1]) for k in combo])
        if x is None:
            continue
        key = tuple(x)
        if key in seen:
            continue
        seen.add(key)
        if all(sum(a * v for a, v in zip(coefs, x)) <= b for coefs, b in dense):
            out.append(dict(zip(syms, x)))
    return out


def exact_satisfiable(c, symbols: Optional[Sequence[str]] = None, box=10**5) -> bool:
    syms = sorted(c.symbols) if symbols is None else symbols
    return bool(box_vertices(c, syms, box))


def exact_maximum(c, objective: dict, symbols: Optional[Sequence[str]] = None, box=10**5) -> Optional[Fraction]:
    """Maximum of a linear objective over ``c`` within the box (``None`` if empty)."""
    syms = sorted(set(c.symbols) | set(objective)) if symbols is None else symbols
    verts = box_vertices(c, syms, box)
    if not verts:
        return None
    return max(sum(coef * v.get(s, 0) for s, coef in objective.items()) for v in verts)


def exact_entails(c, row, box=10**5) -> bool:
    """``c`` implies ``row`` (requires ``c`` satisfiable and the box to hold all vertices)."""
    best = exact_maximum(c, dict(row.terms), box=box)
    if best is None:
        raise ValueError("entailment from an empty region")
    return best <= row.bound


# --- exhaustive expansion ------------------------------------------------


def brute_expand(net: Net, initial: SymbolicState, depth: int, cap: int = 20000) -> dict:
    """Normalized states reachable in at most ``depth`` firings, keyed by digest.

    Successors are built with the raw firing rule and keep every historical
    symbol; normalization happens only when a state is recorded, so no
    merging or projection influences which branches are explored.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    found = {initial.digest: initial}
    layer = [initial]
    for d in range(depth):
        nxt = []
        for raw in layer:
            enabled = enabled_bindings(raw, net)
            for b in enabled:
                try:
                    succ = fire_raw(raw, net, b, enabled, fire_sym=f"_f{d}", fresh_prefix=f"_a{d}_")
                except InfeasibleFiring:
                    continue
                nxt.append(succ)
                s = normalize(succ, net)
                found.setdefault(s.digest, s)
                if len(nxt) > cap:
                    raise OracleExplosion(f"more than {cap} raw states at depth {d + 1}")
        layer = nxt
    return found
