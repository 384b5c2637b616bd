"""Linear inequalities and constraint sets over time-stamp symbols.

All arithmetic is exact (:class:`fractions.Fraction`).  A row
``sum(c_i * x_i) <= b`` is stored with integer coefficients whose gcd is 1,
obtained by multiplying through with a positive factor, so that two rows
describing the same half-space compare equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd, lcm
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction]

_SYM_RE = re.compile(r"^(.*?)(\d+)$")


@lru_cache(maxsize=1 << 16)
def sym_key(sym: str):
    """Natural sort key: ``T2`` sorts before ``T10``."""
    m = _SYM_RE.match(sym)
    if m:
        return (m.group(1), int(m.group(2)), sym)
    return (sym, -1, sym)


_ONE = Fraction(1)
_MINUS_ONE = Fraction(-1)


@dataclass(frozen=True, order=False)
class LinearIneq:
    """``sum(coef * sym) <= bound`` with canonical integer coefficients."""

    terms: tuple  # ((sym, Fraction), ...) sorted by sym_key
    bound: Fraction

    @classmethod
    def make(cls, coeffs: Mapping[str, Number], bound: Number) -> Union["LinearIneq", bool]:
        """Build a canonical row; constant rows collapse to ``True``/``False``."""
        items = [(s, Fraction(c)) for s, c in coeffs.items() if c != 0]
        bound = Fraction(bound)
        if not items:
            return bound >= 0
        denom = lcm(*(c.denominator for _, c in items))
        nums = [c.numerator * (denom // c.denominator) for _, c in items]
        g = 0
        for v in nums:
            g = gcd(g, v)
        scale = Fraction(denom, g)
        terms = tuple(sorted(((s, c * scale) for s, c in items), key=lambda t: sym_key(t[0])))
        return cls(terms, bound * scale)

    @classmethod
    def diff(cls, x: str | None, y: str | None, bound: Number):
        """``x - y <= bound``; either side may be ``None`` (the constant 0)."""
        if x is not None and y is not None and x != y:
            terms = ((x, _ONE), (y, _MINUS_ONE))
            if sym_key(y) < sym_key(x):
                terms = terms[::-1]
            return cls(terms, Fraction(bound))
        coeffs: dict = {}
        if x is not None:
            coeffs[x] = coeffs.get(x, 0) + 1
        if y is not None:
            coeffs[y] = coeffs.get(y, 0) - 1
        return cls.make(coeffs, bound)

    @cached_property
    def symbols(self) -> frozenset:
        return frozenset(s for s, _ in self.terms)

    @cached_property
    def coeffs(self) -> dict:
        return dict(self.terms)

    @cached_property
    def difference(self):
        """``(x, y)`` with ``x - y <= bound`` if this is a difference row.

        Single-variable rows use ``None`` for the zero reference.  Returns
        ``None`` for rows that are not difference-form.
        """
        if len(self.terms) == 1:
            (s, c), = self.terms
            if c == 1:
                return (s, None)
            if c == -1:
                return (None, s)
            return None
        if len(self.terms) == 2:
            (s1, c1), (s2, c2) = self.terms
            if c1 == 1 and c2 == -1:
                return (s1, s2)
            if c1 == -1 and c2 == 1:
                return (s2, s1)
        return None

    def evaluate(self, point: Mapping[str, Fraction]) -> bool:
        return sum((c * point[s] for s, c in self.terms), Fraction(0)) <= self.bound

    def lhs(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((c * point[s] for s, c in self.terms), Fraction(0))

    def rename(self, mapping: Mapping[str, str]) -> "LinearIneq":
        coeffs: dict = {}
        for s, c in self.terms:
            t = mapping.get(s, s)
            coeffs[t] = coeffs.get(t, 0) + c
        row = LinearIneq.make(coeffs, self.bound)
        assert not isinstance(row, bool), "renaming merged all terms"
        return row

    def __str__(self) -> str:
        parts = []
        for s, c in self.terms:
            if c == 1:
                parts.append(f"+{s}")
            elif c == -1:
                parts.append(f"-{s}")
            else:
                parts.append(f"{'+' if c > 0 else '-'}{abs(c)}*{s}")
        text = "".join(parts)
        if text.startswith("+"):
            text = text[1:]
        return f"{text} <= {self.bound}"


@dataclass(frozen=True)
class ConstraintSet:
    """Conjunction of :class:`LinearIneq` rows.

    ``infeasible`` is set when a constant row evaluated to false at
    construction; rows are then irrelevant and kept empty.
    """

    rows: frozenset = frozenset()
    infeasible: bool = False
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @classmethod
    def of(cls, rows: Iterable[Union[LinearIneq, bool]]) -> "ConstraintSet":
        kept = []
        for r in rows:
            if r is True:
                continue
            if r is False:
                return cls(frozenset(), True)
            kept.append(r)
        return cls(frozenset(kept))

    @cached_property
    def symbols(self) -> frozenset:
        out: set = set()
        for r in self.rows:
            out.update(r.symbols)
        return frozenset(out)

    @cached_property
    def sorted_rows(self) -> tuple:
        return tuple(sorted(self.rows, key=row_sort_key))

    def conjoin(self, rows: Iterable[Union[LinearIneq, bool]]) -> "ConstraintSet":
        if self.infeasible:
            return self
        return ConstraintSet.of(list(self.rows) + list(rows))

    def rename(self, mapping: Mapping[str, str]) -> "ConstraintSet":
        if self.infeasible:
            return self
        return ConstraintSet(frozenset(r.rename(mapping) for r in self.rows))

    def holds_at(self, point: Mapping[str, Fraction]) -> bool:
        return not self.infeasible and all(r.evaluate(point) for r in self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.sorted_rows)

    def __str__(self) -> str:
        if self.infeasible:
            return "{false}"
        return "{" + ", ".join(str(r) for r in self.sorted_rows) + "}"

    def __getstate__(self):
        return {"rows": self.rows, "infeasible": self.infeasible}

    def __setstate__(self, state):
        object.__setattr__(self, "rows", state["rows"])
        object.__setattr__(self, "infeasible", state["infeasible"])
        object.__setattr__(self, "_cache", {})


def row_sort_key(row: LinearIneq, order: Mapping[str, int] | None = None):
    if order is None:
        return (tuple((sym_key(s), c) for s, c in row.terms), row.bound)
    return (tuple(sorted((order[s], c) for s, c in row.terms)), row.bound)


def parse_rational(text: str) -> Fraction:
    """Exact parse of ``3``, ``-1.5`` or ``7/2``."""
    return Fraction(text.strip())
