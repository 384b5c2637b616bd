"""TB net structure: places, time expressions and transitions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

NOW = ("@now", 0)  # term key for the time of the last event


@dataclass(frozen=True)
class Place:
    name: str
    index: int  # 1-based position in the canonical place list


@dataclass(frozen=True)
class TimeExpr:
    """Affine function of the enabling tokens' time-stamps.

    ``terms`` maps ``(place, slot)`` (slot is 1-based within the transition's
    input multiset) or :data:`NOW` to a rational coefficient.
    """

    terms: tuple = ()
    constant: Fraction = Fraction(0)

    @classmethod
    def of(cls, terms: Mapping, constant=0) -> "TimeExpr":
        items = tuple(sorted((k, Fraction(v)) for k, v in terms.items() if v != 0))
        return cls(items, Fraction(constant))

    @cached_property
    def slots(self) -> frozenset:
        return frozenset(k for k, _ in self.terms if k != NOW)

    @property
    def reads_now(self) -> bool:
        return any(k == NOW for k, _ in self.terms)

    def instantiate(self, slot_syms: Mapping, now: str) -> dict:
        """Coefficient map over symbols (constant excluded)."""
        out: dict = {}
        for key, c in self.terms:
            sym = now if key == NOW else slot_syms[key]
            out[sym] = out.get(sym, 0) + c
        return out

    def __str__(self) -> str:
        parts = []
        for key, c in self.terms:
            name = "now" if key == NOW else f"tok({key[0]},{key[1]})"
            if c == 1:
                parts.append(f"+ {name}")
            elif c == -1:
                parts.append(f"- {name}")
            else:
                parts.append(f"{'+' if c > 0 else '-'} {abs(c)}*{name}")
        if self.constant or not parts:
            parts.append(f"{'+' if self.constant >= 0 else '-'} {abs(self.constant)}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


@dataclass(frozen=True)
class Transition:
    name: str
    inputs: tuple  # place names, multiset, in canonical place order
    outputs: tuple
    lower: TimeExpr
    upper: TimeExpr
    strong: bool = False

    @cached_property
    def input_counts(self) -> dict:
        return dict(Counter(self.inputs))

    @cached_property
    def read_places(self) -> frozenset:
        """Input places whose token time-stamps enter ``lower`` or ``upper``."""
        return frozenset(p for p, _ in self.lower.slots | self.upper.slots)

    @cached_property
    def slots(self) -> tuple:
        """``((place, slot), ...)`` in binding order."""
        out = []
        for p in dict.fromkeys(self.inputs):
            for i in range(1, self.input_counts[p] + 1):
                out.append((p, i))
        return tuple(out)


@dataclass(frozen=True)
class Net:
    name: str
    places: tuple  # canonical place order p1..pk
    transitions: tuple  # sorted by name

    @cached_property
    def place_index(self) -> dict:
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def by_name(self) -> dict:
        return {t.name: t for t in self.transitions}

    @property
    def k(self) -> int:
        return len(self.places)

    def place_list(self) -> list:
        return [Place(p, i + 1) for i, p in enumerate(self.places)]

    def potentially_fireable(self, marked: Sequence[bool]) -> list:
        """Transitions that may still fire from a marking with this support.

        Structural over-approximation: token counts and time are ignored, a
        transition is live once all of its input places are markable.
        """
        markable = {p for p, m in zip(self.places, marked) if m}
        live = []
        pending = list(self.transitions)
        changed = True
        while changed:
            changed = False
            rest = []
            for t in pending:
                if set(t.inputs) <= markable:
                    live.append(t)
                    markable.update(t.outputs)
                    changed = True
                else:
                    rest.append(t)
            pending = rest
        return live

    def relevant_places(self, marked: Sequence[bool]) -> frozenset:
        key = tuple(marked)
        cache = self.__dict__.setdefault("_relevance_cache", {})
        if key not in cache:
            out: set = set()
            for t in self.potentially_fireable(marked):
                out.update(t.read_places)
            cache[key] = frozenset(out)
        return cache[key]


def make_net(name: str, places: Sequence[str], transitions: Sequence[Transition]) -> Net:
    order = {p: i for i, p in enumerate(places)}
    fixed = []
    for t in transitions:
        fixed.append(Transition(
            t.name,
            tuple(sorted(t.inputs, key=order.__getitem__)),
            tuple(sorted(t.outputs, key=order.__getitem__)),
            t.lower, t.upper, t.strong,
        ))
    return Net(name, tuple(places), tuple(sorted(fixed, key=lambda t: t.name)))
