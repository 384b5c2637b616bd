"""Enabled bindings and the firing rule (the Map's unit step)."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Optional

from ..constraints import ConstraintSet, LinearIneq, is_satisfiable, sym_key
from .net import Net, Transition
from .state import ANON, PlaceTokens, SymbolicState, normalize

FIRE = "_f"


class InfeasibleFiring(ValueError):
    """The successor's constraints are unsatisfiable: a dead symbolic branch."""


@dataclass(frozen=True)
class Binding:
    transition: str
    tokens: tuple  # one symbol (or ANON) per input slot, transition slot order

    @property
    def label(self) -> str:
        return f"{self.transition}({','.join(self.tokens)})"

    def consumed(self, t: Transition) -> Counter:
        return Counter(zip((p for p, _ in t.slots), self.tokens))


def _token_key(tok: str):
    return (1, ("", 0, "")) if tok == ANON else (0, sym_key(tok))


def _choices(pt: PlaceTokens, k: int, ordered: bool) -> list:
    occ = list(pt.named) + [ANON] * pt.anon
    if len(occ) < k:
        return []
    if ordered:
        picks = set(itertools.permutations(occ, k))
    else:
        picks = {tuple(sorted(c, key=_token_key)) for c in itertools.combinations(occ, k)}
    return sorted(picks, key=lambda t: [_token_key(x) for x in t])


def _slot_symbols(t: Transition, tokens: tuple, fresh: Iterator[str]) -> dict:
    out = {}
    for slot, tok in zip(t.slots, tokens):
        out[slot] = next(fresh) if tok == ANON else tok
    return out


def _window_rows(t: Transition, slot_syms: dict, now: str, tf: str) -> list:
    """``lower <= tf <= upper`` as two rows."""
    lo = t.lower.instantiate(slot_syms, now)
    lo[tf] = lo.get(tf, 0) - 1
    hi = {s: -c for s, c in t.upper.instantiate(slot_syms, now).items()}
    hi[tf] = hi.get(tf, 0) + 1
    return [LinearIneq.make(lo, -t.lower.constant), LinearIneq.make(hi, t.upper.constant)]


def _fresh_names(prefix: str) -> Iterator[str]:
    return (f"{prefix}{i}" for i in itertools.count())


def candidate_bindings(s: SymbolicState, net: Net) -> list:
    """Token assignments with enough tokens, before any time check."""
    out = []
    for t in net.transitions:
        per_place = []
        counts = t.input_counts
        for p in dict.fromkeys(t.inputs):
            pt = s.marking[net.place_index[p]]
            per_place.append(_choices(pt, counts[p], p in t.read_places))
        if any(not ch for ch in per_place):
            continue
        for combo in itertools.product(*per_place):
            out.append(Binding(t.name, sum(combo, ())))
    return out


def time_feasible(s: SymbolicState, net: Net, b: Binding) -> bool:
    t = net.by_name[b.transition]
    slot_syms = _slot_symbols(t, b.tokens, _fresh_names("_a"))
    rows = _window_rows(t, slot_syms, s.now, FIRE)
    rows.append(LinearIneq.diff(s.now, FIRE, 0))
    return is_satisfiable(s.constraints.conjoin(rows))


def enabled_bindings(s: SymbolicState, net: Net) -> list:
    """Bindings whose firing window meets ``[now, +oo)`` under ``C``."""
    return [b for b in candidate_bindings(s, net) if time_feasible(s, net, b)]


def _remaining(s: SymbolicState, net: Net, consumed: Counter) -> Counter:
    have: Counter = Counter()
    for p, pt in zip(net.places, s.marking):
        for x in pt.named:
            have[(p, x)] += 1
        if pt.anon:
            have[(p, ANON)] += pt.anon
    have.subtract(consumed)
    return have


def fire_raw(s: SymbolicState, net: Net, b: Binding, enabled: Optional[list] = None,
             fire_sym: str = FIRE, fresh_prefix: str = "_a") -> SymbolicState:
    """Successor before normalization; raises :class:`InfeasibleFiring`.

    Adds ``lower <= tf <= upper``, ``now <= tf`` and, for every other strong
    binding enabled in ``s`` that survives the consumption, ``tf <= upper``.
    """
    t = net.by_name[b.transition]
    if enabled is None:
        enabled = enabled_bindings(s, net)
    fresh = _fresh_names(fresh_prefix)
    slot_syms = _slot_symbols(t, b.tokens, fresh)
    rows = _window_rows(t, slot_syms, s.now, fire_sym)
    rows.append(LinearIneq.diff(s.now, fire_sym, 0))
    consumed = b.consumed(t)
    left = _remaining(s, net, consumed)
    for other in enabled:
        if other == b:
            continue
        ot = net.by_name[other.transition]
        if not ot.strong:
            continue
        need = other.consumed(ot)
        if any(left[key] < n for key, n in need.items()):
            continue
        osyms = _slot_symbols(ot, other.tokens, fresh)
        hi = {x: -c for x, c in ot.upper.instantiate(osyms, s.now).items()}
        hi[fire_sym] = hi.get(fire_sym, 0) + 1
        rows.append(LinearIneq.make(hi, ot.upper.constant))
    marking = []
    out_counts = Counter(t.outputs)
    for p, pt in zip(net.places, s.marking):
        named = list(pt.named)
        anon = pt.anon
        for (cp, tok), n in consumed.items():
            if cp != p:
                continue
            for _ in range(n):
                if tok == ANON:
                    anon -= 1
                else:
                    named.remove(tok)
        named.extend([fire_sym] * out_counts.get(p, 0))
        marking.append(PlaceTokens(tuple(sorted(named, key=sym_key)), anon))
    c = s.constraints.conjoin(rows)
    if not is_satisfiable(c):
        raise InfeasibleFiring(f"{b.label} has no feasible firing instant")
    return SymbolicState(tuple(marking), c, fire_sym)


def fire(s: SymbolicState, net: Net, b: Binding, enabled: Optional[list] = None) -> SymbolicState:
    """Normalized successor of ``s`` by ``b``."""
    return normalize(fire_raw(s, net, b, enabled), net)


def successors(s: SymbolicState, net: Net) -> list:
    """``[(binding, successor), ...]`` for every feasible firing, in binding order."""
    enabled = enabled_bindings(s, net)
    out = []
    for b in enabled:
        try:
            out.append((b, fire(s, net, b, enabled)))
        except InfeasibleFiring:
            continue
    return out
