"""Symbolic states <M, C>, normalization, inclusion and canonical encoding."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

from ..constraints import (
    ConstraintSet,
    LinearIneq,
    canonicalize,
    difference_bound,
    eliminate_many,
    entails_all,
    is_satisfiable,
    ordered_rows,
    sym_key,
)
from ..wire import DecodeError, Reader, put_rational, put_str, put_varint
from .net import Net

ANON = "_"
MAX_LABELINGS = 720


class PlaceTokens(NamedTuple):
    named: tuple  # symbol names (repeats allowed), sorted by sym_key
    anon: int


@dataclass(frozen=True)
class SymbolicState:
    marking: tuple  # PlaceTokens per place, canonical place order
    constraints: ConstraintSet
    now: str
    _memo: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __getstate__(self):
        return {"marking": self.marking, "constraints": self.constraints, "now": self.now}

    def __setstate__(self, st):
        object.__setattr__(self, "marking", tuple(PlaceTokens(tuple(n), a) for n, a in st["marking"]))
        object.__setattr__(self, "constraints", st["constraints"])
        object.__setattr__(self, "now", st["now"])
        object.__setattr__(self, "_memo", {})

    @property
    def named_symbols(self) -> set:
        out: set = set()
        for pt in self.marking:
            out.update(pt.named)
        return out

    def encode(self) -> bytes:
        memo = self._memo
        if "enc" not in memo:
            memo["enc"] = encode_state(self)
        return memo["enc"]

    @property
    def digest(self) -> bytes:
        memo = self._memo
        if "digest" not in memo:
            memo["digest"] = hashlib.blake2b(self.encode(), digest_size=16).digest()
        return memo["digest"]

    def render(self, places) -> str:
        parts = []
        for p, pt in zip(places, self.marking):
            toks = list(pt.named) + ["τ"] * pt.anon
            if toks:
                parts.append(f"{p}:{{{','.join(toks)}}}")
        rows = "; ".join(str(r) for r in ordered_rows(self.constraints, self._order()))
        return f"{' '.join(parts) or '(empty)'} | now={self.now} | {rows or 'true'}"

    def _order(self):
        return sorted(self.constraints.symbols | self.named_symbols | {self.now}, key=sym_key)


def make_marking(tokens_per_place) -> tuple:
    """Marking from per-place iterables of symbols (``ANON`` for anonymous)."""
    out = []
    for toks in tokens_per_place:
        named = tuple(sorted((t for t in toks if t != ANON), key=sym_key))
        out.append(PlaceTokens(named, sum(1 for t in toks if t == ANON)))
    return tuple(out)


def encode_state(s: SymbolicState) -> bytes:
    """Canonical byte encoding; only meaningful for normalized states."""
    out = bytearray()
    put_varint(out, len(s.marking))
    for pt in s.marking:
        put_varint(out, pt.anon)
        put_varint(out, len(pt.named))
        for sym in pt.named:
            put_str(out, sym)
    put_str(out, s.now)
    rows = ordered_rows(s.constraints, sorted(s.constraints.symbols, key=sym_key))
    put_varint(out, 1 if s.constraints.infeasible else 0)
    put_varint(out, len(rows))
    for r in rows:
        put_varint(out, len(r.terms))
        for sym, c in r.terms:
            put_str(out, sym)
            put_rational(out, c)
        put_rational(out, r.bound)
    return bytes(out)


def decode_state(data: bytes, reader: Optional[Reader] = None) -> SymbolicState:
    r = reader or Reader(data)
    k = r.varint()
    marking = []
    for _ in range(k):
        anon = r.varint()
        n = r.varint()
        named = tuple(r.str_() for _ in range(n))
        marking.append(PlaceTokens(named, anon))
    now = r.str_()
    infeasible = r.varint()
    nrows = r.varint()
    rows = []
    for _ in range(nrows):
        start = r.pos
        nt = r.varint()
        coeffs = {}
        for _ in range(nt):
            sym = r.str_()
            coeffs[sym] = r.rational()
        bound = r.rational()
        row = LinearIneq.make(coeffs, bound)
        if isinstance(row, bool):
            raise DecodeError(start, "constant row in encoded state")
        rows.append(row)
    if reader is None:
        r.expect_end()
    cs = ConstraintSet(frozenset(), True) if infeasible else ConstraintSet(frozenset(rows))
    return SymbolicState(tuple(marking), cs, now)


# --- normalization -------------------------------------------------------


def normalize(s: SymbolicState, net: Net) -> SymbolicState:
    """Anonymize irrelevant tokens, project dead symbols, rename canonically."""
    if not is_satisfiable(s.constraints):
        raise ValueError("cannot normalize an unsatisfiable state")
    marked = [bool(pt.named) or pt.anon > 0 for pt in s.marking]
    relevant = net.relevant_places(marked)
    marking = []
    for p, pt in zip(net.places, s.marking):
        if pt.named and p not in relevant:
            marking.append(PlaceTokens((), pt.anon + len(pt.named)))
        else:
            marking.append(pt)
    keep = set()
    for pt in marking:
        keep.update(pt.named)
    keep.add(s.now)
    c = s.constraints
    dead = c.symbols - keep
    if dead:
        c = eliminate_many(c, dead)
    # constraint-free tokens carry no information: a fresh unconstrained
    # symbol at binding time is equivalent
    occurrences: dict = {}
    for pt in marking:
        for sym in pt.named:
            occurrences[sym] = occurrences.get(sym, 0) + 1
    free = {x for x, n in occurrences.items() if n == 1 and x != s.now and x not in c.symbols}
    if free:
        marking = [
            PlaceTokens(tuple(x for x in pt.named if x not in free), pt.anon + sum(1 for x in pt.named if x in free))
            for pt in marking
        ]
    return _canonical(tuple(marking), c, s.now)


def _bound_key(v: Optional[Fraction]):
    return (1, Fraction(0)) if v is None else (0, v)


def _signatures(marking, c: ConstraintSet, now: str) -> dict:
    profile: dict = {}
    for i, pt in enumerate(marking):
        for sym in pt.named:
            profile.setdefault(sym, []).append(i)
    sig = {}
    for sym, places in profile.items():
        if sym == now:
            sig[sym] = (tuple(places), 1, (0, Fraction(0)), (0, Fraction(0)))
        else:
            up = difference_bound(c, sym, now)
            down = difference_bound(c, now, sym)
            sig[sym] = (tuple(places), 0, _bound_key(up), _bound_key(down))
    return sig


def _place_arrangements(named: tuple, sig: dict) -> list:
    """Distinct orders of one place's tokens that respect signature order."""
    if len(named) <= 1:
        return [named]
    groups = [list(g) for _, g in itertools.groupby(sorted(named, key=lambda x: (sig[x], sym_key(x))), key=lambda x: sig[x])]
    per_group = []
    for g in groups:
        if len(set(g)) <= 1:
            per_group.append([tuple(g)])
        else:
            per_group.append(sorted(set(itertools.permutations(g)), key=lambda t: [sym_key(x) for x in t]))
    return [sum(combo, ()) for combo in itertools.product(*per_group)]


def _canonical(marking: tuple, c: ConstraintSet, now: str) -> SymbolicState:
    sig = _signatures(marking, c, now)
    options = [_place_arrangements(pt.named, sig) for pt in marking]
    best = None
    seen = set()
    for count, combo in enumerate(itertools.product(*options)):
        if count >= MAX_LABELINGS:
            break
        mapping: dict = {}
        for arrangement in combo:
            for sym in arrangement:
                if sym not in mapping:
                    mapping[sym] = f"T{len(mapping)}"
        if now not in mapping:
            mapping[now] = f"T{len(mapping)}"
        key = tuple(sorted(mapping.items()))
        if key in seen:
            continue
        seen.add(key)
        names = [f"T{i}" for i in range(len(mapping))]
        cand_c = canonicalize(c.rename(mapping), names)
        cand_m = tuple(
            PlaceTokens(tuple(sorted((mapping[x] for x in pt.named), key=sym_key)), pt.anon) for pt in marking
        )
        cand = SymbolicState(cand_m, cand_c, mapping[now])
        if best is None or cand.encode() < best.encode():
            best = cand
    return best


# --- inclusion -----------------------------------------------------------


def _shape(marking) -> tuple:
    return tuple((len(pt.named), pt.anon) for pt in marking)


def _profiles(s: SymbolicState) -> dict:
    prof: dict = {}
    for i, pt in enumerate(s.marking):
        for sym in pt.named:
            prof.setdefault(sym, []).append(i)
    return {sym: tuple(v) for sym, v in prof.items()}


def includes(a: SymbolicState, b: SymbolicState) -> bool:
    """Sufficient condition for ``a`` being contained in ``b``.

    Markings must coincide up to a place-preserving renaming of named
    symbols (``now`` onto ``now``) under which ``C_a`` entails every row of
    ``C_b``.
    """
    if _shape(a.marking) != _shape(b.marking):
        return False
    if a.marking == b.marking and a.now == b.now:
        if entails_all(a.constraints, b.constraints):
            return True
        if all(len(set(pt.named)) <= 1 for pt in a.marking):
            return False
    for mapping in _bijections(a, b):
        inv = {bs: as_ for as_, bs in mapping.items()}
        if entails_all(a.constraints, b.constraints.rename(inv)):
            return True
    return False


def _bijections(a: SymbolicState, b: SymbolicState, limit: int = 5040):
    """Renamings of ``a``'s symbols onto ``b``'s that map marking onto marking."""
    pa, pb = _profiles(a), _profiles(b)
    a_syms = sorted(pa, key=sym_key)
    if a.now not in pa:
        a_syms.append(a.now)
        pa[a.now] = ()
    if b.now not in pb:
        pb[b.now] = ()
    if len(pa) != len(pb):
        return
    by_profile: dict = {}
    for sym, prof in pb.items():
        by_profile.setdefault((prof, sym == b.now), []).append(sym)
    mapping: dict = {}
    used: set = set()
    produced = 0

    def rec(i):
        nonlocal produced
        if produced >= limit:
            return
        if i == len(a_syms):
            produced += 1
            yield dict(mapping)
            return
        x = a_syms[i]
        for y in by_profile.get((pa[x], x == a.now), ()):
            if y in used:
                continue
            mapping[x] = y
            used.add(y)
            yield from rec(i + 1)
            used.discard(y)
            del mapping[x]

    yield from rec(0)


def state_digest(s: SymbolicState) -> bytes:
    return s.digest


def equal_states(a: SymbolicState, b: SymbolicState) -> bool:
    return a.encode() == b.encode()
