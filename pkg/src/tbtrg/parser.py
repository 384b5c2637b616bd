"""Reader for the ``.tbn`` text format (grammar in docs/net-format.md)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .constraints import ConstraintSet, LinearIneq, is_satisfiable
from .model.net import NOW, Net, TimeExpr, Transition, make_net
from .model.state import ANON, SymbolicState, make_marking, normalize

_IDENT = r"[A-Za-z][A-Za-z0-9_]*"
_TOKEN_RE = re.compile(
    rf"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<id>{_IDENT}|_)|(?P<op><=|>=|->|[-+*(),=;:{{}}]))"
)


class NetParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


class NetSemanticError(NetParseError):
    pass


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _lex(text: str, line: int) -> list:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise NetParseError(f"unexpected character {text[bad]!r}", line, bad + 1)
        kind = m.lastgroup
        out.append(_Tok(kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, toks: list, line: int, raw: str):
        self.toks = toks
        self.i = 0
        self.line = line
        self.raw = raw

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise NetParseError("unexpected end of line", self.line, len(self.raw) + 1)
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise NetParseError(f"expected {text!r}, found {tok.text!r}", self.line, tok.col)
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.i += 1
            return True
        return False

    def ident(self) -> _Tok:
        tok = self.next()
        if tok.kind != "id" or tok.text == "_":
            raise NetParseError(f"expected a name, found {tok.text!r}", self.line, tok.col)
        return tok

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def error(self, message: str, tok: Optional[_Tok] = None) -> NetParseError:
        col = tok.col if tok else (self.peek().col if self.peek() else len(self.raw) + 1)
        return NetParseError(message, self.line, col)


def _linear(cur: _Cursor, atom):
    """Sum of ``[q *] atom`` and constant terms; returns (coeffs, constant)."""
    coeffs: dict = {}
    const = Fraction(0)
    sign = 1
    first = True
    while True:
        tok = cur.peek()
        if tok is None:
            if first:
                raise cur.error("expected an expression")
            break
        if tok.text in "+-" and tok.kind == "op":
            cur.next()
            sign = 1 if tok.text == "+" else -1
            tok = cur.peek()
            if tok is None:
                raise cur.error("dangling sign")
        elif not first:
            break
        if tok.kind == "num":
            cur.next()
            q = Fraction(tok.text)
            if cur.accept("*"):
                key = atom(cur)
                coeffs[key] = coeffs.get(key, 0) + sign * q
            else:
                const += sign * q
        else:
            key = atom(cur)
            coeffs[key] = coeffs.get(key, 0) + sign
        sign = 1
        first = False
    return coeffs, const


def _time_atom_factory(inputs: dict):
    def atom(cur: _Cursor):
        tok = cur.ident()
        if tok.text == "now":
            return NOW
        if tok.text != "tok":
            raise cur.error(f"time expressions may only use tok(place,slot) and now, found {tok.text!r}", tok)
        cur.expect("(")
        ptok = cur.ident()
        cur.expect(",")
        stok = cur.next()
        if stok.kind != "num" or not stok.text.isdigit():
            raise cur.error("slot must be a positive integer", stok)
        cur.expect(")")
        slot = int(stok.text)
        if ptok.text not in inputs:
            raise NetSemanticError(f"tok({ptok.text},{slot}) refers to a place that is not an input", cur.line, ptok.col)
        if not 1 <= slot <= inputs[ptok.text]:
            raise NetSemanticError(
                f"tok({ptok.text},{slot}) exceeds the input multiplicity {inputs[ptok.text]}", cur.line, stok.col
            )
        return (ptok.text, slot)

    return atom


def _sym_atom(cur: _Cursor):
    tok = cur.ident()
    return tok.text


def _place_multiset(cur: _Cursor, places: dict, stop: str) -> list:
    out = []
    tok = cur.peek()
    if tok is None or tok.text == stop:
        return out
    while True:
        n = 1
        tok = cur.peek()
        if tok is not None and tok.kind == "num":
            cur.next()
            if not tok.text.isdigit() or int(tok.text) < 1:
                raise cur.error("multiplicity must be a positive integer", tok)
            n = int(tok.text)
            cur.expect("*")
        ptok = cur.ident()
        if ptok.text not in places:
            raise NetSemanticError(f"unknown place {ptok.text!r}", cur.line, ptok.col)
        out.extend([ptok.text] * n)
        if not cur.accept(","):
            break
    return out


def parse_net_text(text: str, source: str = "<string>"):
    """Parse a net description; returns ``(net, initial_state)``."""
    name = Path(source).stem
    places: dict = {}
    transitions: list = []
    t_names: set = set()
    marking: dict = {}
    saw_marking = False
    rows: list = []
    row_lines: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        cur = _Cursor(_lex(body, lineno), lineno, body)
        head = cur.ident()
        kw = head.text
        if kw == "net":
            name = cur.ident().text
        elif kw in ("places", "place"):
            cur.accept(":")
            while True:
                ptok = cur.ident()
                if ptok.text in places:
                    raise NetSemanticError(f"duplicate place {ptok.text!r}", lineno, ptok.col)
                places[ptok.text] = len(places)
                if not cur.accept(","):
                    break
        elif kw == "transition":
            ttok = cur.ident()
            if ttok.text in t_names:
                raise NetSemanticError(f"duplicate transition {ttok.text!r}", lineno, ttok.col)
            t_names.add(ttok.text)
            cur.expect(":")
            ins = _place_multiset(cur, places, "->")
            cur.expect("->")
            outs = _place_multiset(cur, places, ";")
            counts: dict = {}
            for p in ins:
                counts[p] = counts.get(p, 0) + 1
            lower = upper = None
            strong = False
            atom = _time_atom_factory(counts)
            while cur.accept(";"):
                tok = cur.ident()
                if tok.text in ("min", "max"):
                    cur.expect(":")
                    coeffs, const = _linear(cur, atom)
                    expr = TimeExpr.of(coeffs, const)
                    if tok.text == "min":
                        lower = expr
                    else:
                        upper = expr
                elif tok.text in ("weak", "strong"):
                    strong = tok.text == "strong"
                else:
                    raise cur.error(f"unknown transition attribute {tok.text!r}", tok)
            if not cur.at_end():
                raise cur.error(f"unexpected {cur.peek().text!r}")
            if lower is None or upper is None:
                raise NetSemanticError(f"transition {ttok.text!r} needs both min: and max:", lineno, ttok.col)
            transitions.append(Transition(ttok.text, tuple(ins), tuple(outs), lower, upper, strong))
        elif kw == "marking":
            saw_marking = True
            cur.accept(":")
            while not cur.at_end():
                ptok = cur.ident()
                if ptok.text not in places:
                    raise NetSemanticError(f"unknown place {ptok.text!r}", lineno, ptok.col)
                cur.expect("=")
                cur.expect("{")
                toks = marking.setdefault(ptok.text, [])
                if not cur.accept("}"):
                    while True:
                        tok = cur.next()
                        if tok.kind != "id" or tok.text in ("now", "tok"):
                            raise cur.error(f"bad token {tok.text!r}", tok)
                        toks.append(ANON if tok.text == "_" else tok.text)
                        if cur.accept("}"):
                            break
                        cur.expect(",")
                if not cur.accept(","):
                    break
            if not cur.at_end():
                raise cur.error(f"unexpected {cur.peek().text!r}")
        elif kw == "constraint":
            cur.accept(":")
            lhs, lc = _linear(cur, _sym_atom)
            op = cur.next()
            if op.text not in ("<=", ">=", "="):
                raise cur.error(f"expected <=, >= or =, found {op.text!r}", op)
            rhs, rc = _linear(cur, _sym_atom)
            if not cur.at_end():
                raise cur.error(f"unexpected {cur.peek().text!r}")
            diff = dict(lhs)
            for k, v in rhs.items():
                diff[k] = diff.get(k, 0) - v
            bound = rc - lc
            syms = [k for k, v in diff.items() if v]
            if op.text in ("<=", "="):
                rows.append(LinearIneq.make(diff, bound))
                row_lines.append((lineno, syms))
            if op.text in (">=", "="):
                rows.append(LinearIneq.make({k: -v for k, v in diff.items()}, -bound))
                row_lines.append((lineno, syms))
        else:
            raise NetParseError(f"unknown statement {kw!r}", lineno, head.col)
    if not places:
        raise NetSemanticError("no places declared")
    if not saw_marking:
        raise NetSemanticError("missing initial marking")
    named = {t for toks in marking.values() for t in toks if t != ANON}
    for (lineno, syms) in row_lines:
        for s in syms:
            if s != "now" and s not in named:
                raise NetSemanticError(f"constraint uses symbol {s!r} that is not in the initial marking", lineno)
    order = list(places)
    net = make_net(name, order, transitions)
    auto = [LinearIneq.diff(x, "now", 0) for x in sorted(named)]
    cs = ConstraintSet.of(rows + auto)
    if not is_satisfiable(cs):
        raise NetSemanticError("initial constraints are unsatisfiable")
    raw_state = SymbolicState(make_marking([marking.get(p, []) for p in order]), cs, "now")
    return net, normalize(raw_state, net)


def parse_net(path) -> tuple:
    path = Path(path)
    return parse_net_text(path.read_text(encoding="utf-8"), str(path))
