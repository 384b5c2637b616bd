"""Byte-level helpers for canonical encodings (varints, strings, rationals)."""

from __future__ import annotations

from fractions import Fraction


class DecodeError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"decode error at offset {offset}: {message}")
        self.offset = offset


def put_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varint must be non-negative")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def put_sint(out: bytearray, value: int) -> None:
    put_varint(out, (value << 1) if value >= 0 else ((-value << 1) - 1))


def put_str(out: bytearray, text: str) -> None:
    data = text.encode("utf-8")
    put_varint(out, len(data))
    out += data


def put_bytes(out: bytearray, data: bytes) -> None:
    put_varint(out, len(data))
    out += data


def put_rational(out: bytearray, q: Fraction) -> None:
    put_sint(out, q.numerator)
    put_varint(out, q.denominator)


class Reader:
    def __init__(self, data: bytes, offset: int = 0, end: int | None = None):
        self.data = data
        self.pos = offset
        self.end = len(data) if end is None else end

    def _need(self, n: int) -> None:
        if self.pos + n > self.end:
            raise DecodeError(self.pos, f"truncated: need {n} byte(s), have {self.end - self.pos}")

    def byte(self) -> int:
        self._need(1)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def varint(self) -> int:
        shift = 0
        value = 0
        start = self.pos
        while True:
            if self.pos >= self.end:
                raise DecodeError(start, "truncated varint")
            b = self.data[self.pos]
            self.pos += 1
            value |= (b & 0x7F) << shift
            if not b & 0x80:
                return value
            shift += 7
            if shift > 640:
                raise DecodeError(start, "varint too long")

    def sint(self) -> int:
        v = self.varint()
        return (v >> 1) if not v & 1 else -((v + 1) >> 1)

    def raw(self, n: int) -> bytes:
        self._need(n)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return bytes(chunk)

    def bytes_(self) -> bytes:
        return self.raw(self.varint())

    def str_(self) -> str:
        start = self.pos
        raw = self.bytes_()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(start, f"bad utf-8: {exc}") from None

    def rational(self) -> Fraction:
        start = self.pos
        num = self.sint()
        den = self.varint()
        if den == 0:
            raise DecodeError(start, "zero denominator")
        return Fraction(num, den)

    def done(self) -> bool:
        return self.pos >= self.end

    def expect_end(self) -> None:
        if self.pos != self.end:
            raise DecodeError(self.pos, f"{self.end - self.pos} trailing byte(s)")
