"""Eventually periodic words over {+1, -1}.

Text syntax: head symbols followed by an optional periodic block written
``(...)*``, e.g. ``"+-+(-+)*"``. Only ASCII ``+`` and ``-`` are accepted. A
string without a block, such as ``"+-"``, denotes the purely periodic word
whose period is the whole string.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import WordSyntaxError

_WORD_RE = re.compile(r"^([+-]*)(?:\(([+-]+)\)\*)?$")


def _as_symbols(seq: Iterable) -> tuple:
    out = []
    for s in seq:
        if s in (1, "+"):
            out.append(1)
        elif s in (-1, "-"):
            out.append(-1)
        else:
            raise WordSyntaxError(f"symbol {s!r} is not +1 or -1")
    return tuple(out)


def _primitive(block: tuple) -> tuple:
    n = len(block)
    for p in range(1, n + 1):
        if n % p == 0 and block[:p] * (n // p) == block:
            return block[:p]
    return block


@dataclass(frozen=True)
class SymbolWord:
    head: tuple
    tail: tuple

    def __init__(self, head: Sequence = (), tail: Sequence = (-1,)):
        head = _as_symbols(head)
        tail = _as_symbols(tail)
        if not tail:
            raise WordSyntaxError("periodic tail block must be nonempty")
        tail = _primitive(tail)
        # fold a head suffix that repeats the tail into the tail
        while head and head[-1] == tail[-1]:
            head = head[:-1]
            tail = (tail[-1],) + tail[:-1]
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def parse(cls, text: str) -> "SymbolWord":
        m = _WORD_RE.match(text.strip())
        if m is None or (not m.group(1) and not m.group(2)):
            raise WordSyntaxError(f"malformed word string {text!r}")
        head, block = m.group(1), m.group(2)
        if block is None:
            return cls((), head)
        return cls(head, block)

    @classmethod
    def constant(cls, s: int) -> "SymbolWord":
        return cls((), (s,))

    @classmethod
    def periodic(cls, block: Sequence) -> "SymbolWord":
        return cls((), block)

    @classmethod
    def random(cls, rng: np.random.Generator, length: int, tail: Sequence = (-1,)) -> "SymbolWord":
        head = tuple(int(s) for s in rng.choice([1, -1], size=length))
        return cls(head, tail)

    def __str__(self) -> str:
        sym = lambda t: "".join("+" if s > 0 else "-" for s in t)
        return f"{sym(self.head)}({sym(self.tail)})*"

    def __getitem__(self, n: int) -> int:
        if n < 0:
            raise IndexError("negative index")
        h = len(self.head)
        if n < h:
            return self.head[n]
        return self.tail[(n - h) % len(self.tail)]

    def prefix(self, n: int) -> tuple:
        return tuple(self[k] for k in range(n))

    def shift(self, k: int = 1) -> "SymbolWord":
        """The shifted word sigma^k(omega)."""
        h = len(self.head)
        if k <= h:
            return SymbolWord(self.head[k:], self.tail)
        r = (k - h) % len(self.tail)
        return SymbolWord((), self.tail[r:] + self.tail[:r])

    def cons(self, s: int) -> "SymbolWord":
        return SymbolWord((s,) + self.head, self.tail)

    @property
    def preperiod(self) -> int:
        return len(self.head)

    @property
    def period(self) -> int:
        return len(self.tail)
