"""Text formats for factor networks (BFN) and junction trees (JT).

BFN::

    BFN 1
    VARS n
    FACTORS m
    F k v1 ... vk
    <2**k values; bit j-1 of the index says whether v_j is 1>

JT::

    JT c
    V k w1 ... wk        (c lines)
    E a b                (c-1 lines, 1-based)
    A f v                (optional: factor f lives at vertex v)

``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, FormatError
from .junction import Factorisation, JunctionTree
from .potential import Potential


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        for tok in line.split("#", 1)[0].split():
            yield tok, lineno


class _Reader:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.pos = 0

    @property
    def line(self):
        if self.pos < len(self.toks):
            return self.toks[self.pos][1]
        return self.toks[-1][1] if self.toks else 1

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def next(self, what: str) -> str:
        if self.pos >= len(self.toks):
            raise FormatError(f"unexpected end of input, expected {what}", self.line)
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def keyword(self, kw: str):
        line = self.line
        tok = self.next(kw)
        if tok != kw:
            raise FormatError(f"expected {kw!r}, got {tok!r}", line)

    def integer(self, what: str, lo: int | None = None, hi: int | None = None) -> int:
        line = self.line
        tok = self.next(what)
        try:
            val = int(tok)
        except ValueError:
            raise FormatError(f"expected an integer {what}, got {tok!r}", line) from None
        if (lo is not None and val < lo) or (hi is not None and val > hi):
            rng = f"{lo}..{hi}" if hi is not None else f">= {lo}"
            raise FormatError(f"{what} {val} out of range {rng}", line)
        return val

    def value(self, what: str) -> float:
        line = self.line
        tok = self.next(what)
        try:
            val = float(tok)
        except ValueError:
            raise FormatError(f"expected a number for {what}, got {tok!r}", line) from None
        if not math.isfinite(val) or val < 0:
            raise FormatError(f"{what} must be finite and non-negative, got {tok}", line)
        return val

    def done(self):
        if self.pos < len(self.toks):
            raise FormatError(f"unexpected trailing token {self.peek()!r}", self.line)


def _canonical(vars_: list[int], values: np.ndarray) -> Potential:
    """Reorder a table listed in file order into ascending-scope order."""
    k = len(vars_)
    order = sorted(range(k), key=lambda j: vars_[j])
    scope = tuple(vars_[j] for j in order)
    if order == list(range(k)):
        return Potential(scope, values)
    t = np.arange(1 << k)
    src = np.zeros_like(t)
    for new_bit, old_bit in enumerate(order):
        src |= ((t >> new_bit) & 1) << old_bit
    return Potential(scope, values[src])


def parse_model(text: str) -> Factorisation:
    r = _Reader(text)
    r.keyword("BFN")
    line = r.line
    if r.integer("format version") != 1:
        raise FormatError("unsupported BFN version", line)
    r.keyword("VARS")
    n = r.integer("variable count", 1, 24 * 1024)
    r.keyword("FACTORS")
    m = r.integer("factor count", 0)
    factors = []
    for i in range(m):
        line = r.line
        r.keyword("F")
        k = r.integer("factor arity", 0, 30)
        vars_ = [r.integer("variable", 1, n) for _ in range(k)]
        if len(set(vars_)) != k:
            raise FormatError(f"factor {i + 1} repeats a variable", line)
        need = 1 << k
        vals = []
        while len(vals) < need:
            if r.peek() is None or r.peek() == "F":
                raise FormatError(f"factor {i + 1}: expected {need} values, got {len(vals)}", r.line)
            vals.append(r.value(f"factor {i + 1} entry"))
        factors.append(_canonical(vars_, np.array(vals)))
    r.done()
    try:
        return Factorisation(n, tuple(factors))
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_model(f: Factorisation, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines += ["BFN 1", f"VARS {f.n}", f"FACTORS {len(f.factors)}"]
    for phi in f.factors:
        lines.append(" ".join(["F", str(len(phi.scope))] + [str(v) for v in phi.scope]))
        vals = [_fmt(x) for x in phi.table]
        for s in range(0, len(vals), 8):
            lines.append(" ".join(vals[s:s + 8]))
    return "\n".join(lines) + "\n"


def parse_jt(text: str) -> JunctionTree:
    r = _Reader(text)
    r.keyword("JT")
    c = r.integer("vertex count", 1)
    vertices = []
    for _ in range(c):
        line = r.line
        r.keyword("V")
        k = r.integer("vertex size", 0)
        ws = [r.integer("variable", 1) for _ in range(k)]
        if len(set(ws)) != k:
            raise FormatError("vertex repeats a variable", line)
        vertices.append(tuple(sorted(ws)))
    edges = []
    for _ in range(c - 1):
        r.keyword("E")
        a = r.integer("edge endpoint", 1, c)
        b = r.integer("edge endpoint", 1, c)
        edges.append((a - 1, b - 1))
    assignment = None
    while r.peek() == "A":
        line = r.line
        r.next("A")
        fi = r.integer("factor index", 1)
        v = r.integer("vertex index", 1, c)
        assignment = assignment or {}
        if fi - 1 in assignment:
            raise FormatError(f"factor {fi} assigned twice", line)
        assignment[fi - 1] = v - 1
    r.done()
    return JunctionTree(tuple(vertices), tuple(edges), assignment)


def write_jt(jt: JunctionTree, with_assignment: bool = True) -> str:
    lines = [f"JT {len(jt.vertices)}"]
    for vertex in jt.vertices:
        lines.append(" ".join(["V", str(len(vertex))] + [str(x) for x in vertex]))
    for a, b in jt.edges:
        lines.append(f"E {a + 1} {b + 1}")
    if with_assignment and jt.assignment:
        for fi, v in sorted(jt.assignment.items()):
            lines.append(f"A {fi + 1} {v + 1}")
    return "\n".join(lines) + "\n"


def format_marginals(probabilities: dict[int, tuple[float, float]]) -> str:
    """One ``x p0 p1`` line per variable, 12 significant digits."""
    return "".join(f"{x} {p0:.12g} {p1:.12g}\n" for x, (p0, p1) in sorted(probabilities.items()))


def read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()
