"""Potentials over power-sets of boolean variables, and MZC numbers.

A potential on a scope ``X = (x_1 < x_2 < ... < x_k)`` is stored as a flat
table of ``2**k`` non-negative floats.  Entry ``t`` holds the value on the
subset ``{x_j : bit (j-1) of t is set}``, so the smallest variable is the
least significant bit.

MZC ("multi-zero conscious") numbers are pairs ``(a, i)`` with ``a > 0`` and
an integer zero multiplicity ``i``.  They make products and quotients total in
the presence of zeros: a real zero becomes ``(1, 1)`` and anything with a
non-zero multiplicity reads back as ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InconsistentModelError, InternalConsistencyError

MAX_SCOPE = 63


def as_scope(variables: Iterable[int]) -> tuple[int, ...]:
    """Validate and return a scope as a strictly ascending tuple of ids."""
    scope = tuple(int(v) for v in variables)
    for a, b in zip(scope, scope[1:]):
        if a >= b:
            raise DomainError(f"scope must be strictly ascending, got {scope}")
    if scope and scope[0] < 1:
        raise DomainError(f"variable ids start at 1, got {scope[0]}")
    if len(scope) > MAX_SCOPE:
        raise DomainError(f"scope of size {len(scope)} exceeds {MAX_SCOPE}")
    return scope


def subset_to_index(scope: Sequence[int], subset: Iterable[int]) -> int:
    pos = {v: j for j, v in enumerate(scope)}
    t = 0
    for v in subset:
        if v not in pos:
            raise DomainError(f"variable {v} not in scope {tuple(scope)}")
        t |= 1 << pos[v]
    return t


def index_to_subset(scope: Sequence[int], t: int) -> frozenset[int]:
    return frozenset(v for j, v in enumerate(scope) if (t >> j) & 1)


@lru_cache(maxsize=256)
def project_indices(scope: tuple[int, ...], sub: tuple[int, ...]) -> np.ndarray:
    """For every index ``t`` of ``scope``, the index of ``Z(t) & sub`` in ``sub``."""
    pos = {v: j for j, v in enumerate(scope)}
    t = np.arange(1 << len(scope), dtype=np.int64)
    out = np.zeros_like(t)
    for j, v in enumerate(sub):
        if v not in pos:
            raise DomainError(f"{sub} is not a subset of {scope}")
        out |= ((t >> pos[v]) & 1) << j
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def popcount_parity(k: int) -> np.ndarray:
    """``(-1)**|Z|`` for every index of a scope of size ``k``."""
    t = np.arange(1 << k, dtype=np.int64)
    bits = np.zeros_like(t)
    for j in range(k):
        bits += (t >> j) & 1
    out = np.where(bits % 2 == 0, 1, -1).astype(np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Potential:
    """Immutable table over the power-set of ``scope``."""

    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        scope = as_scope(self.scope)
        table = np.array(self.table, dtype=np.float64).reshape(-1)
        if table.size != 1 << len(scope):
            raise DomainError(
                f"table of length {table.size} does not match scope of size {len(scope)}")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise DomainError("potential entries must be finite and non-negative")
        table.setflags(write=False)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "table", table)

    def __len__(self):
        return self.table.size

    def __repr__(self):
        return f"Potential(scope={self.scope}, table={self.table.tolist()})"

    def value(self, subset: Iterable[int]) -> float:
        return float(self.table[subset_to_index(self.scope, subset)])

    def allclose(self, other: "Potential", rtol: float = 1e-9, atol: float = 0.0) -> bool:
        return self.scope == other.scope and np.allclose(
            self.table, other.table, rtol=rtol, atol=atol)

    def is_positive(self) -> bool:
        return bool(np.all(self.table > 0))


def unit_potential(scope: Iterable[int]) -> Potential:
    scope = as_scope(scope)
    return Potential(scope, np.ones(1 << len(scope)))


def marginalize(phi: Potential, target: Iterable[int]) -> Potential:
    """Sum ``phi`` over every variable outside ``target``."""
    target = as_scope(target)
    missing = set(target) - set(phi.scope)
    if missing:
        raise DomainError(f"target {target} is not a subset of {phi.scope}")
    k = len(phi.scope)
    if len(target) == k:
        return phi
    # axis i of the (2,)*k view holds scope variable k-1-i
    drop = tuple(k - 1 - j for j, v in enumerate(phi.scope) if v not in target)
    table = phi.table.reshape((2,) * k).sum(axis=drop) if k else phi.table
    return Potential(target, np.asarray(table).reshape(-1))


def multiply(phi: Potential, psi: Potential) -> Potential:
    scope = tuple(sorted(set(phi.scope) | set(psi.scope)))
    a = phi.table[project_indices(scope, phi.scope)]
    b = psi.table[project_indices(scope, psi.scope)]
    return Potential(scope, a * b)


def safe_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Entrywise quotient with ``x/0 := 0`` (the Hugin convention)."""
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def divide(phi: Potential, psi: Potential) -> Potential:
    if phi.scope != psi.scope:
        raise DomainError(f"cannot divide potentials over {phi.scope} and {psi.scope}")
    return Potential(phi.scope, safe_divide(phi.table, psi.table))


def normalize_marginal(r: Potential) -> tuple[float, float]:
    if len(r.scope) != 1:
        raise DomainError(f"expected a singleton scope, got {r.scope}")
    total = float(r.table[0] + r.table[1])
    if not total > 0:
        raise InconsistentModelError(
            f"variable {r.scope[0]} has zero total mass; the model is inconsistent")
    return float(r.table[0]) / total, float(r.table[1]) / total


# ---------------------------------------------------------------------------
# MZC numbers


@dataclass(frozen=True)
class MZC:
    a: float
    i: int = 0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"MZC magnitude must be positive, got {self.a}")

    def __mul__(self, other: "MZC") -> "MZC":
        return _mzc_checked(self.a * other.a, self.i + other.i)

    def __truediv__(self, other: "MZC") -> "MZC":
        # same as multiplying by (1/b, -j), without rounding 1/b first
        return _mzc_checked(self.a / other.a, self.i - other.i)

    def __add__(self, other: "MZC") -> "MZC":
        if self.i < other.i:
            return self
        if self.i > other.i:
            return other
        return MZC(self.a + other.a, self.i)

    def __iter__(self):
        yield self.a
        yield self.i


def _mzc_checked(a: float, i: int) -> MZC:
    # a magnitude that underflows to 0 reads out as the float product would: zero
    return MZC(1.0, i + 1) if a == 0 else MZC(a, i)


def mzc_from_real(x: float) -> MZC:
    if x < 0:
        raise DomainError(f"cannot convert negative {x} to an MZC number")
    return MZC(1.0, 1) if x == 0 else MZC(float(x), 0)


def mzc_to_real(m: MZC) -> float:
    if m.i < 0:
        raise InternalConsistencyError(f"negative zero-count at read-out: {m}")
    return 0.0 if m.i != 0 else m.a


def mzc_mul(x: MZC, y: MZC) -> MZC:
    return x * y


def mzc_div(x: MZC, y: MZC) -> MZC:
    return x / y


def mzc_add(x: MZC, y: MZC) -> MZC:
    return x + y


def _mzc_array_checked(mag: np.ndarray, zc: np.ndarray) -> "MZCArray":
    under = mag == 0
    if np.any(under):
        mag = np.where(under, 1.0, mag)
        zc = zc + under
    return MZCArray(mag, zc)


class MZCArray:
    """Vectorised MZC numbers: a magnitude array and a zero-count array."""

    __slots__ = ("mag", "zc")

    def __init__(self, mag, zc):
        self.mag = np.asarray(mag, dtype=np.float64)
        self.zc = np.asarray(zc, dtype=np.int64)

    @classmethod
    def from_real(cls, x) -> "MZCArray":
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0):
            raise DomainError("cannot convert negative values to MZC numbers")
        zero = x == 0
        return cls(np.where(zero, 1.0, x), zero.astype(np.int64))

    @classmethod
    def ones(cls, shape) -> "MZCArray":
        return cls(np.ones(shape), np.zeros(shape, dtype=np.int64))

    def to_real(self) -> np.ndarray:
        if np.any(self.zc < 0):
            raise InternalConsistencyError("negative zero-count at read-out")
        return np.where(self.zc == 0, self.mag, 0.0)

    @property
    def shape(self):
        return self.mag.shape

    @property
    def size(self):
        return self.mag.size

    def __len__(self):
        return len(self.mag)

    def __getitem__(self, key) -> "MZCArray":
        return MZCArray(self.mag[key], self.zc[key])

    def __setitem__(self, key, value: "MZCArray"):
        self.mag[key] = value.mag
        self.zc[key] = value.zc

    def copy(self) -> "MZCArray":
        return MZCArray(self.mag.copy(), self.zc.copy())

    def __mul__(self, other: "MZCArray") -> "MZCArray":
        return _mzc_array_checked(self.mag * other.mag, self.zc + other.zc)

    def __truediv__(self, other: "MZCArray") -> "MZCArray":
        return _mzc_array_checked(self.mag / other.mag, self.zc - other.zc)

    def __add__(self, other: "MZCArray") -> "MZCArray":
        lo = np.minimum(self.zc, other.zc)
        mag = (np.where(self.zc == lo, self.mag, 0.0)
               + np.where(other.zc == lo, other.mag, 0.0))
        return MZCArray(mag, lo)

    def scalar(self, idx) -> MZC:
        return MZC(float(self.mag[idx]), int(self.zc[idx]))

    def __repr__(self):
        return f"MZCArray(mag={self.mag.tolist()}, zc={self.zc.tolist()})"
