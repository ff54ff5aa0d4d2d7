"""p-duals, m-duals and the dual pipeline for simultaneous marginals.

The p-dual of ``phi`` over ``X`` is ``D(Y) = prod_{Z <= Y} phi(Z) ** (-1)**|Z|``
and the m-dual is the superset sum ``M(Y) = sum_{Z >= Y} phi(Z)``.  Products
of potentials become pointwise products of p-duals, and marginals can be read
straight off the m-dual, which is what makes the pipeline in
:func:`operation2_via_duals` cost ``O(|C| 2**|C|)`` regardless of how many
inputs meet at ``C``.

Dense transforms work on tables in the potential index order.  The sparse
steps work on :class:`InfoTree` values in slot order.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .counters import OpCounters, ensure
from .errors import DomainError
from .potential import MZCArray, Potential, as_scope, popcount_parity
from .search import (InfoTree, StraddleTree, build_union_tree, leaf_maps,
                     powerset_tree, slot_to_dense)

# ---------------------------------------------------------------------------
# oracles


def _subset_masks(k: int) -> np.ndarray:
    """``masks[y, z]`` is True iff index ``z`` is a subset of index ``y``."""
    t = np.arange(1 << k, dtype=np.int64)
    return (t[None, :] & ~t[:, None]) == 0


def p_dual_oracle(phi: Potential, mzc: bool = False):
    """Literal product over all subsets; ``O(4**k)``.

    With ``mzc=True`` the result is an :class:`MZCArray` and zeros are allowed.
    """
    k = len(phi.scope)
    sign = popcount_parity(k)
    sub = _subset_masks(k)
    if mzc:
        m = MZCArray.from_real(phi.table)
        powered = np.where(sign > 0, m.mag, 1.0 / m.mag)
        mag = np.array([np.prod(powered[row]) for row in sub])
        zc = np.where(sub, (m.zc * sign)[None, :], 0).sum(axis=1)
        return MZCArray(mag, zc)
    if not phi.is_positive():
        raise DomainError("p-dual of a potential with zero entries needs MZC mode")
    powered = np.where(sign > 0, phi.table, 1.0 / phi.table)
    return Potential(phi.scope, np.array([np.prod(powered[row]) for row in sub]))


def m_dual_oracle(phi: Potential) -> Potential:
    k = len(phi.scope)
    sup = _subset_masks(k).T  # sup[y, z]: y is a subset of z
    return Potential(phi.scope, (sup * phi.table[None, :]).sum(axis=1))


# ---------------------------------------------------------------------------
# dense transforms


def transform1_values(values, k: int, counters: OpCounters | None = None):
    """p-dual of a dense table (ndarray or MZCArray) over a scope of size ``k``.

    Unrolls the recursion that splits on the smallest variable: the halves are
    transformed first, so bits are combined from the highest down.
    """
    c = ensure(counters)
    out = values.copy()
    c.alloc(len(out))
    for bit in reversed(range(k)):
        shape = (1 << (k - 1 - bit), 2, 1 << bit)
        v = _reshape(out, shape)
        # D(Y + x) = D_minus(Y) / D_plus(Y)
        _assign(v, (slice(None), 1), _get(v, (slice(None), 0)) / _get(v, (slice(None), 1)))
        c.div(1 << (k - 1))
    c.free(len(out))
    return out


def transform3_values(values: np.ndarray, k: int, counters: OpCounters | None = None) -> np.ndarray:
    """Inverse of the m-dual on a dense real table."""
    c = ensure(counters)
    out = np.array(values, dtype=np.float64, copy=True)
    c.alloc(out.size)
    for bit in range(k):
        v = out.reshape((1 << (k - 1 - bit), 2, 1 << bit))
        # minus(Y) = M(Y) - M(Y + x); plus(Y) = M(Y + x)
        v[:, 0] -= v[:, 1]
        c.add(1 << (k - 1))
    c.free(out.size)
    return out


def m_dual_values(values: np.ndarray, k: int, counters: OpCounters | None = None) -> np.ndarray:
    """Dense superset-sum transform."""
    c = ensure(counters)
    out = np.array(values, dtype=np.float64, copy=True)
    for bit in range(k):
        v = out.reshape((1 << (k - 1 - bit), 2, 1 << bit))
        v[:, 0] += v[:, 1]
        c.add(1 << (k - 1))
    return out


def transform1(phi: Potential, counters: OpCounters | None = None, mzc: bool = False):
    """p-dual of ``phi``; an :class:`MZCArray` table when ``mzc`` is set."""
    if mzc:
        return transform1_values(MZCArray.from_real(phi.table), len(phi.scope), counters)
    if not phi.is_positive():
        raise DomainError("p-dual of a potential with zero entries needs MZC mode")
    return Potential(phi.scope, transform1_values(phi.table, len(phi.scope), counters))


def transform3(md: Potential, counters: OpCounters | None = None) -> Potential:
    """Potential recovered from its m-dual; rounding residue below zero is clipped."""
    return Potential(md.scope, np.maximum(transform3_values(md.table, len(md.scope), counters), 0.0))


# ---------------------------------------------------------------------------
# generic helpers for ndarray / MZCArray values


def _reshape(a, shape):
    if isinstance(a, MZCArray):
        return MZCArray(a.mag.reshape(shape), a.zc.reshape(shape))
    return a.reshape(shape)


def _get(a, key):
    return a[key]


def _assign(a, key, value):
    a[key] = value


def _stack(a, b):
    if isinstance(a, MZCArray):
        return MZCArray(np.vstack([a.mag, b.mag]), np.vstack([a.zc, b.zc]))
    return np.vstack([a, b])


def _concat_cols(a, b):
    if isinstance(a, MZCArray):
        return MZCArray(np.hstack([a.mag, b.mag]), np.hstack([a.zc, b.zc]))
    return np.hstack([a, b])


def _ones(n: int, mzc: bool):
    return MZCArray.ones(n) if mzc else np.ones(n)


# ---------------------------------------------------------------------------
# trees and info-trees


@lru_cache(maxsize=128)
def cached_powerset_tree(scope: tuple[int, ...]) -> StraddleTree:
    return powerset_tree(scope)


@lru_cache(maxsize=128)
def _slot_dense(scope: tuple[int, ...]) -> np.ndarray:
    out = slot_to_dense(scope)
    out.setflags(write=False)
    return out


def dense_to_info(values, scope: Sequence[int]) -> InfoTree:
    """Dense table over ``P(scope)`` to an info-tree over the power-set tree."""
    scope = tuple(scope)
    return InfoTree(cached_powerset_tree(scope), values[_slot_dense(scope)])


def info_to_dense(info: InfoTree, scope: Sequence[int]):
    scope = tuple(scope)
    perm = _slot_dense(scope)
    vals = info.values
    out = vals.copy()
    out[perm] = vals
    return out


def product_of_duals(duals: list[InfoTree], counters: OpCounters | None = None) -> InfoTree:
    """Sparse p-dual of the product: on ``Z`` the product of those inputs'
    values whose straddle-set contains ``Z``."""
    if not duals:
        raise DomainError("product of duals needs at least one input")
    c = ensure(counters)
    union = build_union_tree([d.tree for d in duals])
    maps = leaf_maps(union, [d.tree for d in duals])
    mzc = isinstance(duals[0].values, MZCArray)
    values = _ones(union.n_leaves, mzc)
    c.alloc(union.n_leaves)
    for d, m in zip(duals, maps):
        if np.any(m < 0):
            raise DomainError("union tree misses a leaf of an input")
        values[m] = values[m] * d.values
        c.mul(len(m))
    c.write(union.n_leaves)
    return InfoTree(union, values)


def _lchild_chain(tree: StraddleTree):
    """Internal vertices on the left spine with their (left, right) slot maps."""
    chain = []
    v = 0
    while not tree.is_leaf(v):
        lo, mid = tree.leaf_range(tree.left[v])
        m = leaf_maps((tree, tree.left[v]), [(tree, tree.right[v])])[0]
        if np.any(m < 0):
            raise DomainError("straddle-set is not downward closed")
        chain.append((mid - lo, m))
        v = tree.left[v]
    return chain


def transform2(sp: InfoTree, counters: OpCounters | None = None,
               batch_limit: int | None = None) -> InfoTree:
    """m-dual over the straddle-set of ``sp`` from the p-dual stored on it.

    Splits on the root label: the minus p-dual is the left half as it stands,
    the plus p-dual is ``D(Y) / D(Y + x)`` (or ``D(Y)`` when ``Y + x`` is not
    stored).  Both halves live on the left subtree, so every level reuses one
    slot map.  Rows at the same level are batched while the batch stays within
    ``batch_limit`` entries (default ``|zeta|``).
    """
    c = ensure(counters)
    chain = _lchild_chain(sp.tree)
    n = sp.tree.n_leaves
    limit = n if batch_limit is None else batch_limit

    # every array returned by rec is counted as live until its caller frees it
    def rec(vals, j):
        if j == len(chain):
            c.alloc(vals.size)
            return vals
        nl, m = chain[j]
        rows = vals.shape[0]
        left = vals[:, :nl]
        right = vals[:, nl:]
        plus = left.copy()
        c.alloc(rows * nl)
        plus[:, m] = left[:, m] / right
        c.div(rows * len(m))
        if 2 * rows * nl <= limit:
            both = _stack(left, plus)
            c.alloc(2 * rows * nl)
            c.free(rows * nl)
            del plus
            res = rec(both, j + 1)
            c.free(2 * rows * nl)
            del both
            mm, mp = res[:rows], res[rows:]
            held = res.size
        else:
            mm = rec(left, j + 1)
            mp = rec(plus, j + 1)
            c.free(rows * nl)
            del plus
            held = mm.size + mp.size
        out = _concat_cols(mm + mp, mp[:, m])
        c.alloc(out.size)
        c.free(held)
        c.add(rows * nl)
        c.write(out.size)
        return out

    vals = sp.values
    if isinstance(vals, MZCArray):
        vals2 = MZCArray(vals.mag.reshape(1, -1), vals.zc.reshape(1, -1))
    else:
        vals2 = np.asarray(vals).reshape(1, -1)
    out = rec(vals2, 0)
    c.free(out.size)
    flat = MZCArray(out.mag.reshape(-1), out.zc.reshape(-1)) if isinstance(out, MZCArray) \
        else out.reshape(-1)
    return InfoTree(sp.tree, flat)


def marginalise_mduals(sp: InfoTree, targets: Sequence[Sequence[int]],
                       counters: OpCounters | None = None) -> list[Potential]:
    """m-duals of the marginals on each target, copied from ``sp``.

    Every target's power-set must lie inside the stored straddle-set.
    """
    c = ensure(counters)
    targets = [as_scope(t) for t in targets]
    trees = [cached_powerset_tree(t) for t in targets]
    maps = leaf_maps(sp.tree, trees)
    out = []
    vals = sp.values.to_real() if isinstance(sp.values, MZCArray) else sp.values
    for t, m in zip(targets, maps):
        if np.any(m < 0):
            raise DomainError(f"target {t} is not covered by the stored straddle-set")
        dense = np.empty(len(m))
        dense[_slot_dense(t)] = vals[m]
        c.write(len(m))
        out.append(Potential(t, dense))
    return out


def operation2_via_duals(upsilons: Sequence[Potential], targets: Sequence[Sequence[int]] | None = None,
                         counters: OpCounters | None = None) -> list[Potential]:
    """Marginals of the product of ``upsilons`` on every target scope.

    Targets default to the inputs' own scopes.  When any input has a zero the
    first three steps run in MZC arithmetic; an extra exact pass over 0/1
    indicator inputs then pins the zero pattern of the result, since the
    final inclusion-exclusion step can leave rounding residue where the true
    marginal vanishes.
    """
    if not upsilons:
        raise DomainError("operation 2 needs at least one input")
    c = ensure(counters)
    targets = [as_scope(t) for t in (targets if targets is not None else [u.scope for u in upsilons])]
    mzc = not all(u.is_positive() for u in upsilons)
    result = _dual_pipeline([u.table for u in upsilons], [u.scope for u in upsilons],
                            targets, mzc, c)
    if mzc:
        support = _dual_pipeline([(u.table > 0).astype(np.float64) for u in upsilons],
                                 [u.scope for u in upsilons], targets, True, c)
        result = [np.where(s < 0.5, 0.0, r) for r, s in zip(result, support)]
    return [Potential(t, np.maximum(r, 0.0)) for t, r in zip(targets, result)]


def _dual_pipeline(tables, scopes, targets, mzc: bool, c: OpCounters) -> list[np.ndarray]:
    duals = []
    for table, scope in zip(tables, scopes):
        vals = MZCArray.from_real(table) if mzc else np.asarray(table, dtype=np.float64)
        d = transform1_values(vals, len(scope), c)
        duals.append(dense_to_info(d, scope))
    prod = product_of_duals(duals, c)
    del duals
    md = transform2(prod, c)
    c.alloc(md.tree.n_leaves)
    if mzc:
        md = InfoTree(md.tree, md.values.to_real())
    mds = marginalise_mduals(md, targets, c)
    c.free(md.tree.n_leaves)
    return [transform3_values(m.table, len(m.scope), c) for m in mds]
