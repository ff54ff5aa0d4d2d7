"""Marginals of a product of potentials that all live inside one vertex ``clique``.

``operation1_stream`` computes a single marginal by streaming over ``P(clique)``.
``operation2_simultaneous`` computes the marginal on every input's scope in
one pass, either by the leaf-step scans of ARCH-1 or the dual pipeline of
ARCH-2.

The ARCH-1 scans come in two kernels.  ``kernel="search"`` drives a literal
full-search over the inputs' info-trees and zeroed accumulator trees with a
Python visitor.  ``kernel="vector"`` (the default) replays the same leaf-step
sequence in fixed-size chunks with numpy; it performs the same arithmetic in
the same order per accumulator and reports the same operation counts.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .counters import OpCounters, ensure
from .duals import cached_powerset_tree, dense_to_info, info_to_dense, operation2_via_duals
from .errors import DomainError, InternalConsistencyError
from .potential import MZC, MZCArray, Potential, as_scope
from .search import InfoTree, full_search

CHUNK_BITS = 12

METHODS = ("arch1-simple", "arch1-cached", "arch2")


def _check_inputs(clique, inputs):
    clique = as_scope(clique)
    cset = set(clique)
    for u in inputs:
        if not set(u.scope) <= cset:
            raise DomainError(f"input scope {u.scope} is not inside {clique}")
    return clique


def _bit_pairs(clique: tuple[int, ...], sub: Sequence[int], slot_order: bool) -> list[tuple[int, int]]:
    """(source bit in a ``P(clique)`` index, destination bit in a ``P(sub)`` index)."""
    k = len(clique)
    pos = {v: j for j, v in enumerate(clique)}
    return [((k - 1 - pos[v]) if slot_order else pos[v], j) for j, v in enumerate(sub)]


def _project(idx: np.ndarray, pairs) -> np.ndarray:
    out = np.zeros_like(idx)
    for src, dst in pairs:
        out |= ((idx >> src) & 1) << dst
    return out


class _Stream:
    """Chunked enumeration of ``P(clique)`` with cheap per-input projections.

    Projection is bitwise, so the index of a chunk member is the OR of a
    per-chunk high part and a shared low-part table.
    """

    def __init__(self, clique, scopes, slot_order: bool):
        k = len(clique)
        self.k = k
        self.h = min(k, CHUNK_BITS)
        self.n_chunks = 1 << (k - self.h)
        lo = np.arange(1 << self.h, dtype=np.int64)
        hi = np.arange(self.n_chunks, dtype=np.int64) << self.h
        self.lo = []
        self.hi = []
        for sub in scopes:
            pairs = _bit_pairs(clique, sub, slot_order)
            self.lo.append(_project(lo, pairs))
            self.hi.append(_project(hi, pairs))

    @property
    def chunk(self) -> int:
        return 1 << self.h

    def index(self, i: int, c: int) -> np.ndarray:
        return self.lo[i] | self.hi[i][c]


def operation1_stream(clique: Sequence[int], inputs: Sequence[Potential], target: Sequence[int],
                      counters: OpCounters | None = None) -> Potential:
    """target-marginal of the product of ``inputs`` by a streaming pass over ``P(clique)``.

    Auxiliary space is one chunk of products plus the accumulator ``h``.
    """
    c = ensure(counters)
    clique = _check_inputs(clique, inputs)
    target = as_scope(target)
    if not set(target) <= set(clique):
        raise DomainError(f"target {target} is not inside {clique}")
    stream = _Stream(clique, [u.scope for u in inputs] + [target], slot_order=False)
    nw = len(inputs)
    h = np.zeros(1 << len(target))
    c.alloc(h.size + stream.chunk)
    for ch in range(stream.n_chunks):
        prod = np.ones(stream.chunk)
        for i, u in enumerate(inputs):
            prod *= u.table[stream.index(i, ch)]
        c.mul(len(inputs) * stream.chunk)
        h += np.bincount(stream.index(nw, ch), weights=prod, minlength=h.size)
        c.add(stream.chunk)
    c.write(h.size)
    c.free(h.size + stream.chunk)
    return Potential(target, h)


def operation2_simultaneous(clique: Sequence[int], inputs: Sequence[Potential], method: str = "arch1-simple",
                            wanted: Sequence[int] | None = None,
                            targets: Sequence[Sequence[int]] | None = None,
                            counters: OpCounters | None = None,
                            kernel: str = "vector", check: bool = False) -> list[Potential | None]:
    """For each wanted input ``i``, the ``scope(inputs[i])``-marginal of the product.

    Unwanted positions of the result are ``None``.  ``targets`` is only
    meaningful for ``arch2`` and replaces the input scopes as marginal scopes.
    ``check`` makes the cached search kernel assert at every leaf-step that
    beta equals an independently summed alpha.
    """
    clique = _check_inputs(clique, inputs)
    covered = set().union(*(u.scope for u in inputs)) if inputs else set()
    if covered != set(clique):
        raise DomainError(f"inputs cover {sorted(covered)}, not {clique}")
    wanted = list(range(len(inputs))) if wanted is None else list(wanted)
    if method == "arch2":
        scopes = targets if targets is not None else [inputs[i].scope for i in wanted]
        res = operation2_via_duals(inputs, scopes, counters)
        if targets is not None:
            return res
        out: list[Potential | None] = [None] * len(inputs)
        for i, r in zip(wanted, res):
            out[i] = r
        return out
    if targets is not None:
        raise DomainError("explicit targets are only supported by arch2")
    if method == "arch1-simple":
        fn = _simple_search if kernel == "search" else _simple_vector
    elif method == "arch1-cached":
        fn = _cached_search if kernel == "search" else _cached_vector
    else:
        raise DomainError(f"unknown method {method!r}")
    if check and fn is _cached_search:
        accs = fn(clique, inputs, wanted, ensure(counters), check=True)
    else:
        accs = fn(clique, inputs, wanted, ensure(counters))
    out = [None] * len(inputs)
    for i, acc in zip(wanted, accs):
        out[i] = Potential(inputs[i].scope, acc)
    return out


# ---------------------------------------------------------------------------
# simple scan: alpha is the product at every leaf-step


def _simple_vector(clique, inputs, wanted, c: OpCounters):
    stream = _Stream(clique, [u.scope for u in inputs], slot_order=True)
    accs = [np.zeros(len(inputs[i].table)) for i in wanted]
    c.alloc(stream.chunk)
    for ch in range(stream.n_chunks):
        alpha = np.ones(stream.chunk)
        for i, u in enumerate(inputs):
            alpha *= u.table[stream.index(i, ch)]
        c.mul(len(inputs) * stream.chunk)
        for acc, i in zip(accs, wanted):
            acc += np.bincount(stream.index(i, ch), weights=alpha, minlength=acc.size)
        c.add(len(wanted) * stream.chunk)
    c.free(stream.chunk)
    c.write(sum(a.size for a in accs))
    return accs


def _search_setup(inputs, wanted):
    infos = [dense_to_info(u.table, u.scope) for u in inputs]
    accs = [InfoTree(infos[i].tree, np.zeros(len(inputs[i].table))) for i in wanted]
    return infos, accs


def _simple_search(clique, inputs, wanted, c: OpCounters):
    infos, accs = _search_setup(inputs, wanted)
    k = len(inputs)
    slot = [info.tree.slot for info in infos] + [a.tree.slot for a in accs]

    def visit(ctx):
        alpha = 1.0
        for (j, v) in ctx.leaves:
            if j < k:
                alpha *= infos[j].values[slot[j][v]]
        for (j, v) in ctx.leaves:
            if j >= k:
                accs[j - k].values[slot[j][v]] += alpha
        c.mul(k)
        c.add(len(accs))

    full_search(infos + accs, visit)
    c.write(sum(a.values.size for a in accs))
    return [info_to_dense(a, inputs[i].scope) for a, i in zip(accs, wanted)]


# ---------------------------------------------------------------------------
# cached scan: alpha is updated by the ratios of the inputs whose leaf moved,
# beta is the running sum of alpha, and each accumulator leaf collects the
# slice of beta accrued while it was current.  A slice is a difference of two
# prefix sums, which cancels badly when the slice is short, so alpha, beta and
# the checkpoints are held in extended precision.

WIDE = np.longdouble


def _cached_search(clique, inputs, wanted, c: OpCounters, check: bool = False):
    infos, accs = _search_setup(inputs, wanted)
    k = len(inputs)
    slot = [info.tree.slot for info in infos] + [a.tree.slot for a in accs]
    vals = [MZCArray.from_real(info.values) for info in infos]
    vals = [(v.mag.astype(WIDE), v.zc) for v in vals]

    def scalar(j, s):
        return MZC(vals[j][0][s], int(vals[j][1][s]))

    st = {"t": 0, "alpha": None, "beta": WIDE(0), "shadow": 0.0}
    prev = [None] * (k + len(accs))
    delta = [WIDE(0)] * len(accs)

    def visit(ctx):
        cur = [None] * (k + len(accs))
        for (j, v) in ctx.leaves:
            cur[j] = slot[j][v]
        beta = st["beta"]
        if st["t"] == 0:
            alpha = None
            for j in range(k):
                x = scalar(j, cur[j])
                alpha = x if alpha is None else alpha * x
            c.mul(k)
        else:
            for a in range(len(accs)):
                q = k + a
                if cur[q] != prev[q]:
                    accs[a].values[prev[q]] += np.float64(beta - delta[a])
                    delta[a] = beta
                    c.add(2)
            ratio = None
            for j in range(k):
                if cur[j] != prev[j]:
                    r = scalar(j, cur[j]) / scalar(j, prev[j])
                    ratio = r if ratio is None else ratio * r
                    c.div(1)
                    c.mul(1)
            alpha = st["alpha"] * ratio if ratio is not None else st["alpha"]
        st["beta"] = beta + (alpha.a if alpha.i == 0 else WIDE(0))
        c.add(1)
        if check:
            direct = float(np.prod([infos[j].values[cur[j]] for j in range(k)]))
            st["shadow"] += direct
            if not np.isclose(float(st["beta"]), st["shadow"], rtol=1e-9, atol=1e-300):
                raise InternalConsistencyError(
                    f"cached scan drifted at leaf-step {st['t']}: beta {float(st['beta'])!r}, "
                    f"running sum {st['shadow']!r}")
        st["alpha"] = alpha
        st["t"] += 1
        prev[:] = cur

    full_search(infos + accs, visit)
    for a in range(len(accs)):
        accs[a].values[prev[k + a]] += np.float64(st["beta"] - delta[a])
        c.add(2)
    c.write(sum(a.values.size for a in accs))
    return [info_to_dense(a, inputs[i].scope) for a, i in zip(accs, wanted)]


def _cached_vector(clique, inputs, wanted, c: OpCounters):
    stream = _Stream(clique, [u.scope for u in inputs], slot_order=True)
    k = len(inputs)
    n = stream.chunk
    vals = [MZCArray.from_real(u.table) for u in inputs]
    vals = [(v.mag.astype(WIDE), v.zc) for v in vals]
    accs = [np.zeros(len(inputs[i].table)) for i in wanted]
    prev_idx = [-1] * k
    alpha_mag, alpha_zc = WIDE(1), 0
    beta = WIDE(0)
    delta = [WIDE(0)] * len(wanted)
    c.alloc(4 * n)
    for ch in range(stream.n_chunks):
        r_mag = np.ones(n, dtype=WIDE)
        r_zc = np.zeros(n, dtype=np.int64)
        seeded = np.zeros(n, dtype=bool)
        moves = []
        for i in range(k):
            idx = stream.index(i, ch)
            before = np.concatenate(([prev_idx[i]], idx[:-1]))
            pos = np.flatnonzero(idx != before)
            mag, zc = vals[i]
            old = before[pos]
            fresh = old < 0  # the very first leaf-step takes the value itself
            ratio_m = mag[idx[pos]] / np.where(fresh, WIDE(1), mag[np.maximum(old, 0)])
            ratio_z = zc[idx[pos]] - np.where(fresh, 0, zc[np.maximum(old, 0)])
            c.div(pos.size - int(fresh.sum()))
            # the first moved input seeds the step's ratio, later ones multiply in
            r_mag[pos] = np.where(seeded[pos], r_mag[pos] * ratio_m, ratio_m)
            r_zc[pos] += ratio_z
            seeded[pos] = True
            c.mul(pos.size)
            moves.append((pos[~fresh], old[~fresh]))
            prev_idx[i] = int(idx[-1])
        # alpha_t = alpha_{t-1} * r_t and beta_t = beta_{t-1} + alpha_t, left to right
        mags = np.multiply.accumulate(np.concatenate(([alpha_mag], r_mag)))[1:]
        zcs = alpha_zc + np.cumsum(r_zc)
        alpha_real = np.where(zcs == 0, mags, WIDE(0))
        betas = np.cumsum(np.concatenate(([beta], alpha_real)))
        c.add(n)
        for a, i in enumerate(wanted):
            pos, old = moves[i]
            if pos.size == 0:
                continue
            b_at = betas[pos]  # beta at the start of each moving step
            inc = b_at - np.concatenate(([delta[a]], b_at[:-1]))
            np.add.at(accs[a], old, inc.astype(np.float64))
            delta[a] = b_at[-1]
            c.add(2 * pos.size)
        alpha_mag, alpha_zc = mags[-1], int(zcs[-1])
        beta = betas[-1]
    c.free(4 * n)
    for a, i in enumerate(wanted):
        accs[a][prev_idx[i]] += np.float64(beta - delta[a])
        c.add(2)
    c.write(sum(a.size for a in accs))
    return accs
