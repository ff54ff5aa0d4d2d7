"""Straddle-trees, info-trees and the stack-driven searches over them.

active straddle-tree is an oriented binary tree whose internal vertices carry
variable labels that strictly increase downwards.  Each leaf ``l`` stands for
the set ``tau(l)`` of labels of those ancestors whose right child lies on the
path to ``l``.  Leaves are numbered by *slot* in left-first DFS order, so the
smallest variable is the outermost branch.

All searches are driven by the ghost-search stack.  Tokens are ``0`` (a
leaf-step) or ``(e, f)`` with ``f`` in ``{1, 2, 3}``: the ``f``-th visit of an
internal vertex labelled ``e`` in a depth-first walk of the power-set tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, SearchContextError

LEAF = -1


class StraddleTree:
    """Array-backed straddle-tree; vertex 0 is the root.

    Vertices are stored in DFS preorder, so the leaves of any subtree form a
    contiguous run of slots.
    """

    __slots__ = ("label", "left", "right", "parent", "slot", "leaves", "_masks")

    def __init__(self):
        self.label: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.parent: list[int] = []
        self.slot: list[int] = []
        self.leaves: list[int] = []
        self._masks = None

    def _add(self, label: int, parent: int) -> int:
        v = len(self.label)
        self.label.append(label)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.parent.append(parent)
        if label == 0:
            self.slot.append(len(self.leaves))
            self.leaves.append(v)
        else:
            self.slot.append(LEAF)
        return v

    def __len__(self):
        return len(self.label)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def is_leaf(self, v: int) -> bool:
        return self.left[v] == LEAF

    def labels(self) -> list[int]:
        return sorted({e for e in self.label if e})

    def masks(self) -> list[int]:
        """``tau`` of every leaf as a bitmask (bit ``v`` for variable ``v``), in slot order."""
        if self._masks is None:
            out = []
            stack = [(0, 0)]
            while stack:
                v, m = stack.pop()
                if self.left[v] == LEAF:
                    out.append(m)
                else:
                    stack.append((self.right[v], m | (1 << self.label[v])))
                    stack.append((self.left[v], m))
            self._masks = out
        return self._masks

    def subsets(self) -> list[frozenset[int]]:
        return [mask_to_set(m) for m in self.masks()]

    def leaf_range(self, v: int) -> tuple[int, int]:
        """Half-open slot range of the leaves below ``v``."""
        lo = v
        while self.left[lo] != LEAF:
            lo = self.left[lo]
        hi = v
        while self.left[hi] != LEAF:
            hi = self.right[hi]
        return self.slot[lo], self.slot[hi] + 1

    def subtree(self, v: int) -> "StraddleTree":
        """Copy of the subtree hanging from ``v``."""
        out = StraddleTree()
        stack = [(v, LEAF)]
        while stack:
            u, p = stack.pop()
            w = out._add(self.label[u], p)
            if p != LEAF:
                if out.left[p] == LEAF:
                    out.left[p] = w
                else:
                    out.right[p] = w
            if self.left[u] != LEAF:
                stack.append((self.right[u], w))
                stack.append((self.left[u], w))
        return out

    def same_shape(self, other: "StraddleTree") -> bool:
        return (self.label == other.label and self.left == other.left
                and self.right == other.right)

    def __repr__(self):
        return f"StraddleTree(vertices={len(self)}, leaves={self.n_leaves})"


def mask_to_set(m: int) -> frozenset[int]:
    out = []
    v = 0
    while m:
        if m & 1:
            out.append(v)
        m >>= 1
        v += 1
    return frozenset(out)


def set_to_mask(s: Iterable[int]) -> int:
    m = 0
    for v in s:
        m |= 1 << v
    return m


def powerset_tree(scope: Sequence[int]) -> StraddleTree:
    """Balanced straddle-tree of the power-set of ``scope``."""
    scope = sorted(scope)
    if len(set(scope)) != len(scope):
        raise DomainError(f"duplicate variables in {scope}")
    tree = StraddleTree()
    k = len(scope)
    # iterative preorder; each frame is (depth, parent, is_right)
    stack = [(0, LEAF, False)]
    while stack:
        depth, p, is_right = stack.pop()
        label = scope[depth] if depth < k else 0
        v = tree._add(label, p)
        if p != LEAF:
            if is_right:
                tree.right[p] = v
            else:
                tree.left[p] = v
        if depth < k:
            stack.append((depth + 1, v, True))
            stack.append((depth + 1, v, False))
    return tree


def is_straddle_set(zeta: Iterable[Iterable[int]]) -> bool:
    """True iff ``zeta`` is non-empty and downward closed."""
    members = {frozenset(z) for z in zeta}
    if not members:
        return False
    return all(z - {v} in members for z in members for v in z)


def straddle_tree(zeta: Iterable[Iterable[int]]) -> StraddleTree:
    """Straddle-tree of a downward-closed family of sets."""
    members = [frozenset(z) for z in zeta]
    if not is_straddle_set(members):
        raise DomainError("family of sets is not downward closed")
    tree = StraddleTree()
    stack = [(sorted(set(members), key=sorted), LEAF, False)]
    while stack:
        sets, p, is_right = stack.pop()
        support = set().union(*sets)
        label = min(support) if support else 0
        v = tree._add(label, p)
        if p != LEAF:
            if is_right:
                tree.right[p] = v
            else:
                tree.left[p] = v
        if label:
            minus = [z for z in sets if label not in z]
            plus = [z - {label} for z in sets if label in z]
            stack.append((plus, v, True))
            stack.append((minus, v, False))
    return tree


@dataclass
class InfoTree:
    """active straddle-tree with one value per leaf, stored in slot order."""

    tree: StraddleTree
    values: object  # numpy array or MZCArray, indexed by slot

    def __post_init__(self):
        if len(self.values) != self.tree.n_leaves:
            raise DomainError(
                f"{len(self.values)} values for a tree with {self.tree.n_leaves} leaves")

    def value_of(self, subset: Iterable[int]):
        m = set_to_mask(subset)
        return self.values[self.tree.masks().index(m)]

    def as_dict(self) -> dict[frozenset[int], float]:
        return {s: self.values[i] for i, s in enumerate(self.tree.subsets())}


def slot_to_dense(scope: Sequence[int]) -> np.ndarray:
    """For the power-set tree of ``scope``: dense table index of each slot."""
    k = len(scope)
    s = np.arange(1 << k, dtype=np.int64)
    out = np.zeros_like(s)
    for j in range(k):
        # variable j (LSB in dense order) is bit k-1-j of the slot
        out |= ((s >> (k - 1 - j)) & 1) << j
    return out


# ---------------------------------------------------------------------------
# searches


@dataclass
class SearchStats:
    steps: int = 0
    leaf_steps: int = 0
    pruned: int = 0


@dataclass
class SearchContext:
    """Per-search state: ``active`` maps a label to an ordered set of vertex refs,
    ``leaves`` is the ordered set of current leaf refs.  active ref is ``(j, v)``: vertex
    ``v`` of the ``j``-th tree of the searched multiset."""

    active: dict[int, dict] = field(default_factory=dict)
    leaves: dict = field(default_factory=dict)
    subset: int = 0
    token: object = None

    def is_clean(self) -> bool:
        return not self.leaves and not any(self.active.values())

    def require_clean(self):
        if not self.is_clean():
            raise SearchContextError("search context is not clean")


def _as_views(trees) -> list[tuple[StraddleTree, int]]:
    views = []
    for t in trees:
        if isinstance(t, InfoTree):
            t = t.tree
        if isinstance(t, tuple):
            views.append(t)
        else:
            views.append((t, 0))
    return views


def _union_labels(views) -> list[int]:
    labels = set()
    for tree, root in views:
        if root == 0:
            labels.update(e for e in tree.label if e)
        else:
            stack = [root]
            while stack:
                v = stack.pop()
                if tree.left[v] != LEAF:
                    labels.add(tree.label[v])
                    stack.append(tree.left[v])
                    stack.append(tree.right[v])
    return sorted(labels)


def ghost_search(variables: Sequence[int], visitor: Callable | None = None) -> SearchStats:
    """Run the bare stack protocol over ``variables``.

    ``visitor(token, subset)`` is called at the end of every time-step with the
    token seen at its start and the current subset as a bitmask.
    """
    variables = sorted(variables)
    if not variables:
        raise DomainError("ghost search needs a non-empty set")
    nxt = {a: b for a, b in zip(variables, variables[1:] + [None])}
    stats = SearchStats()
    stack: list = [(variables[0], 1)]
    subset = 0
    while stack:
        tok = stack.pop()
        stats.steps += 1
        if tok == 0:
            stats.leaf_steps += 1
        else:
            e, f = tok
            if f == 3:
                subset &= ~(1 << e)
            else:
                if f == 1:
                    subset &= ~(1 << e)
                else:
                    subset |= 1 << e
                stack.append((e, f + 1))
                b = nxt[e]
                stack.append(0 if b is None else (b, 1))
        if visitor is not None:
            visitor(tok, subset)
    return stats


def _drive(trees, visitor, synchronized: bool, prune: bool,
           on_step: Callable | None = None, ctx: SearchContext | None = None) -> SearchStats:
    views = _as_views(trees)
    ctx = ctx if ctx is not None else SearchContext()
    ctx.require_clean()
    stats = SearchStats()
    labels = _union_labels(views)
    active = ctx.active
    leaves = ctx.leaves
    for e in labels:
        active.setdefault(e, {})
    roots = []
    for j, (tree, root) in enumerate(views):
        if tree.left[root] == LEAF:
            # single-leaf tree: its only leaf matches the empty set
            roots.append((j, root, 0))
        else:
            roots.append((j, root, tree.label[root]))
    if not labels:
        # every tree is a single leaf: one leaf-step over the empty set
        for j, root, _ in roots:
            leaves[(j, root)] = None
        stats.steps = stats.leaf_steps = 1
        ctx.subset, ctx.token = 0, 0
        if visitor is not None:
            visitor(ctx)
        if on_step is not None:
            on_step(0, ctx)
        leaves.clear()
        return stats
    pos = {e: p for p, e in enumerate(labels)}
    nonempty = 0  # bit p set iff active(labels[p]) may be non-empty
    for j, root, lab in roots:
        if lab:
            active[lab][(j, root)] = None
            nonempty |= 1 << pos[lab]
        else:
            # a lone leaf stands for the empty set, which the first leaf-step visits
            leaves[(j, root)] = None

    def place(j, tree, child):
        nonlocal nonempty
        if tree.left[child] == LEAF:
            leaves[(j, child)] = None
        else:
            lab = tree.label[child]
            active[lab][(j, child)] = None
            nonempty |= 1 << pos[lab]

    def unplace(j, tree, child):
        if tree.left[child] == LEAF:
            leaves.pop((j, child), None)
        else:
            active[tree.label[child]].pop((j, child), None)

    stack: list = [(labels[0], 1)]
    nxt = {a: b for a, b in zip(labels, labels[1:] + [None])}
    subset = 0
    while stack:
        tok = stack.pop()
        stats.steps += 1
        ctx.token = tok
        if tok == 0:
            stats.leaf_steps += 1
            ctx.subset = subset
            if visitor is not None:
                visitor(ctx)
            if on_step is not None:
                on_step(tok, ctx)
            if synchronized:
                leaves.clear()
            continue
        e, f = tok
        if on_step is not None:
            on_step(tok, ctx)
        act = active[e]
        if f == 1:
            subset &= ~(1 << e)
            for (j, v) in act:
                tree = views[j][0]
                place(j, tree, tree.left[v])
        elif f == 2:
            subset |= 1 << e
            for (j, v) in act:
                tree = views[j][0]
                if not synchronized:
                    unplace(j, tree, tree.left[v])
                place(j, tree, tree.right[v])
        else:
            subset &= ~(1 << e)
            if synchronized:
                act.clear()
                nonempty &= ~(1 << pos[e])
            else:
                for (j, v) in act:
                    tree = views[j][0]
                    unplace(j, tree, tree.right[v])
            continue
        stack.append((e, f + 1))
        b = nxt[e]
        if synchronized and prune and not (nonempty >> (pos[e] + 1)):
            # nothing deeper can match; collapse the subtree walk
            if leaves:
                stack.append(0)
            stats.pruned += 1
            continue
        stack.append(0 if b is None else (b, 1))
    ctx.token = None
    ctx.subset = 0
    if not synchronized:
        for j, root, lab in roots:
            if lab:
                active[lab].pop((j, root), None)
            else:
                leaves.pop((j, root), None)
    if not ctx.is_clean():
        raise SearchContextError("search finished with a dirty context")
    return stats


def full_search(trees, visitor: Callable | None = None,
                ctx: SearchContext | None = None) -> SearchStats:
    """At the leaf-step for subset ``subset``, ``ctx.leaves`` holds, for each tree with
    underlying set ``Y``, the leaves ``l`` with ``tau(l) = subset & Y``."""
    return _drive(trees, visitor, synchronized=False, prune=False, ctx=ctx)


def synchronized_search(trees, visitor: Callable | None = None, prune: bool = True,
                        on_step: Callable | None = None,
                        ctx: SearchContext | None = None) -> SearchStats:
    """At the leaf-step for subset ``subset``, ``ctx.leaves`` holds every leaf ``l``
    (across all trees) with ``tau(l) = subset``."""
    return _drive(trees, visitor, synchronized=True, prune=prune, on_step=on_step, ctx=ctx)


def build_union_tree(trees) -> StraddleTree:
    """Straddle-tree of the union of the inputs' straddle-sets, grown by the
    active-vertex protocol during a synchronised search."""
    views = _as_views(trees)
    out = StraddleTree()
    labels = _union_labels(views)
    if not labels:
        out._add(0, LEAF)
        return out
    out._add(labels[0], LEAF)
    state = {"active": 0, "right": False, "first": True}

    def attach(label: int) -> int:
        v = state["active"]
        w = out._add(label, v)
        if state["right"]:
            out.right[v] = w
        else:
            out.left[v] = w
        return w

    def on_step(tok, ctx):
        if state["first"]:
            state["first"] = False
            return
        if tok == 0:
            if ctx.leaves:
                attach(0)
            return
        e, f = tok
        if not ctx.active[e]:
            return
        if f == 1:
            state["active"] = attach(e)
            state["right"] = False
        elif f == 2:
            state["right"] = True
        else:
            state["active"] = out.parent[state["active"]]
            state["right"] = True

    synchronized_search(views, on_step=on_step)
    return out


def leaf_maps(target: StraddleTree | tuple, sources, prune: bool = True) -> list[np.ndarray]:
    """Slot correspondences found by one synchronised search.

    For every source tree ``s`` returns an int array ``m`` of length
    ``s.n_leaves`` with ``m[slot in s] = slot in target`` for leaves of equal
    ``tau``, or ``-1`` when the target has no such leaf.
    """
    views = _as_views([target] + list(sources))
    maps = [np.full(_leaf_count(t, r), -1, dtype=np.int64) for t, r in views[1:]]
    offsets = [t.slot[_first_leaf(t, r)] for t, r in views]
    slots = [t.slot for t, _ in views]

    def visit(ctx):
        hit = -1
        for (j, v) in ctx.leaves:
            if j == 0:
                hit = slots[0][v] - offsets[0]
                break
        if hit < 0:
            return
        for (j, v) in ctx.leaves:
            if j:
                maps[j - 1][slots[j][v] - offsets[j]] = hit

    synchronized_search(views, visit, prune=prune)
    return maps


def _first_leaf(tree: StraddleTree, v: int) -> int:
    while tree.left[v] != LEAF:
        v = tree.left[v]
    return v


def _leaf_count(tree: StraddleTree, v: int) -> int:
    lo, hi = tree.leaf_range(v)
    return hi - lo
