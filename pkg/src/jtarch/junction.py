"""Factorisations, junction trees, validation and a min-fill constructor."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

from .errors import ConstructionError, DomainError
from .potential import Potential, as_scope


@dataclass(frozen=True)
class Factorisation:
    """``n`` boolean variables ``1..n`` and a list of factors covering them."""

    n: int
    factors: tuple[Potential, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.n < 1:
            raise DomainError("a factorisation needs at least one variable")
        covered = set()
        for i, phi in enumerate(self.factors):
            if phi.scope and (phi.scope[0] < 1 or phi.scope[-1] > self.n):
                raise DomainError(f"factor {i + 1} uses a variable outside 1..{self.n}")
            covered.update(phi.scope)
        missing = sorted(set(range(1, self.n + 1)) - covered)
        if missing:
            raise DomainError(f"variables {missing} appear in no factor")


@dataclass(frozen=True)
class JunctionTree:
    """Vertices are scopes; edges are index pairs.  ``assignment[f]`` is the
    vertex holding factor ``f``.  Rooting fills ``root``, ``parent`` and
    ``order`` (breadth-first from the root)."""

    vertices: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    assignment: dict[int, int] | None = None
    root: int | None = None
    parent: tuple[int, ...] | None = None
    order: tuple[int, ...] | None = None
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(as_scope(v) for v in self.vertices))
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        adj: list[list[int]] = [[] for _ in self.vertices]
        for a, b in self.edges:
            if 0 <= a < len(adj) and 0 <= b < len(adj) and a != b:
                adj[a].append(b)
                adj[b].append(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(x)) for x in adj))

    def __len__(self):
        return len(self.vertices)

    def neighbours(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def separator(self, a: int, b: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.vertices[a]) & set(self.vertices[b])))

    def children(self, v: int) -> tuple[int, ...]:
        if self.parent is None:
            raise DomainError("junction tree is not rooted")
        return tuple(u for u in self._adj[v] if self.parent[u] == v)

    def factors_at(self, v: int) -> list[int]:
        if self.assignment is None:
            return []
        return sorted(f for f, u in self.assignment.items() if u == v)

    @property
    def width(self) -> int:
        return max((len(v) for v in self.vertices), default=0)


def validate(jt: JunctionTree, f: Factorisation | None = None) -> list[str]:
    """All violated junction-tree axioms, as human-readable strings."""
    out: list[str] = []
    c = len(jt.vertices)
    if c == 0:
        return ["tree: no vertices"]
    for a, b in jt.edges:
        if not (0 <= a < c and 0 <= b < c):
            out.append(f"tree: edge {a + 1}-{b + 1} refers to a missing vertex")
        elif a == b:
            out.append(f"tree: self-loop at vertex {a + 1}")
    if len(jt.edges) != c - 1:
        out.append(f"tree: {len(jt.edges)} edges for {c} vertices (expected {c - 1})")
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in jt.neighbours(v):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    if len(seen) != c:
        out.append(f"tree: not connected ({len(seen)} of {c} vertices reachable from vertex 1)")
    if f is not None:
        covered = set().union(*map(set, jt.vertices))
        for x in range(1, f.n + 1):
            if x not in covered:
                out.append(f"coverage: variable {x} is in no vertex")
    if not out:
        # running intersection: the vertices holding x must induce a subtree
        holders: dict[int, list[int]] = {}
        for i, v in enumerate(jt.vertices):
            for x in v:
                holders.setdefault(x, []).append(i)
        for x, hs in sorted(holders.items()):
            hs_set = set(hs)
            reach = {hs[0]}
            queue = deque([hs[0]])
            while queue:
                v = queue.popleft()
                for u in jt.neighbours(v):
                    if u in hs_set and u not in reach:
                        reach.add(u)
                        queue.append(u)
            if reach != hs_set:
                a = hs[0] + 1
                b = min(hs_set - reach) + 1
                out.append(f"running-intersection: variable {x} is in vertices {a} and {b} "
                           f"but not on every vertex of the path between them")
    if f is not None and jt.assignment is not None:
        for fi, v in sorted(jt.assignment.items()):
            if not (0 <= fi < len(f.factors)):
                out.append(f"assignment: factor {fi + 1} does not exist")
            elif not (0 <= v < c):
                out.append(f"assignment: factor {fi + 1} sent to missing vertex {v + 1}")
            elif not set(f.factors[fi].scope) <= set(jt.vertices[v]):
                out.append(f"assignment: factor {fi + 1} scope {list(f.factors[fi].scope)} "
                           f"is not inside vertex {v + 1}")
        missing = [i + 1 for i in range(len(f.factors)) if i not in jt.assignment]
        if missing:
            out.append(f"assignment: factors {missing} are not assigned")
    return out


def _min_fill_cliques(n: int, scopes: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    adj: dict[int, set[int]] = {x: set() for x in range(1, n + 1)}
    for s in scopes:
        for a, b in combinations(s, 2):
            adj[a].add(b)
            adj[b].add(a)
    cliques = []
    remaining = set(adj)
    while remaining:
        best, best_fill = None, None
        for x in sorted(remaining):
            nb = adj[x]
            fill = sum(1 for a, b in combinations(sorted(nb), 2) if b not in adj[a])
            if best_fill is None or fill < best_fill:
                best, best_fill = x, fill
                if fill == 0:
                    break
        nb = adj[best]
        cliques.append(tuple(sorted(nb | {best})))
        for a, b in combinations(sorted(nb), 2):
            adj[a].add(b)
            adj[b].add(a)
        for a in nb:
            adj[a].discard(best)
        del adj[best]
        remaining.discard(best)
    maximal = []
    for i, cl in enumerate(cliques):
        s = set(cl)
        dominated = any(
            (s < set(o)) or (s == set(o) and j < i) for j, o in enumerate(cliques) if j != i)
        if not dominated:
            maximal.append(cl)
    return maximal


def construct(f: Factorisation) -> JunctionTree:
    """Junction tree by min-fill elimination and a maximum-separator spanning tree.

    Ties are broken by the smallest variable id and then the smallest vertex
    index, so the result depends only on the factorisation.  Disconnected parts
    are joined by empty separators.
    """
    cliques = _min_fill_cliques(f.n, [phi.scope for phi in f.factors])
    pairs = sorted(
        ((len(set(a) & set(b)), i, j) for (i, a), (j, b) in combinations(enumerate(cliques), 2)),
        key=lambda t: (-t[0], t[1], t[2]))
    uf = list(range(len(cliques)))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    edges = []
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            uf[ri] = rj
            edges.append((i, j))
    jt = JunctionTree(tuple(cliques), tuple(edges))
    return replace(jt, assignment=assign_factors(jt, f))


def assign_factors(jt: JunctionTree, f: Factorisation) -> dict[int, int]:
    """Each factor goes to the lowest-index vertex containing its scope."""
    out = {}
    sets = [set(v) for v in jt.vertices]
    for i, phi in enumerate(f.factors):
        s = set(phi.scope)
        for v, vs in enumerate(sets):
            if s <= vs:
                out[i] = v
                break
        else:
            raise ConstructionError(f"no vertex contains factor {i + 1} with scope {list(phi.scope)}")
    return out


def root_tree(jt: JunctionTree, root: int | str = "max") -> JunctionTree:
    """Orient ``jt`` breadth-first from ``root`` (an index, or ``"max"`` for the
    largest vertex with ties to the lowest index)."""
    c = len(jt.vertices)
    if root == "max":
        root = max(range(c), key=lambda i: (len(jt.vertices[i]), -i))
    root = int(root)
    if not 0 <= root < c:
        raise DomainError(f"root {root + 1} is out of range 1..{c}")
    parent = [-1] * c
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in jt.neighbours(v):
            if u not in seen:
                seen.add(u)
                parent[u] = v
                order.append(u)
                queue.append(u)
    if len(order) != c:
        raise ConstructionError("junction tree is not connected")
    return replace(jt, root=root, parent=tuple(parent), order=tuple(order))


def prepare(f: Factorisation, jt: JunctionTree | None = None, root: int | str = "max") -> JunctionTree:
    """Construct (if needed), assign factors, validate and root."""
    if jt is None:
        jt = construct(f)
    if jt.assignment is None:
        jt = replace(jt, assignment=assign_factors(jt, f))
    problems = validate(jt, f)
    if problems:
        raise ConstructionError("; ".join(problems))
    return root_tree(jt, root)
