"""Seeded synthetic instances: stars, chains and random factorisations."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .junction import Factorisation, JunctionTree, assign_factors
from .potential import Potential

LOW, HIGH = 0.5, 2.0


def _table(rng: np.random.Generator, k: int, zero_prob: float = 0.0) -> np.ndarray:
    t = rng.uniform(LOW, HIGH, 1 << k)
    if zero_prob > 0:
        t[rng.random(1 << k) < zero_prob] = 0.0
    return t


def star(center: int, sep: int, degree: int, seed: int) -> tuple[Factorisation, JunctionTree]:
    """One centre vertex over ``1..center`` and ``degree`` leaves, each holding
    ``sep`` centre variables plus one private variable.  Factors: one over the
    whole centre and one per leaf."""
    if not (1 <= center <= 20):
        raise DomainError("centre size must be in 1..20")
    if not (0 <= sep <= center):
        raise DomainError("separator size must be in 0..centre size")
    if not (1 <= degree <= 4096):
        raise DomainError("degree must be in 1..4096")
    rng = np.random.default_rng(seed)
    centre = tuple(range(1, center + 1))
    factors = [Potential(centre, _table(rng, center))]
    vertices = [centre]
    for i in range(degree):
        shared = sorted(int(v) for v in rng.choice(centre, size=sep, replace=False))
        scope = tuple(shared + [center + 1 + i])
        factors.append(Potential(scope, _table(rng, len(scope))))
        vertices.append(scope)
    f = Factorisation(center + degree, tuple(factors))
    jt = JunctionTree(tuple(vertices), tuple((0, i + 1) for i in range(degree)))
    jt = JunctionTree(jt.vertices, jt.edges, assign_factors(jt, f))
    return f, jt


def chain(length: int, scope: int, seed: int) -> Factorisation:
    """Factors over sliding windows ``{j+1..j+scope}`` for ``j < length``."""
    if length < 1 or scope < 1:
        raise DomainError("chain length and scope must be positive")
    rng = np.random.default_rng(seed)
    factors = [Potential(tuple(range(j + 1, j + scope + 1)), _table(rng, scope))
               for j in range(length)]
    return Factorisation(length + scope - 1, tuple(factors))


def random_model(n: int, factors: int, max_scope: int, seed: int,
                 zero_prob: float = 0.0) -> Factorisation:
    """Random scopes of size ``1..max_scope`` that together cover ``1..n``.

    Scope sizes are drawn first (and bumped until they can cover every
    variable), a random permutation of the variables is dealt into the slots,
    and leftover slots take random extra variables.
    """
    if n < 1 or factors < 1 or max_scope < 1:
        raise DomainError("n, factors and max scope must be positive")
    if n > factors * max_scope:
        raise DomainError("too few factor slots to cover every variable")
    rng = np.random.default_rng(seed)
    cap = min(max_scope, n)
    sizes = rng.integers(1, cap + 1, factors)
    while sizes.sum() < n:
        room = np.flatnonzero(sizes < cap)
        sizes[rng.choice(room)] += 1
    slots = np.repeat(np.arange(factors), sizes)
    rng.shuffle(slots)
    scopes: list[set[int]] = [set() for _ in range(factors)]
    perm = rng.permutation(np.arange(1, n + 1))
    for x, i in zip(perm, slots):
        scopes[int(i)].add(int(x))
    for i in range(factors):
        while len(scopes[i]) < sizes[i]:
            free = sorted(set(range(1, n + 1)) - scopes[i])
            scopes[i].add(int(rng.choice(free)))
    out = []
    for sc in scopes:
        sc = tuple(sorted(sc))
        out.append(Potential(sc, _table(rng, len(sc), zero_prob)))
    return Factorisation(n, tuple(out))
