"""Brute-force marginals by enumerating every labelling."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .junction import Factorisation
from .potential import Potential, normalize_marginal
from .propagation import MarginalResult

MAX_ORACLE_VARS = 24


def joint_table(f: Factorisation) -> np.ndarray:
    """Unnormalised joint as an ``n``-dimensional array; axis ``a`` is variable ``n - a``."""
    if f.n > MAX_ORACLE_VARS:
        raise DomainError(f"oracle refuses {f.n} variables (limit {MAX_ORACLE_VARS})")
    joint = np.ones((2,) * f.n)
    for phi in f.factors:
        shape = [1] * f.n
        for v in phi.scope:
            shape[f.n - v] = 2
        # a factor table read as (2,)*k lists its variables largest first,
        # which is also the axis order here
        joint = joint * phi.table.reshape(shape)
    return joint


def brute_force_marginals(f: Factorisation):
    """Exact normalised marginals; returns a ``MarginalResult``."""
    joint = joint_table(f)
    axes = set(range(f.n))
    pots = {}
    for x in range(1, f.n + 1):
        keep = f.n - x
        pots[x] = Potential((x,), joint.sum(axis=tuple(sorted(axes - {keep}))))
    probs = {x: normalize_marginal(p) for x, p in pots.items()}
    return MarginalResult(pots, probs)
