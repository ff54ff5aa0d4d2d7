"""Message passing on a rooted junction tree, and the marginals stage.

Every engine uses the same two-phase schedule: an inward pass in which each
non-root vertex sends to its parent after all its children have sent, then an
outward pass from the root.  Operation counts are attributed to the vertex
doing the work.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .counters import Instrument
from .duals import operation2_via_duals
from .errors import DomainError
from .junction import Factorisation, JunctionTree
from .potential import (Potential, marginalize, normalize_marginal, project_indices,
                        safe_divide, unit_potential)
from .simultaneous import operation1_stream, operation2_simultaneous

ENGINES = ("ss", "hugin", "arch1", "arch1-fast", "arch2")


class MessageStore(dict):
    """Directed messages ``(src, dst) -> Potential`` plus the run's counters."""

    def __init__(self, *args, instrument: Instrument | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.instrument = instrument if instrument is not None else Instrument()


@dataclass
class HuginState:
    """Clique tables per vertex and separator tables per edge."""

    cliques: list[Potential]
    separators: dict[tuple[int, int], Potential] = field(default_factory=dict)

    @property
    def resident_entries(self) -> int:
        return sum(len(p) for p in self.cliques) + sum(len(p) for p in self.separators.values())


@dataclass
class MarginalResult:
    potentials: dict[int, Potential]
    probabilities: dict[int, tuple[float, float]]


def _require_rooted(jt: JunctionTree):
    if jt.root is None or jt.parent is None or jt.order is None:
        raise DomainError("junction tree must be rooted before propagation")


def _inward_order(jt: JunctionTree) -> list[int]:
    return [v for v in reversed(jt.order) if v != jt.root]


def _factors(jt: JunctionTree, f: Factorisation, v: int) -> list[Potential]:
    return [f.factors[i] for i in jt.factors_at(v)]


def _with_cover(clique: tuple[int, ...], inputs: list[Potential]) -> list[Potential]:
    """Append a unit over any variables of ``clique`` the inputs leave uncovered."""
    covered = set().union(*(u.scope for u in inputs)) if inputs else set()
    rest = [x for x in clique if x not in covered]
    if rest:
        inputs = inputs + [unit_potential(rest)]
    return inputs


# ---------------------------------------------------------------------------
# Shafer-Shenoy


def shafer_shenoy(jt: JunctionTree, f: Factorisation) -> MessageStore:
    """Every message is a streamed marginal of factors, the other incoming
    messages and a unit on the separator."""
    _require_rooted(jt)
    store = MessageStore()

    def send(src: int, dst: int):
        clique = jt.vertices[src]
        sep = jt.separator(src, dst)
        inputs = _factors(jt, f, src)
        inputs += [store[(u, src)] for u in jt.neighbours(src) if u != dst]
        inputs.append(unit_potential(sep))
        store[(src, dst)] = operation1_stream(clique, inputs, sep, store.instrument.at(src))

    for v in _inward_order(jt):
        send(v, jt.parent[v])
    for v in jt.order:
        for u in jt.children(v):
            send(v, u)
    return store


# ---------------------------------------------------------------------------
# Hugin


def _absorb(table: Potential, msg: Potential, counters) -> Potential:
    idx = project_indices(table.scope, msg.scope)
    counters.mul(len(table))
    counters.write(len(table))
    return Potential(table.scope, table.table * msg.table[idx])


def hugin_init(jt: JunctionTree, f: Factorisation, store: MessageStore) -> HuginState:
    cliques = []
    for v, clique in enumerate(jt.vertices):
        c = store.instrument.at(v)
        g = unit_potential(clique)
        for phi in _factors(jt, f, v):
            g = _absorb(g, phi, c)
        cliques.append(g)
    seps = {}
    for a, b in jt.edges:
        key = (min(a, b), max(a, b))
        seps[key] = unit_potential(jt.separator(a, b))
    state = HuginState(cliques, seps)
    store.instrument.resident_entries = state.resident_entries
    return state


def hugin_send(state: HuginState, store: MessageStore, jt: JunctionTree, src: int, dst: int):
    """Save the old separator, marginalise the source clique onto the
    separator, divide new by old (``x/0 := 0``) and absorb into ``dst``."""
    c = store.instrument.at(src)
    key = (min(src, dst), max(src, dst))
    old = state.separators[key]
    sep = jt.separator(src, dst)
    gamma = state.cliques[src]
    c.alloc(len(old))
    new = marginalize(gamma, sep)
    c.add(len(gamma) - len(new))
    c.alloc(len(new))
    msg = Potential(sep, safe_divide(new.table, old.table))
    c.div(len(new))
    c.write(len(new))
    state.separators[key] = new
    c.free(2 * len(new))
    store[(src, dst)] = msg
    state.cliques[dst] = _absorb(state.cliques[dst], msg, store.instrument.at(dst))


def hugin(jt: JunctionTree, f: Factorisation) -> tuple[MessageStore, HuginState]:
    _require_rooted(jt)
    store = MessageStore()
    state = hugin_init(jt, f, store)
    for v in _inward_order(jt):
        hugin_send(state, store, jt, v, jt.parent[v])
    for v in jt.order:
        for u in jt.children(v):
            hugin_send(state, store, jt, v, u)
    return store, state


# ---------------------------------------------------------------------------
# ARCH-1 / ARCH-2


def _arch(jt: JunctionTree, f: Factorisation, method: str, kernel: str = "vector") -> MessageStore:
    _require_rooted(jt)
    store = MessageStore()
    for v in _inward_order(jt):
        p = jt.parent[v]
        clique = jt.vertices[v]
        sep = jt.separator(v, p)
        inputs = _factors(jt, f, v) + [store[(u, v)] for u in jt.children(v)]
        inputs.append(unit_potential(sep))
        inputs = _with_cover(clique, inputs)
        want = len(_factors(jt, f, v)) + len(jt.children(v))
        out = operation2_simultaneous(clique, inputs, method, wanted=[want],
                                      counters=store.instrument.at(v), kernel=kernel)
        store[(v, p)] = out[want]
    for v in jt.order:
        kids = jt.children(v)
        if not kids:
            continue
        clique = jt.vertices[v]
        c = store.instrument.at(v)
        factors = _factors(jt, f, v)
        nbrs = list(jt.neighbours(v))
        inputs = _with_cover(clique, factors + [store[(u, v)] for u in nbrs])
        slot = {u: len(factors) + i for i, u in enumerate(nbrs)}
        wanted = [slot[u] for u in kids]
        out = operation2_simultaneous(clique, inputs, method, wanted=wanted, counters=c, kernel=kernel)
        for u in kids:
            m_prime = out[slot[u]]
            back = store[(u, v)]
            # M' over the separator divided by the child's message is the message to the child, with 0/0 := 0
            store[(v, u)] = Potential(m_prime.scope, safe_divide(m_prime.table, back.table))
            c.div(len(back))
            c.write(len(back))
    return store


def arch1(jt: JunctionTree, f: Factorisation, variant: str = "simple", kernel: str = "vector") -> MessageStore:
    if variant not in ("simple", "cached"):
        raise DomainError(f"unknown ARCH-1 variant {variant!r}")
    return _arch(jt, f, f"arch1-{variant}", kernel)


def arch2(jt: JunctionTree, f: Factorisation) -> MessageStore:
    return _arch(jt, f, "arch2")


def propagate(jt: JunctionTree, f: Factorisation, engine: str) -> MessageStore:
    """Run one engine by its command-line name."""
    if engine == "ss":
        return shafer_shenoy(jt, f)
    if engine == "hugin":
        return hugin(jt, f)[0]
    if engine == "arch1":
        return arch1(jt, f, "simple")
    if engine == "arch1-fast":
        return arch1(jt, f, "cached")
    if engine == "arch2":
        return arch2(jt, f)
    raise DomainError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# marginals


def marginal_vertex(jt: JunctionTree, x: int) -> int:
    """Smallest vertex containing ``x``, ties to the lowest index."""
    best = None
    for i, clique in enumerate(jt.vertices):
        if x in clique and (best is None or len(clique) < len(jt.vertices[best])):
            best = i
    if best is None:
        raise DomainError(f"variable {x} is in no vertex")
    return best


def compute_marginals(jt: JunctionTree, f: Factorisation, messages: MessageStore,
                      style: str = "stream", instrument: Instrument | None = None) -> MarginalResult:
    """``R_x`` at the smallest vertex holding ``x``, from the factors there and
    all incoming messages; ``style`` picks a streamed marginal per variable or
    one dual pass per vertex with singleton targets."""
    if style not in ("stream", "dual"):
        raise DomainError(f"unknown marginal style {style!r}")
    inst = instrument if instrument is not None else Instrument()
    by_vertex: dict[int, list[int]] = {}
    for x in range(1, f.n + 1):
        by_vertex.setdefault(marginal_vertex(jt, x), []).append(x)
    pots: dict[int, Potential] = {}
    for v, xs in sorted(by_vertex.items()):
        clique = jt.vertices[v]
        inputs = _factors(jt, f, v) + [messages[(u, v)] for u in jt.neighbours(v)]
        c = inst.at(v)
        if style == "stream":
            for x in xs:
                pots[x] = operation1_stream(clique, inputs, (x,), c)
        else:
            res = operation2_via_duals(_with_cover(clique, inputs), [(x,) for x in xs], c)
            for x, r in zip(xs, res):
                pots[x] = r
    probs = {x: normalize_marginal(pots[x]) for x in sorted(pots)}
    return MarginalResult(dict(sorted(pots.items())), probs)


def hugin_marginals(jt: JunctionTree, state: HuginState) -> dict[int, tuple[float, float]]:
    """Marginals read from calibrated clique tables."""
    out = {}
    n = max(x for clique in jt.vertices for x in clique)
    for x in range(1, n + 1):
        out[x] = normalize_marginal(marginalize(state.cliques[marginal_vertex(jt, x)], (x,)))
    return out


def run(jt: JunctionTree, f: Factorisation, engine: str, style: str | None = None):
    """Propagate and compute marginals; returns ``(messages, result)``."""
    store = propagate(jt, f, engine)
    if style is None:
        style = "dual" if engine == "arch2" else "stream"
    result = compute_marginals(jt, f, store, style)
    return store, result


def messages_close(a: MessageStore, b: MessageStore, rtol: float = 1e-9) -> bool:
    if a.keys() != b.keys():
        return False
    return all(a[k].scope == b[k].scope and np.allclose(a[k].table, b[k].table, rtol=rtol, atol=0)
               for k in a)
