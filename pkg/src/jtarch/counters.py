"""Operation and space counters for the engines."""

from __future__ import annotations

from dataclasses import dataclass, field, fields


@dataclass
class OpCounters:
    """Counts arithmetic on table entries and tracks live working entries.

    A product of ``m`` factors counts ``m`` multiplications (the running
    product starts at 1).  Subtractions count as additions.
    """

    multiplications: int = 0
    additions: int = 0
    divisions: int = 0
    table_writes: int = 0
    live_aux_entries: int = 0
    peak_aux_entries: int = 0

    def mul(self, n: int = 1):
        self.multiplications += int(n)

    def add(self, n: int = 1):
        self.additions += int(n)

    def div(self, n: int = 1):
        self.divisions += int(n)

    def write(self, n: int = 1):
        self.table_writes += int(n)

    def alloc(self, n: int):
        self.live_aux_entries += int(n)
        if self.live_aux_entries > self.peak_aux_entries:
            self.peak_aux_entries = self.live_aux_entries

    def free(self, n: int):
        self.live_aux_entries -= int(n)

    def merge(self, other: "OpCounters"):
        """Fold ``other`` into ``self``; peaks combine by maximum."""
        self.multiplications += other.multiplications
        self.additions += other.additions
        self.divisions += other.divisions
        self.table_writes += other.table_writes
        self.peak_aux_entries = max(self.peak_aux_entries, other.peak_aux_entries)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name != "live_aux_entries"}


class NullCounters(OpCounters):
    """Counters that record nothing; used when the caller passes none."""

    def mul(self, n=1):
        pass

    add = div = write = mul

    def alloc(self, n):
        pass

    free = alloc


def ensure(counters: OpCounters | None) -> OpCounters:
    return counters if counters is not None else NullCounters()


@dataclass
class Instrument:
    """Per-vertex counters for one propagation run."""

    vertices: dict[int, OpCounters] = field(default_factory=dict)
    resident_entries: int = 0

    def at(self, vertex: int) -> OpCounters:
        if vertex not in self.vertices:
            self.vertices[vertex] = OpCounters()
        return self.vertices[vertex]

    def total(self) -> OpCounters:
        out = OpCounters()
        for c in self.vertices.values():
            out.merge(c)
        return out

    def stats(self) -> dict[str, int]:
        out = self.total().as_dict()
        out["resident_entries"] = self.resident_entries
        return out
