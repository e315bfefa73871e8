"""The hash-table stage every sketch is built from, plus register access accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, NamedTuple

from .errors import ConfigError
from .flow_model import HashFamily


@dataclass
class ArrayAccess:
    reads: int = 0
    writes: int = 0
    rmw: int = 0

    def accesses(self) -> int:
        """Distinct memory operations: an rmw counts once."""
        return self.reads + self.writes - self.rmw


class AccessAudit:
    """Per-packet read/write/read-modify-write counts for each logical register array.

    A read-modify-write also counts as one read and one write, so
    ``rmw <= reads`` and ``rmw <= writes`` always hold.
    """

    def __init__(self) -> None:
        self._arrays: dict[str, ArrayAccess] = {}
        self.max_rmw: dict[str, int] = {}
        self.max_accesses: dict[str, int] = {}

    def register(self, name: str) -> None:
        self._arrays.setdefault(name, ArrayAccess())
        self.max_rmw.setdefault(name, 0)
        self.max_accesses.setdefault(name, 0)

    def _get(self, name: str) -> ArrayAccess:
        if name not in self._arrays:
            self.register(name)
        return self._arrays[name]

    def read(self, name: str) -> None:
        self._get(name).reads += 1

    def write(self, name: str) -> None:
        self._get(name).writes += 1

    def rmw(self, name: str) -> None:
        acc = self._get(name)
        acc.reads += 1
        acc.writes += 1
        acc.rmw += 1

    def reset_and_report(self) -> dict[str, ArrayAccess]:
        """Counts since the previous call, then zero them. Call once per packet."""
        report = {}
        for name, acc in self._arrays.items():
            report[name] = ArrayAccess(acc.reads, acc.writes, acc.rmw)
            self.max_rmw[name] = max(self.max_rmw[name], acc.rmw)
            self.max_accesses[name] = max(self.max_accesses[name], acc.accesses())
            acc.reads = acc.writes = acc.rmw = 0
        return report

    def peak_rmw(self) -> int:
        return max(self.max_rmw.values(), default=0)


def audit_reset_and_report(audit: AccessAudit) -> dict[str, ArrayAccess]:
    return audit.reset_and_report()


def over_budget(report: dict[str, ArrayAccess], rmw_budget: int = 1) -> list[str]:
    """Arrays whose rmw count in ``report`` exceeds the per-packet budget."""
    return sorted(name for name, acc in report.items() if acc.rmw > rmw_budget)


class SketchStage:
    """One width-``w`` counter array with its hash function.

    Counters saturate at ``clamp_max`` on increment and floor at 0 on
    decrement. With ``split=True`` the array is treated as two half-tables
    (even and odd cells), audited separately as ``<name>.h0`` / ``<name>.h1``.
    """

    def __init__(self, width: int, index_of: Callable[[Hashable], int], clamp_max: int,
                 name: str = "stage0", audit: AccessAudit | None = None,
                 split: bool = False) -> None:
        if width < 1:
            raise ConfigError(f"width must be >= 1, got {width}", "width")
        if clamp_max < 1:
            raise ConfigError(f"clamp_max must be >= 1, got {clamp_max}", "n")
        if split and (width < 2 or width % 2):
            raise ConfigError(f"split stages need an even width, got {width}", "width")
        self.width = width
        self.index_of = index_of
        self.clamp_max = clamp_max
        self.name = name
        self.split = split
        self.audit = audit
        self.counters = [0] * width
        if audit is not None:
            for array in self.array_names():
                audit.register(array)

    @classmethod
    def from_family(cls, family: HashFamily, depth: int, width: int, clamp_max: int,
                    audit: AccessAudit | None = None, split: bool = False) -> SketchStage:
        return cls(width, family.indexer(depth, width), clamp_max, f"stage{depth}", audit, split)

    def array_names(self) -> list[str]:
        return [f"{self.name}.h0", f"{self.name}.h1"] if self.split else [self.name]

    def array_of(self, index: int) -> str:
        return f"{self.name}.h{index & 1}" if self.split else self.name

    def index(self, key: Hashable) -> int:
        return self.index_of(key)

    def __getitem__(self, index: int) -> int:
        return self.counters[index]

    def value(self, key: Hashable) -> int:
        return self.counters[self.index_of(key)]

    def increment(self, key: Hashable) -> int:
        return self.increment_at(self.index_of(key))

    def increment_at(self, index: int) -> int:
        value = self.counters[index] + 1
        if value > self.clamp_max:
            value = self.clamp_max
        self.counters[index] = value
        if self.audit is not None:
            self.audit.rmw(self.array_of(index))
        return value

    def decrement(self, index: int, amount: int = 1) -> int:
        value = self.counters[index] - amount
        if value < 0:
            value = 0
        self.counters[index] = value
        if self.audit is not None:
            self.audit.rmw(self.array_of(index))
        return value

    def reset_cell(self, index: int) -> None:
        self.counters[index] = 0
        if self.audit is not None:
            self.audit.write(self.array_of(index))

    def clear(self) -> None:
        # Bulk reset is a control-plane action and is not charged to any packet.
        self.counters = [0] * self.width


def load_factor(k: int, width: int) -> float:
    """Unique flows per cell. Exact for dyadic ratios, otherwise rounded to nearest double."""
    if width < 1 or k < 0:
        raise ConfigError("load factor needs width >= 1 and k >= 0")
    return k / width


def expected_collisions(k: int, width: int) -> float:
    """Expected extra occupants per cell when ``k`` flows hash uniformly into ``width`` cells."""
    if width < 1 or k < 0:
        raise ConfigError("expected collisions needs width >= 1 and k >= 0")
    return k / width - 1.0 + (1.0 - 1.0 / width) ** k


class Decision(NamedTuple):
    """Outcome of pushing one packet through a sketch.

    ``touched`` lists the cell incremented in each stage the packet reached,
    in stage order; its length is the number of stages touched.
    """

    estimate: int
    is_heavy: bool
    touched: tuple[int, ...]
