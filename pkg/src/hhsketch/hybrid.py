"""Hybrid window: count per-flow batches of ``B = th_abs / m`` packets and expire
each batch exactly ``N`` packets after it completed.

Structures, in processing order:

* ``initial`` stage (width_1) counts packets modulo ``B``;
* ``bit_array`` (``N`` bits) marks the stream positions at which a batch completed;
* ``flowid`` FIFO (width_2 rows) holds the flows of live batches, oldest at ``last``;
* ``batch`` stage (width_3) counts live batches per flow;
* optional pure ring of ``N/m`` entries that drains the initial stage.

The pure ring only removes packets still counted in the initial stage. A
completed batch zeroes its cell, yet its ``B`` packets stay in the ring; a
per-cell ``consumed`` count absorbs their evictions instead. Consumed
packets are always the oldest of their cell, so the first evictions after
a completion are exactly theirs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Hashable, NamedTuple, Sequence

from .errors import ConfigError, FifoOverflowError
from .flow_model import HashFamily
from .memory_model import absolute_threshold, as_fraction, hybrid_structures, memory_hybrid
from .sketch_core import AccessAudit, SketchStage


class HybridDecision(NamedTuple):
    estimate: int
    is_heavy: bool
    batches: int


def hybrid_batch_size(th_abs: int, m: int) -> int:
    """``th_abs / m``; rejected unless it divides exactly (so ``m`` batches equal ``th_abs``)."""
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}", "m")
    if th_abs % m:
        raise ConfigError(
            f"absolute threshold {th_abs} is not a multiple of m={m}", "m")
    return th_abs // m


def hybrid_width2_bound(n_window: int, width1: int, m: int, th_fraction: float) -> int:
    """FIFO rows needed so that two consecutive windows can never overflow it."""
    th = as_fraction(th_fraction)
    extra = Fraction(2 * n_window - width1) * m / (n_window * th)
    return width1 + max(0, math.ceil(extra))


def hybrid_memory(n_window: int, m: int, th_fraction: float, width1: int, width2: int,
                  width3: int, pure_ring: bool = False) -> int:
    """Total bits; the pure ring adds ``memory_ring(N/m, [width1])``."""
    return memory_hybrid(n_window, m, th_fraction, width1, width2, width3, pure_ring)


class HybridWindow:
    """Single-stage hybrid detector. Heavy when the flow's live batch count is >= ``m``.

    The frequency estimate is ``batches * B`` once a batch is live, otherwise
    the residual count in the initial stage.
    """

    def __init__(self, n_window: int, m: int, th_fraction: float, width1: int, width3: int,
                 width2: int | None = None, pure_ring: bool = False,
                 family: HashFamily | None = None, audit: AccessAudit | None = None,
                 indexers: Sequence[Callable[[Hashable], int]] | None = None,
                 record_batches: bool = False) -> None:
        self.n_window = n_window
        self.m = m
        self.th_fraction = th_fraction
        self.th_abs = absolute_threshold(th_fraction, n_window)
        self.batch_size = hybrid_batch_size(self.th_abs, m)
        if pure_ring and n_window % m:
            raise ConfigError(f"pure ring needs m | N, got N={n_window}, m={m}", "m")
        self.width2 = width2 if width2 is not None else hybrid_width2_bound(
            n_window, width1, m, th_fraction)
        if self.width2 < 1:
            raise ConfigError(f"width2 must be >= 1, got {self.width2}", "width2")

        if indexers is None:
            family = family or HashFamily.default(2)
            indexers = (family.indexer(0, width1), family.indexer(1, width3))
        batch_clamp = math.ceil(m / as_fraction(th_fraction))
        self.initial = SketchStage(width1, indexers[0], self.batch_size, "initial", audit)
        self.batch = SketchStage(width3, indexers[1], batch_clamp, "batch", audit)
        self.audit = audit
        if audit is not None:
            for name in ("bitarray", "flowid") + (("pure_ring",) if pure_ring else ()):
                audit.register(name)

        self.bit_array = bytearray(n_window)
        self.flowid: list = [None] * self.width2
        self.first = 0
        self.last = 0
        self.live = 0
        self.index1 = 0
        self.position = 0

        self.pure_ring = pure_ring
        self.ring_size = n_window // m
        self.ring: list[int | None] = [None] * self.ring_size if pure_ring else []
        self.consumed = [0] * width1 if pure_ring else []
        self.ring_index = 0

        self.batch_log: list[list[int]] | None = [] if record_batches else None
        self._pending: list[int] = []
        self._pending_head = 0

    def step(self, key: Hashable) -> HybridDecision:
        audit = self.audit
        # 1. expire the batch that completed exactly N packets ago
        if audit is not None:
            audit.rmw("bitarray")
        if self.bit_array[self.index1]:
            victim = self.flowid[self.last]
            self.flowid[self.last] = None
            if audit is not None:
                audit.rmw("flowid")
            self.last = (self.last + 1) % self.width2
            self.live -= 1
            self.bit_array[self.index1] = 0
            self.batch.decrement(self.batch.index(victim))
            if self.batch_log is not None:
                self.batch_log[self._pending[self._pending_head]][1] = self.position
                self._pending_head += 1

        # 2. pure ring drains the initial stage N/m packets later
        cell = self.initial.index(key)
        if self.pure_ring:
            old = self.ring[self.ring_index]
            if old is not None:
                if self.consumed[old]:
                    self.consumed[old] -= 1
                    if audit is not None:
                        audit.rmw("initial")
                else:
                    self.initial.decrement(old)
            self.ring[self.ring_index] = cell
            if audit is not None:
                audit.rmw("pure_ring")
            self.ring_index = (self.ring_index + 1) % self.ring_size

        # 3. count; a full batch resets the cell and moves into the batch stage
        counters = self.initial.counters
        value = counters[cell] + 1
        completed = value >= self.batch_size
        counters[cell] = 0 if completed else value
        if audit is not None:
            audit.rmw("initial")
        if completed:
            if self.live == self.width2:
                raise FifoOverflowError(
                    f"flow-id FIFO full ({self.width2} rows) at position {self.position}; "
                    f"size it with hybrid_width2_bound(), currently "
                    f"{hybrid_width2_bound(self.n_window, self.initial.width, self.m, self.th_fraction)}")
            batches = self.batch.increment(key)
            if self.pure_ring:
                self.consumed[cell] += self.batch_size
            self.bit_array[self.index1] = 1
            self.flowid[self.first] = key
            if audit is not None:
                audit.write("flowid")
            self.first = (self.first + 1) % self.width2
            self.live += 1
            if self.batch_log is not None:
                self._pending.append(len(self.batch_log))
                self.batch_log.append([self.position, -1])
        else:
            batches = self.batch.value(key)
            if audit is not None:
                audit.read("batch")

        # 4. decide
        estimate = batches * self.batch_size if batches >= 1 else counters[cell]
        # 5. advance
        self.index1 = (self.index1 + 1) % self.n_window
        self.position += 1
        return HybridDecision(estimate, batches >= self.m, batches)

    def structures(self) -> dict[str, int]:
        return hybrid_structures(self.n_window, self.m, self.th_fraction, self.initial.width,
                                 self.width2, self.batch.width, self.pure_ring)

    def memory_bits(self) -> int:
        return sum(self.structures().values())
