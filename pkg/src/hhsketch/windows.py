"""Window maintenance schemes that wrap a counting sketch.

Each window owns a sketch (:class:`CountMinSketch` or :class:`GatedSketch`)
and exposes ``step(key) -> Decision``. The sketch's stages must be built with
``split=True`` to use a split variant.
"""

from __future__ import annotations

from typing import Hashable

from .errors import ConfigError
from .memory_model import memory_flush_seq, memory_ring, memory_seq  # noqa: F401
from .sketch_core import AccessAudit, Decision

VARIANTS = ("unified", "split")


def _check_variant(sketch, variant: str) -> None:
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}", "variant")
    want = variant == "split"
    if any(stage.split != want for stage in sketch.stages):
        raise ConfigError(
            f"{variant} variant needs stages built with split={want}", "variant")


class FlushBaseline:
    """Zero every counter each ``N`` packets. ``n_window=None`` never resets."""

    def __init__(self, sketch, n_window: int | None) -> None:
        if n_window is not None and n_window < 1:
            raise ConfigError(f"N must be >= 1, got {n_window}", "n")
        self.sketch = sketch
        self.n_window = n_window
        self.packets_since_reset = 0

    def step(self, key: Hashable) -> Decision:
        if self.n_window is not None and self.packets_since_reset == self.n_window:
            for stage in self.sketch.stages:
                stage.clear()
            self.packets_since_reset = 0
        decision = self.sketch.process(key)
        self.packets_since_reset += 1
        return decision


class RingWindow:
    """Remember the last ``N`` packets and subtract each one as it leaves.

    In ``hashed_indices`` mode an entry is the tuple of cells the packet
    incremented (shorter than the depth when a gate stopped it); in
    ``flow_ids`` mode it is the key plus the number of stages it reached,
    and cells are re-hashed on eviction.
    """

    MODES = ("hashed_indices", "flow_ids")

    def __init__(self, sketch, n_window: int, mode: str = "hashed_indices",
                 audit: AccessAudit | None = None) -> None:
        if n_window < 1:
            raise ConfigError(f"N must be >= 1, got {n_window}", "n")
        if mode not in self.MODES:
            raise ConfigError(f"ring mode must be one of {self.MODES}, got {mode!r}", "mode")
        self.sketch = sketch
        self.n_window = n_window
        self.mode = mode
        self.ring: list = [None] * n_window
        self.oldest_index = 0
        self.filled = 0
        self.audit = audit
        self._ring_arrays = ([f"ring{i}" for i in range(len(sketch.stages))]
                             if mode == "hashed_indices" else ["ring_flowid"])
        if audit is not None:
            for name in self._ring_arrays:
                audit.register(name)

    def step(self, key: Hashable) -> Decision:
        entry = self.ring[self.oldest_index]
        if entry is not None:
            self._evict(entry)
        decision = self.sketch.process(key)
        if self.mode == "hashed_indices":
            self.ring[self.oldest_index] = decision.touched
        else:
            self.ring[self.oldest_index] = (key, len(decision.touched))
        if self.audit is not None:
            for name in self._ring_arrays:
                if entry is None:
                    self.audit.write(name)
                else:
                    self.audit.rmw(name)
        self.oldest_index = (self.oldest_index + 1) % self.n_window
        if self.filled < self.n_window:
            self.filled += 1
        return decision

    def _evict(self, entry) -> None:
        stages = self.sketch.stages
        if self.mode == "hashed_indices":
            for stage, cell in zip(stages, entry):
                stage.decrement(cell)
        else:
            key, reached = entry
            for stage in stages[:reached]:
                stage.decrement(stage.index(key))

    def contents(self) -> list:
        """Entries oldest first."""
        if self.filled < self.n_window:
            return self.ring[:self.filled]
        i = self.oldest_index
        return self.ring[i:] + self.ring[:i]

    def memory_bits(self) -> int:
        return memory_ring(self.n_window, self.sketch.widths)


class SequentialWindow:
    """Before each stage increment, subtract 1 (floored at 0) from the cell under a
    cycling per-stage index.

    The split variant keeps one index per half-table and decrements in the
    half opposite to the one the packet increments, so each half sees a
    single access per packet. Only stages a packet actually reaches are
    touched, which matters for gated sketches.
    """

    def __init__(self, sketch, variant: str = "unified") -> None:
        _check_variant(sketch, variant)
        self.sketch = sketch
        self.variant = variant
        self.seq = [0] * len(sketch.stages)
        self.seq_half = [[0, 0] for _ in sketch.stages]

    def _before_increment(self, i: int, cell: int) -> None:
        stage = self.sketch.stages[i]
        if self.variant == "unified":
            stage.decrement(self.seq[i])
            self.seq[i] = (self.seq[i] + 1) % stage.width
        else:
            other = 1 - (cell & 1)
            j = self.seq_half[i][other]
            stage.decrement(2 * j + other)
            self.seq_half[i][other] = (j + 1) % (stage.width // 2)

    def step(self, key: Hashable) -> Decision:
        return self.sketch.process(key, self._before_increment)

    def memory_bits(self) -> int:
        return memory_seq(self.sketch.widths, split=self.variant == "split")


class SequentialFlushing:
    """Zero one cell per stage every ``N / width`` packets, so the whole structure
    is cleared once per ``N`` packets.

    Resets happen after the packet's own update. In the split variant the
    reset goes to the half the packet did not increment, with one pointer per
    half; that keeps one access per half-table but the per-cell reset period
    is then only ``N`` on average.
    """

    def __init__(self, sketch, n_window: int, variant: str = "unified",
                 record_resets: bool = False) -> None:
        _check_variant(sketch, variant)
        for stage in sketch.stages:
            if n_window % stage.width:
                raise ConfigError(
                    f"sequential flushing needs width | N; width {stage.width} does not "
                    f"divide N={n_window}", "width")
        self.sketch = sketch
        self.n_window = n_window
        self.variant = variant
        self.stride = [n_window // stage.width for stage in sketch.stages]
        self.pointer = [0] * len(sketch.stages)
        self.pointer_half = [[0, 0] for _ in sketch.stages]
        self.packets = 0
        self.reset_log: list[tuple[int, int, int]] | None = [] if record_resets else None

    def step(self, key: Hashable) -> Decision:
        decision = self.sketch.process(key)
        self.packets += 1
        for i, stage in enumerate(self.sketch.stages):
            if self.packets % self.stride[i]:
                continue
            if self.variant == "unified":
                cell = self.pointer[i]
                self.pointer[i] = (cell + 1) % stage.width
            else:
                other = 1 - (stage.index(key) & 1)
                j = self.pointer_half[i][other]
                cell = 2 * j + other
                self.pointer_half[i][other] = (j + 1) % (stage.width // 2)
            stage.reset_cell(cell)
            if self.reset_log is not None:
                self.reset_log.append((self.packets, i, cell))
        return decision

    def memory_bits(self) -> int:
        return memory_flush_seq(self.sketch.widths, split=self.variant == "split")
