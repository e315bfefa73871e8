"""Gated sketch: a packet only reaches stage ``i+1`` once its stage-``i`` counter
exceeds ``th_i``; it is heavy when every gate, including the last, is passed."""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, Hashable, Iterable, Sequence

import numpy as np

from .count_min import BeforeIncrement, build_stages
from .errors import ConfigError
from .flow_model import HashFamily
from .memory_model import memory_gated
from .sketch_core import AccessAudit, Decision

if TYPE_CHECKING:
    from .traces import Trace


class GatedSketch:
    """Stages may have different widths; ``sum(thresholds)`` is the heavy-hitter threshold.

    The reported estimate is the stage-0 counter, the only stage every packet updates.
    """

    kind = "gated"

    def __init__(self, widths: Sequence[int], thresholds: Sequence[int], n_window: int,
                 th_abs: int | None = None, family: HashFamily | None = None,
                 audit: AccessAudit | None = None, split: bool = False,
                 indexers: Sequence[Callable[[Hashable], int]] | None = None,
                 track_stage_flows: bool = False) -> None:
        if not widths:
            raise ConfigError("gated sketch needs at least one stage", "widths")
        if len(widths) != len(thresholds):
            raise ConfigError(
                f"{len(widths)} widths but {len(thresholds)} thresholds", "thresholds")
        if any(t < 0 for t in thresholds):
            raise ConfigError("gate thresholds must be non-negative", "thresholds")
        total = sum(thresholds)
        if th_abs is not None and total != th_abs:
            raise ConfigError(
                f"gate thresholds sum to {total}, heavy-hitter threshold is {th_abs}",
                "thresholds")
        if not 0 < total <= n_window:
            raise ConfigError(f"need 0 < sum(thresholds) <= N, got {total}", "thresholds")
        self.depth = len(widths)
        self.thresholds = list(thresholds)
        self.th_abs = total
        self.n_window = n_window
        self.stages = build_stages(list(widths), n_window, family, audit, split, indexers)
        self.stage_flows: list[set] | None = (
            [set() for _ in widths] if track_stage_flows else None)

    @property
    def widths(self) -> list[int]:
        return [s.width for s in self.stages]

    def process(self, key: Hashable, before_increment: BeforeIncrement | None = None) -> Decision:
        touched = []
        estimate = 0
        for i, stage in enumerate(self.stages):
            cell = stage.index(key)
            if before_increment is not None:
                before_increment(i, cell)
            value = stage.increment_at(cell)
            touched.append(cell)
            if self.stage_flows is not None:
                self.stage_flows[i].add(key)
            if i == 0:
                estimate = value
            if value <= self.thresholds[i]:
                return Decision(estimate, False, tuple(touched))
        return Decision(estimate, True, tuple(touched))

    def memory_bits(self) -> int:
        return memory_gated(self.widths, self.thresholds, self.n_window)


def gated_process(sketch: GatedSketch, key: Hashable) -> Decision:
    return sketch.process(key)


def gated_memory(widths: Sequence[int], thresholds: Sequence[int], n_window: int) -> int:
    return memory_gated(widths, thresholds, n_window)


def stage2_unique_flows(trace: Iterable[Hashable] | Trace, width0: int, th0: int,
                        n_window: int, family: HashFamily | None = None) -> float:
    """Mean number of distinct flows per ``N``-packet block whose stage-0 gate opens.

    The stream is cut into consecutive blocks of ``N`` packets (a trailing
    partial block is ignored) and a fresh stage-0 table is used per block.
    """
    if width0 < 1 or n_window < 1 or th0 < 0:
        raise ConfigError("width0 and N must be positive, th0 non-negative")
    family = family or HashFamily.default(1)
    index, cells = _indexed(trace, family, width0)
    blocks = len(index) // n_window
    if blocks == 0:
        raise ConfigError(f"trace has {len(index)} packets, fewer than N={n_window}", "n")
    clamp = n_window
    passed_per_block = []
    for b in range(blocks):
        counters = [0] * width0
        passed = set()
        for f in index[b * n_window:(b + 1) * n_window]:
            c = cells[f]
            v = counters[c] + 1
            if v > clamp:
                v = clamp
            counters[c] = v
            if v > th0:
                passed.add(f)
        passed_per_block.append(len(passed))
    return float(np.mean(passed_per_block))


def _indexed(trace, family: HashFamily, width: int) -> tuple[list[int], list[int]]:
    """Dense flow indices and their stage-0 cells, from a Trace or any key iterable."""
    from .traces import Trace

    if isinstance(trace, Trace):
        return trace.index.tolist(), family.table(0, trace.flows, width).tolist()
    ids: dict = {}
    index = []
    cells = []
    index_of = family.indexer(0, width)
    for key in trace:
        flow = key.flow if hasattr(key, "flow") else key
        if flow not in ids:
            ids[flow] = len(ids)
            cells.append(index_of(flow))
        index.append(ids[flow])
    return index, cells
