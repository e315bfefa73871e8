"""Count-Min detector: ``d`` equal-width stages, minimum-of-counters estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

from .errors import ConfigError
from .flow_model import HashFamily
from .memory_model import absolute_threshold, memory_count_min
from .sketch_core import AccessAudit, Decision, SketchStage

BeforeIncrement = Callable[[int, int], None]


def build_stages(widths: Sequence[int], n_window: int, family: HashFamily | None,
                 audit: AccessAudit | None, split: bool,
                 indexers: Sequence[Callable[[Hashable], int]] | None) -> list[SketchStage]:
    if indexers is not None and len(indexers) != len(widths):
        raise ConfigError(f"{len(indexers)} indexers for {len(widths)} stages", "depth")
    if family is None and indexers is None:
        family = HashFamily.default(len(widths))
    stages = []
    for i, width in enumerate(widths):
        index_of = indexers[i] if indexers is not None else family.indexer(i, width)
        stages.append(SketchStage(width, index_of, n_window, f"stage{i}", audit, split))
    return stages


class CountMinSketch:
    """Stage ``i`` hashes with seed ``i``; a packet is heavy when the minimum of
    its post-increment counters strictly exceeds ``th_abs``."""

    kind = "count-min"

    def __init__(self, depth: int, width: int, n_window: int, th_abs: int,
                 family: HashFamily | None = None, audit: AccessAudit | None = None,
                 split: bool = False,
                 indexers: Sequence[Callable[[Hashable], int]] | None = None) -> None:
        if depth < 1:
            raise ConfigError(f"depth must be >= 1, got {depth}", "depth")
        if not 0 < th_abs <= n_window:
            raise ConfigError(f"need 0 < th_abs <= N, got th_abs={th_abs}, N={n_window}", "th")
        self.depth = depth
        self.width = width
        self.n_window = n_window
        self.th_abs = th_abs
        self.stages = build_stages([width] * depth, n_window, family, audit, split, indexers)

    @classmethod
    def for_fraction(cls, depth: int, width: int, n_window: int, th_fraction: float,
                     **kwargs) -> CountMinSketch:
        return cls(depth, width, n_window, absolute_threshold(th_fraction, n_window), **kwargs)

    @property
    def widths(self) -> list[int]:
        return [s.width for s in self.stages]

    def process(self, key: Hashable, before_increment: BeforeIncrement | None = None) -> Decision:
        touched = []
        estimate = None
        for i, stage in enumerate(self.stages):
            cell = stage.index(key)
            if before_increment is not None:
                before_increment(i, cell)
            value = stage.increment_at(cell)
            touched.append(cell)
            if estimate is None or value < estimate:
                estimate = value
        return Decision(estimate, estimate > self.th_abs, tuple(touched))

    def memory_bits(self) -> int:
        return memory_count_min(self.depth, self.width, self.n_window)


def cm_process(sketch: CountMinSketch, key: Hashable) -> Decision:
    return sketch.process(key)


@dataclass(frozen=True)
class CountMinParams:
    epsilon: float
    sigma: float

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}", "epsilon")
        if not 0 < self.sigma < 1:
            raise ConfigError(f"sigma must be in (0, 1), got {self.sigma}", "sigma")


def cm_width_for_epsilon(params: CountMinParams | float) -> int:
    """``ceil(e / epsilon)``."""
    epsilon = params.epsilon if isinstance(params, CountMinParams) else params
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}", "epsilon")
    return math.ceil(math.e / epsilon)


def cm_estimate_bound_holds(true_count: int, estimate: int, params: CountMinParams | float,
                            n_window: int) -> bool:
    epsilon = params.epsilon if isinstance(params, CountMinParams) else params
    return estimate <= true_count + epsilon * n_window
