"""Exact sliding-window ground truth."""

from __future__ import annotations

from collections import deque
from typing import Hashable, NamedTuple


class OracleResult(NamedTuple):
    true_count: int
    is_heavy_true: bool


class OracleWindow:
    """Exact counts over the last ``N`` packets.

    A flow is heavy when its count strictly exceeds ``th_abs``;
    ``inclusive=True`` switches to ``>=`` for comparisons against the hybrid's
    batch rule.
    """

    def __init__(self, n_window: int, th_abs: int, inclusive: bool = False) -> None:
        if n_window < 1:
            raise ValueError(f"N must be >= 1, got {n_window}")
        self.n_window = n_window
        self.th_abs = th_abs
        self.inclusive = inclusive
        self.buffer: deque = deque()
        self.counts: dict[Hashable, int] = {}

    def step(self, key: Hashable) -> OracleResult:
        if len(self.buffer) == self.n_window:
            old = self.buffer.popleft()
            left = self.counts[old] - 1
            if left:
                self.counts[old] = left
            else:
                del self.counts[old]
        self.buffer.append(key)
        count = self.counts.get(key, 0) + 1
        self.counts[key] = count
        heavy = count >= self.th_abs if self.inclusive else count > self.th_abs
        return OracleResult(count, heavy)

    def count(self, key: Hashable) -> int:
        return self.counts.get(key, 0)


def oracle_step(oracle: OracleWindow, key: Hashable) -> OracleResult:
    return oracle.step(key)
