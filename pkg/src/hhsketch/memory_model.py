"""Theoretical register footprints and the hardware budget they are checked against.

All formulas count data-plane register bits only and round every ``log2`` up
to whole bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ConfigError


@dataclass(frozen=True)
class HardwareBudget:
    stage_bytes: float = 1.4 * 2**20
    rmw_per_array: int = 1
    # Line-rate budget for 64 B packets on 100GE; reported, never enforced.
    packet_budget_ns: float = 6.88

    @property
    def stage_bits(self) -> float:
        return self.stage_bytes * 8


DEFAULT_BUDGET = HardwareBudget()


def as_fraction(x: float | int | str | Fraction) -> Fraction:
    """Exact rational for a decimal literal (0.001 -> 1/1000, not the binary double)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(x) if isinstance(x, float) else str(x))


def ceil_log2(x: int | Fraction) -> int:
    """Smallest ``k >= 0`` with ``2**k >= x``; ``x`` must be at least 1."""
    x = Fraction(x)
    if x < 1:
        raise ConfigError(f"log2 argument must be >= 1, got {x}")
    k = max(math.ceil(x).bit_length() - 1, 0)
    while (1 << k) < x:
        k += 1
    return k


def absolute_threshold(th_fraction: float | Fraction, n_window: int) -> int:
    """Heavy-hitter threshold in packets: ``floor(th_fraction * N)``."""
    th_abs = math.floor(as_fraction(th_fraction) * n_window)
    if not 0 < th_abs <= n_window:
        raise ConfigError(
            f"th={th_fraction} with N={n_window} gives an absolute threshold of {th_abs}; "
            "need 1 <= th*N <= N", "th")
    return th_abs


def memory_count_min(depth: int, width: int, n_window: int) -> int:
    if depth < 1 or width < 1 or n_window < 2:
        raise ConfigError("count-min memory needs depth, width >= 1 and N >= 2")
    return depth * width * ceil_log2(n_window)


def memory_gated(widths: Sequence[int], thresholds: Sequence[int], n_window: int) -> int:
    """Stage ``i`` counters only need to reach ``N`` minus the shallower thresholds."""
    if len(widths) != len(thresholds):
        raise ConfigError(
            f"{len(widths)} widths but {len(thresholds)} thresholds", "thresholds")
    bits = 0
    consumed = 0
    for width, th in zip(widths, thresholds):
        span = n_window - consumed
        if span <= 1:
            raise ConfigError(
                f"N minus shallower thresholds is {span}; counters need at least 1 bit",
                "thresholds")
        bits += width * ceil_log2(span)
        consumed += th
    return bits


def _index_bits(widths: Sequence[int]) -> int:
    if not widths:
        raise ConfigError("widths must be non-empty", "widths")
    return sum(ceil_log2(w) for w in widths)


def memory_ring(n_window: int, widths: Sequence[int]) -> int:
    """Ring of per-depth hashed indices, one entry per packet in the window."""
    return n_window * _index_bits(widths)


def memory_seq(widths: Sequence[int], split: bool = True) -> int:
    """Sequential-window indices; the split layout keeps one per half-table."""
    return (2 if split else 1) * _index_bits(widths)


def memory_flush_seq(widths: Sequence[int], split: bool = False) -> int:
    return (2 if split else 1) * _index_bits(widths)


def hybrid_structures(n_window: int, m: int, th_fraction: float | Fraction, width1: int,
                      width2: int, width3: int, pure_ring: bool = False) -> dict[str, int]:
    """Per-structure bits of the hybrid window (initial sketch, bit array, FIFO, batch sketch).

    With the pure ring, each initial cell also keeps a count of its packets
    that are still in the ring but were already folded into a batch.
    """
    th = as_fraction(th_fraction)
    if pure_ring and n_window % m:
        raise ConfigError(f"pure ring needs m | N, got N={n_window}, m={m}", "m")
    parts = {
        "initial_sketch": width1 * ceil_log2(Fraction(n_window, m)),
        "bit_array": n_window,
        "flowid_fifo": width2 * ceil_log2(width3),
        "batch_sketch": width3 * ceil_log2(m / th),
    }
    if pure_ring:
        parts["pure_ring"] = memory_ring(n_window // m, [width1])
        parts["consumed"] = width1 * ceil_log2(n_window // m + 1)
    return parts


def memory_hybrid(n_window: int, m: int, th_fraction: float | Fraction, width1: int,
                  width2: int, width3: int, pure_ring: bool = False) -> int:
    return sum(hybrid_structures(n_window, m, th_fraction, width1, width2, width3,
                                 pure_ring).values())


def feasible(structures: Mapping[str, int], budget: HardwareBudget = DEFAULT_BUDGET) -> bool:
    """Every single structure must fit into one pipeline stage."""
    return all(bits <= budget.stage_bits for bits in structures.values())
