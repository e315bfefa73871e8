"""Pure-Python batch kernels: the reference classes driven over table indexers.

Signatures and results match the compiled ``_ckernels`` module.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .count_min import CountMinSketch
from .gated import GatedSketch
from .hybrid import HybridWindow
from .oracle import OracleWindow
from .sketch_core import AccessAudit
from .windows import FlushBaseline, RingWindow, SequentialFlushing, SequentialWindow

K_CM, K_GATED = 0, 1
W_NONE, W_FLUSH, W_RING, W_SEQ, W_SEQFLUSH = range(5)


def run_oracle(index, n_flows, n_window, th_abs, inclusive):
    oracle = OracleWindow(n_window, th_abs, inclusive)
    out = [oracle.step(f) for f in np.asarray(index).tolist()]
    true_count = np.array([r.true_count for r in out], dtype=np.int32)
    heavy = np.array([r.is_heavy_true for r in out], dtype=np.uint8)
    return true_count, heavy


def run_sketch(index, tables, widths, thresholds, sketch_kind, th_abs, window_kind,
               n_window, split, clamp):
    widths = [int(w) for w in widths]
    indexers = [row.__getitem__ for row in np.asarray(tables).tolist()]
    audit = AccessAudit()
    if sketch_kind == K_CM:
        sketch = CountMinSketch(len(widths), widths[0], clamp, th_abs, audit=audit,
                                split=split, indexers=indexers)
    else:
        sketch = GatedSketch(widths, [int(t) for t in thresholds], clamp, audit=audit,
                             split=split, indexers=indexers)
    variant = "split" if split else "unified"
    if window_kind == W_NONE:
        window = FlushBaseline(sketch, None)
    elif window_kind == W_FLUSH:
        window = FlushBaseline(sketch, n_window)
    elif window_kind == W_RING:
        window = RingWindow(sketch, n_window)
    elif window_kind == W_SEQ:
        window = SequentialWindow(sketch, variant)
    else:
        window = SequentialFlushing(sketch, n_window, variant)

    P = len(index)
    estimate = np.empty(P, dtype=np.int32)
    heavy = np.empty(P, dtype=np.uint8)
    for p, f in enumerate(np.asarray(index).tolist()):
        decision = window.step(f)
        estimate[p] = decision.estimate
        heavy[p] = decision.is_heavy
        audit.reset_and_report()
    arrays = [name for stage in sketch.stages for name in stage.array_names()]
    return estimate, heavy, np.array([audit.max_rmw[a] for a in arrays], dtype=np.int32)


def run_hybrid(index, table1, table3, width1, width3, n_window, m, batch_size, width2,
               pure_ring, batch_clamp):
    audit = AccessAudit()
    # Any fraction that floors to batch_size * m reproduces the same batch size.
    th_fraction = Fraction(batch_size * m, n_window)
    window = HybridWindow(n_window, m, th_fraction, width1, width3, width2=width2,
                          pure_ring=pure_ring, audit=audit,
                          indexers=(np.asarray(table1).tolist().__getitem__,
                                    np.asarray(table3).tolist().__getitem__))
    window.batch.clamp_max = batch_clamp
    P = len(index)
    estimate = np.empty(P, dtype=np.int32)
    heavy = np.empty(P, dtype=np.uint8)
    batches = np.empty(P, dtype=np.int32)
    for p, f in enumerate(np.asarray(index).tolist()):
        decision = window.step(f)
        estimate[p], heavy[p], batches[p] = decision
        audit.reset_and_report()
    return estimate, heavy, batches, np.array(
        [audit.max_rmw["initial"], audit.max_rmw["batch"]], dtype=np.int32)
