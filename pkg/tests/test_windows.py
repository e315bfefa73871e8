from collections import Counter, deque

import pytest

from hhsketch.count_min import CountMinSketch
from hhsketch.errors import ConfigError
from hhsketch.gated import GatedSketch
from hhsketch.memory_model import memory_flush_seq, memory_ring, memory_seq
from hhsketch.oracle import OracleWindow
from hhsketch.sketch_core import AccessAudit
from hhsketch.traces import TraceSpec, generate
from hhsketch.windows import FlushBaseline, RingWindow, SequentialFlushing, SequentialWindow

from conftest import lone_index


def lone_cm(width=16, n=100, th=3, depth=1, audit=None, split=False):
    return CountMinSketch(depth, width, n, th, indexers=[lone_index(width)] * depth,
                          audit=audit, split=split)


# flush baseline

def test_flush_example():
    w = FlushBaseline(lone_cm(n=4, th=3), 4)
    flags = [w.step(0).is_heavy for _ in range(5)]
    assert flags == [False, False, False, True, False]


def test_flush_none_is_plain_sketch(small_zipf):
    a = FlushBaseline(CountMinSketch(2, 32, 10**6, 9), None)
    b = CountMinSketch(2, 32, 10**6, 9)
    assert all(a.step(k) == b.process(k) for k in small_zipf.keys())


def test_flush_counter_sum_bounded(small_zipf):
    w = FlushBaseline(CountMinSketch(1, 32, 10**6, 9), 700)
    for k in small_zipf.keys():
        w.step(k)
        assert sum(w.sketch.stages[0].counters) <= w.packets_since_reset


def test_flush_first_estimate_after_reset_is_one(small_zipf):
    w = FlushBaseline(CountMinSketch(3, 64, 10**6, 9), 250)
    for i, k in enumerate(small_zipf.keys()):
        d = w.step(k)
        if i % 250 == 0:
            assert d.estimate == 1


# ring

def test_ring_example():
    ring = RingWindow(lone_cm(width=16, n=4), 4)
    for key in [0, 0, 0, 1, 0]:
        ring.step(key)
    assert ring.sketch.stages[0].counters[0] == 3
    assert [e[0] for e in ring.contents()] == [0, 0, 1, 0]


def test_ring_distinct_flows_never_exceed_one():
    ring = RingWindow(CountMinSketch(1, 4096, 50, 3, indexers=[lone_index(4096)]), 50)
    for i in range(500):
        ring.step(i % 50)
        assert max(ring.sketch.stages[0].counters) <= 1


@pytest.mark.parametrize("make", [
    lambda n: CountMinSketch(2, 32, n, 10),
    lambda n: GatedSketch([32, 16], [4, 6], n),
])
def test_ring_counters_equal_brute_force(make):
    trace = generate(TraceSpec("zipf", packets=10_000, universe=500, seed=2))
    n = 300
    ring = RingWindow(make(n), n)
    window = deque()
    for key in trace.keys():
        d = ring.step(key)
        window.append(d.touched)
        if len(window) > n:
            window.popleft()
        for i, stage in enumerate(ring.sketch.stages):
            expect = Counter(t[i] for t in window if len(t) > i)
            assert stage.counters == [expect.get(c, 0) for c in range(stage.width)]
    assert len(ring.contents()) == n


def test_ring_modes_agree(small_zipf):
    a = RingWindow(GatedSketch([32, 16], [3, 7], 400), 400)
    b = RingWindow(GatedSketch([32, 16], [3, 7], 400), 400, mode="flow_ids")
    for k in small_zipf.keys():
        assert a.step(k) == b.step(k)


def test_ring_partial_fill_contents():
    ring = RingWindow(lone_cm(n=10), 10)
    for k in range(4):
        ring.step(k)
    assert len(ring.contents()) == 4 and ring.oldest_index == 4


@pytest.mark.parametrize("seed", range(20))
def test_ring_never_misses(seed):
    trace = generate(TraceSpec("zipf", packets=6000, universe=800, seed=100 + seed))
    n, th = 1000, 5
    ring = RingWindow(CountMinSketch(1 + seed % 3, 64, n, th), n)
    oracle = OracleWindow(n, th)
    for k in trace.keys():
        detected, truth = ring.step(k).is_heavy, oracle.step(k).is_heavy_true
        assert detected or not truth


def test_ring_audit_two_rmw_per_counter_array(small_zipf):
    audit = AccessAudit()
    ring = RingWindow(CountMinSketch(3, 64, 200, 9, audit=audit), 200, audit=audit)
    for k in small_zipf.keys()[:1000]:
        ring.step(k)
        audit.reset_and_report()
    assert all(audit.max_rmw[f"stage{i}"] == 2 for i in range(3))


# sequential

def test_sequential_example():
    w = SequentialWindow(CountMinSketch(1, 4, 100, 3, indexers=[lambda k: 2]))
    w.step("x")
    assert w.sketch.stages[0].counters == [0, 0, 1, 0] and w.seq == [1]


def test_sequential_coinciding_cell_gains_one():
    w = SequentialWindow(CountMinSketch(1, 4, 100, 3, indexers=[lambda k: 0]))
    assert w.step("x").estimate == 1


def test_sequential_unified_decrements_each_cell_in_turn():
    w = SequentialWindow(lone_cm(width=4, n=100, th=50))
    w.sketch.stages[0].counters = [5, 5, 5, 5]
    for _ in range(4):
        w.step(9)  # cell 1 each time
    assert w.sketch.stages[0].counters == [4, 8, 4, 4]


def test_sequential_split_rmw_at_most_one(small_zipf):
    audit = AccessAudit()
    cm = CountMinSketch(3, 64, 1000, 9, audit=audit, split=True)
    w = SequentialWindow(cm, "split")
    for k in small_zipf.keys():
        w.step(k)
        rep = audit.reset_and_report()
        assert max(a.rmw for a in rep.values()) <= 1
    assert audit.peak_rmw() == 1


def test_sequential_split_decrements_opposite_half():
    w = SequentialWindow(lone_cm(width=8, n=100, th=50, split=True), "split")
    w.sketch.stages[0].counters = [3] * 8
    w.step(2)  # even half incremented, odd cell 1 decremented
    assert w.sketch.stages[0].counters == [3, 2, 4, 3, 3, 3, 3, 3]
    w.step(3)  # odd half incremented, even cell 0 decremented
    assert w.sketch.stages[0].counters == [2, 2, 4, 4, 3, 3, 3, 3]


def test_variant_must_match_stage_layout():
    with pytest.raises(ConfigError):
        SequentialWindow(lone_cm(width=8), "split")
    with pytest.raises(ConfigError):
        SequentialWindow(lone_cm(width=8, split=True), "unified")
    with pytest.raises(ConfigError):
        SequentialWindow(lone_cm(width=8), "diagonal")


# sequential flushing

def test_seqflush_schedule_example():
    w = SequentialFlushing(lone_cm(width=4, n=16), 16, record_resets=True)
    for _ in range(16):
        w.step(0)
    assert w.reset_log == [(4, 0, 0), (8, 0, 1), (12, 0, 2), (16, 0, 3)]


def test_seqflush_stride_one():
    w = SequentialFlushing(lone_cm(width=8, n=8), 8, record_resets=True)
    for _ in range(8):
        w.step(1)
    assert [c for _, _, c in w.reset_log] == list(range(8))


def test_seqflush_needs_width_dividing_n():
    with pytest.raises(ConfigError):
        SequentialFlushing(lone_cm(width=6, n=16), 16)


def test_seqflush_heavy_flow_needs_th_packets_after_flush():
    n, th = 64, 5
    w = SequentialFlushing(lone_cm(width=8, n=n, th=th), n)
    flags = [w.step(0).is_heavy for _ in range(3 * n)]
    # cell 0 is reset after packets 8, 72, 136; each time th more packets are
    # needed before the estimate exceeds th again
    for reset_at in (8, 72, 136):
        after = flags[reset_at:reset_at + th + 1]
        assert after == [False] * th + [True]


def test_seqflush_split_rmw_at_most_one(small_zipf):
    audit = AccessAudit()
    cm = CountMinSketch(2, 64, 1024, 9, audit=audit, split=True)
    w = SequentialFlushing(cm, 1024, "split")
    for k in small_zipf.keys():
        w.step(k)
        rep = audit.reset_and_report()
        assert max(a.accesses() for a in rep.values()) <= 1


# memory formulas

def test_window_memory_formulas():
    assert memory_ring(2**20, [4096]) == 2**20 * 12
    assert memory_ring(2**20, [4096]) // 8 == 1_572_864
    assert memory_ring(1, [2]) == 1
    assert memory_seq([4096, 4096]) == 48
    assert memory_seq([4096, 4096], split=False) == 24
    assert memory_flush_seq([4096] * 3) == 36
    assert memory_flush_seq([4096] * 3, split=True) == 72


def test_window_memory_bits_methods():
    cm = CountMinSketch(3, 4096, 65536, 65)
    assert RingWindow(cm, 65536).memory_bits() == 65536 * 36
    assert SequentialWindow(cm).memory_bits() == 36
    assert SequentialFlushing(cm, 65536).memory_bits() == 36
