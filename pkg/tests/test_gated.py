import pytest
from hypothesis import given, settings, strategies as st

from hhsketch.count_min import CountMinSketch
from hhsketch.errors import ConfigError
from hhsketch.gated import GatedSketch, gated_memory, gated_process, stage2_unique_flows
from hhsketch.sketch_core import AccessAudit
from hhsketch.traces import TraceSpec, generate, window_stats

from conftest import flow, lone_index


def test_depth_one_matches_single_stage_count_min(small_zipf):
    g = GatedSketch([64], [20], 10**6)
    cm = CountMinSketch(1, 64, 10**6, 20)
    for key in small_zipf.keys():
        a, b = g.process(key), cm.process(key)
        assert a.is_heavy == b.is_heavy and a.estimate == b.estimate


def test_zero_first_gate_sends_everything_on(small_zipf):
    g = GatedSketch([64, 32], [0, 30], 10**6)
    assert all(len(g.process(k).touched) == 2 for k in small_zipf.keys()[:500])


def test_lone_flow_flagged_on_packet_66():
    g = GatedSketch([128, 64], [60, 5], 65536, th_abs=65,
                    indexers=[lone_index(128), lone_index(64)])
    decisions = [gated_process(g, 3) for _ in range(70)]
    touched = [len(d.touched) for d in decisions]
    assert touched.index(2) == 60  # stage-0 counter 61 opens the gate
    assert [d.is_heavy for d in decisions].index(True) == 65


def test_touched_range_and_heavy_needs_all_stages(small_zipf):
    g = GatedSketch([64, 32, 16], [5, 5, 10], 10**6)
    for key in small_zipf.keys():
        d = g.process(key)
        assert 1 <= len(d.touched) <= 3
        if d.is_heavy:
            assert len(d.touched) == 3


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=3, max_size=3), st.integers(0, 2),
       st.integers(1, 6))
def test_raising_a_gate_never_reaches_deeper(ths, i, bump):
    keys = generate(TraceSpec("zipf", packets=1500, universe=120, seed=4)).keys()
    ths = [t + 1 for t in ths]
    raised = list(ths)
    raised[i] += bump
    lo = GatedSketch([32, 16, 8], ths, 10**6)
    hi = GatedSketch([32, 16, 8], raised, 10**6)
    for key in keys:
        assert len(hi.process(key).touched) <= len(lo.process(key).touched)


def test_rmw_equals_stages_touched(small_zipf):
    audit = AccessAudit()
    g = GatedSketch([64, 32], [3, 7], 10**6, audit=audit)
    for key in small_zipf.keys()[:1000]:
        d = g.process(key)
        assert sum(a.rmw for a in audit.reset_and_report().values()) == len(d.touched)


def test_threshold_sum_must_match():
    with pytest.raises(ConfigError):
        GatedSketch([64, 32], [10, 10], 65536, th_abs=65)
    with pytest.raises(ConfigError):
        GatedSketch([64, 32], [10], 65536)
    with pytest.raises(ConfigError):
        GatedSketch([64], [-1], 65536)


def test_stage_flow_tracking():
    g = GatedSketch([8, 8], [1, 1], 100, indexers=[lone_index(8)] * 2, track_stage_flows=True)
    for key in [1, 2, 1, 3]:
        g.process(key)
    assert g.stage_flows[0] == {1, 2, 3} and g.stage_flows[1] == {1}


@pytest.mark.parametrize("widths,ths,n,bits", [
    ([4096], [65], 65536, 65536),
    ([4096, 2048], [60, 5], 65536, 98304),
    ([16, 16], [4, 4], 12, 16 * 4 + 16 * 3),  # ceil(log2 12) = 4, ceil(log2 8) = 3
])
def test_gated_memory(widths, ths, n, bits):
    assert gated_memory(widths, ths, n) == bits


def test_gated_memory_degenerate():
    with pytest.raises(ConfigError):
        gated_memory([8, 8], [9, 1], 10)
    with pytest.raises(ConfigError):
        gated_memory([8, 8], [1], 10)


def test_stage2_flows_everything_at_zero_gate(small_zipf):
    n = 1000
    _, means = window_stats(small_zipf, n)
    assert len(small_zipf) % n == 0
    assert stage2_unique_flows(small_zipf, 64, 0, n) == means["mean_unique_flows"]


def test_stage2_flows_nothing_when_gate_at_n(small_zipf):
    assert stage2_unique_flows(small_zipf, 1, 1000, 1000) == 0.0


def test_stage2_flows_non_increasing():
    trace = generate(TraceSpec("zipf", packets=4 * 65536, universe=100_000, seed=7))
    values = [stage2_unique_flows(trace, 4096, th0, 65536) for th0 in (0, 10, 20, 40, 60)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[0] > 5 * values[-1]


def test_stage2_flows_key_iterable_matches_trace(small_zipf):
    assert (stage2_unique_flows(small_zipf.keys(), 32, 3, 1000)
            == stage2_unique_flows(small_zipf, 32, 3, 1000))


def test_stage2_flows_short_trace():
    with pytest.raises(ConfigError):
        stage2_unique_flows([flow(1), flow(2), flow(3)], 8, 0, 4)
