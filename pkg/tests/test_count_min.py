import math

import numpy as np
import pytest

from hhsketch.count_min import (CountMinParams, CountMinSketch, cm_estimate_bound_holds,
                                cm_process, cm_width_for_epsilon)
from hhsketch.errors import ConfigError
from hhsketch.flow_model import HashFamily
from hhsketch.oracle import OracleWindow
from hhsketch.sketch_core import AccessAudit
from hhsketch.traces import TraceSpec, generate
from hhsketch.windows import RingWindow

from conftest import flow, lone_index


def lone_cm(depth=1, width=1024, n=65536, th=65):
    return CountMinSketch(depth, width, n, th, indexers=[lone_index(width)] * depth)


def test_first_packet_estimate_one():
    d = cm_process(CountMinSketch(3, 4096, 65536, 65), flow(0))
    assert d.estimate == 1 and not d.is_heavy


def test_lone_flow_flagged_on_packet_66():
    cm = lone_cm()
    flags = [cm.process(7).is_heavy for _ in range(70)]
    assert flags.index(True) == 65  # 0-based: the 66th packet


def test_width_one_collision_overestimates():
    cm = CountMinSketch(1, 1, 100, 5)
    cm.process(flow(1))
    assert cm.process(flow(2)).estimate == 2


def test_estimate_is_min_of_touched_counters(small_zipf):
    cm = CountMinSketch(3, 64, 10**6, 100)
    for key in small_zipf.keys()[:2000]:
        d = cm.process(key)
        values = [s.counters[c] for s, c in zip(cm.stages, d.touched)]
        assert d.estimate == min(values)
        assert d.is_heavy == (d.estimate > 100)


def test_exactly_depth_rmw_per_packet():
    audit = AccessAudit()
    cm = CountMinSketch(4, 32, 100, 5, audit=audit)
    for i in range(50):
        cm.process(flow(i))
        rep = audit.reset_and_report()
        assert sum(a.rmw for a in rep.values()) == 4


def test_stage_i_uses_seed_i():
    fam = HashFamily.default(3)
    cm = CountMinSketch(3, 4096, 100, 5, family=fam)
    d = cm.process(flow(3))
    assert d.touched == tuple(fam.index(i, flow(3), 4096) for i in range(3))


def test_threshold_bounds():
    with pytest.raises(ConfigError):
        CountMinSketch(1, 16, 100, 0)
    with pytest.raises(ConfigError):
        CountMinSketch(1, 16, 100, 101)
    with pytest.raises(ConfigError):
        CountMinSketch(0, 16, 100, 5)
    assert CountMinSketch.for_fraction(1, 16, 65536, 0.001).th_abs == 65


@pytest.mark.parametrize("eps,width", [(0.001, 2719), (0.01, 272)])
def test_width_for_epsilon(eps, width):
    assert cm_width_for_epsilon(CountMinParams(eps, 0.05)) == width
    assert width == math.ceil(2.718281828459045 / eps)


def test_width_for_epsilon_e_is_one():
    assert cm_width_for_epsilon(math.e) == 1


@pytest.mark.parametrize("eps,sigma", [(0, 0.1), (1, 0.1), (0.1, 0), (0.1, 1)])
def test_params_validated(eps, sigma):
    with pytest.raises(ConfigError):
        CountMinParams(eps, sigma)


def test_bound_check():
    p = CountMinParams(0.01, 0.1)
    assert cm_estimate_bound_holds(10, 10, p, 1000)
    assert cm_estimate_bound_holds(10, 20, p, 1000)
    assert not cm_estimate_bound_holds(10, 21, p, 1000)


def test_empirical_bound_satisfaction_with_ring():
    trace = generate(TraceSpec("zipf", packets=30000, universe=3000, s=1.0, seed=5))
    n, params = 4096, CountMinParams(0.01, 0.05)
    width = cm_width_for_epsilon(params)
    ring = RingWindow(CountMinSketch(3, width, n, 40), n)
    oracle = OracleWindow(n, 40)
    held = [cm_estimate_bound_holds(oracle.step(k).true_count, ring.step(k).estimate, params, n)
            for k in trace.keys()]
    assert np.mean(held) >= 1 - params.sigma


def test_ring_overestimates_only(small_zipf):
    n = 500
    ring = RingWindow(CountMinSketch(2, 32, n, 10), n)
    oracle = OracleWindow(n, 10)
    for key in small_zipf.keys():
        assert ring.step(key).estimate >= oracle.step(key).true_count


def test_mean_overestimate_non_increasing_in_width():
    trace = generate(TraceSpec("zipf", packets=40000, universe=20000, s=1.0, seed=3))
    keys = trace.keys()
    n = 8192
    errors = []
    for width in (1024, 2048, 4096, 8192):
        ring = RingWindow(CountMinSketch(3, width, n, 8), n)
        oracle = OracleWindow(n, 8)
        err = [ring.step(k).estimate - oracle.step(k).true_count for k in keys]
        errors.append(np.mean(err))
    assert all(a >= b for a, b in zip(errors, errors[1:]))
