import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhsketch import _pykernels, kernels
from hhsketch.flow_model import HashFamily
from hhsketch.traces import TraceSpec, generate

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None,
                                reason="compiled kernels not built")
C = kernels.compiled_backend


@pytest.fixture(scope="module")
def trace():
    return generate(TraceSpec("zipf", packets=4000, universe=300, seed=3))


def tables_for(trace, widths):
    fam = HashFamily.default(len(widths))
    return np.stack([fam.table(i, trace.flows, int(w)) for i, w in enumerate(widths)])


def same(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("kind,window,split",
                         list(itertools.product([0, 1], [0, 1, 2, 3, 4], [False, True])))
def test_sketch_kernels_agree(trace, kind, window, split):
    widths = np.array([16, 16, 8] if kind else [16, 16, 16], np.int32)
    ths = np.array([3, 3, 2] if kind else [0, 0, 0], np.int32)
    tables = tables_for(trace, widths).astype(np.int32)
    args = (trace.index, tables, widths, ths, kind, 8, window, 256, split, 256)
    assert same(C.run_sketch(*args), _pykernels.run_sketch(*args))


@pytest.mark.parametrize("pure_ring", [False, True])
def test_hybrid_kernels_agree(trace, pure_ring):
    fam = HashFamily.default(2)
    t1, t3 = fam.table(0, trace.flows, 32), fam.table(1, trace.flows, 32)
    args = (trace.index, t1, t3, 32, 32, 256, 2, 4, 400, pure_ring, 1000)
    assert same(C.run_hybrid(*args), _pykernels.run_hybrid(*args))


def test_oracle_kernels_agree(trace):
    for inclusive in (False, True):
        args = (trace.index, len(trace.flows), 256, 8, inclusive)
        assert same(C.run_oracle(*args), _pykernels.run_oracle(*args))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=600), st.integers(0, 1),
       st.integers(0, 4), st.booleans(), st.sampled_from([8, 16, 32]))
def test_random_streams_agree(ids, kind, window, split, n):
    index = np.array(ids, dtype=np.int32)
    widths = np.array([8, 4] if kind else [8, 8], np.int32)
    ths = np.array([1, 2] if kind else [0, 0], np.int32)
    rng = np.random.default_rng(len(ids))
    tables = np.stack([rng.integers(0, w, 41) for w in widths]).astype(np.int32)
    args = (index, tables, widths, ths, kind, 3, window, n, split, n)
    assert same(C.run_sketch(*args), _pykernels.run_sketch(*args))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=600), st.booleans())
def test_random_hybrid_streams_agree(ids, pure_ring):
    index = np.array(ids, dtype=np.int32)
    rng = np.random.default_rng(len(ids))
    t1, t3 = rng.integers(0, 8, 41).astype(np.int32), rng.integers(0, 8, 41).astype(np.int32)
    args = (index, t1, t3, 8, 8, 32, 2, 2, 200, pure_ring, 64)
    assert same(C.run_hybrid(*args), _pykernels.run_hybrid(*args))


def test_overflow_raises_in_both(trace):
    from hhsketch.errors import FifoOverflowError
    fam = HashFamily.default(2)
    t1, t3 = fam.table(0, trace.flows, 32), fam.table(1, trace.flows, 32)
    for impl in (C, _pykernels):
        with pytest.raises(FifoOverflowError):
            impl.run_hybrid(trace.index, t1, t3, 32, 32, 256, 2, 4, 3, False, 1000)


def test_backend_lookup():
    assert kernels.get_backend("python") is _pykernels
    assert kernels.get_backend("cython") is C
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_environment_forces_pure_python():
    env = dict(os.environ, HHSKETCH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import hhsketch; print(hhsketch.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "cython"
