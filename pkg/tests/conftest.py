import numpy as np
import pytest

from hhsketch import kernels
from hhsketch.flow_model import FlowId
from hhsketch.traces import TraceSpec, generate

BACKENDS = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])


def flow(i: int) -> FlowId:
    """Deterministic distinct flow for hand-built streams."""
    return FlowId(0x0A000000 + i, 0x0A640001, 6, 1024 + (i % 60000), 80)


@pytest.fixture
def flows():
    return [flow(i) for i in range(64)]


@pytest.fixture(scope="session")
def small_zipf():
    return generate(TraceSpec("zipf", packets=6000, universe=400, seed=11))


def lone_index(width: int):
    """Index function that never collides for keys < width."""
    return lambda key: key % width


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
