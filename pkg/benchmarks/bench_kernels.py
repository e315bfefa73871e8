"""Compiled vs pure-Python kernels on the same trace and configurations.

    python3 benchmarks/bench_kernels.py [--packets 200000] [--repeat 3]

Prints one line per detector: best wall time for each backend, packets per
second and the speedup, after checking both backends return identical arrays.
Detector times include building the per-trace hash index tables.
"""

import argparse
import time

import numpy as np

from hhsketch import kernels
from hhsketch.evaluation import ExperimentConfig, detect, ground_truth
from hhsketch.traces import TraceSpec, generate

CASES = {
    "oracle": None,
    "cm-d3 none": dict(window="none"),
    "cm-d3 ring": dict(window="ring"),
    "cm-d3 sequential": dict(window="sequential"),
    "cm-d3 seqflush split": dict(window="seqflush", variant="split"),
    "gated ring": dict(window="ring", sketch="gated", widths=(4096, 2048),
                       thresholds=(40, 25)),
    "hybrid m=2": dict(window="hybrid", m=2, width=8192),
    "hybrid m=2 pure ring": dict(window="hybrid", m=2, width=8192, pure_ring=True),
}


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--packets", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    trace = generate(TraceSpec("zipf", packets=args.packets, seed=1))
    print(f"{args.packets} packets, {len(trace.flows)} flow ids in the table, N=65536, th=0.001")
    print(f"{'detector':<22}{'cython s':>10}{'python s':>10}{'Mpkt/s C':>10}{'speedup':>9}")
    for name, kw in CASES.items():
        if kw is None:
            run = lambda b: ground_truth(trace, 65536, 65, backend=b)
        else:
            cfg = ExperimentConfig(**kw)
            run = lambda b, cfg=cfg: detect(cfg, trace, backend=b)[:2]
        tc, a = best_of(lambda: run("cython"), args.repeat)
        tp, b = best_of(lambda: run("python"), 1)
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), name
        print(f"{name:<22}{tc:>10.3f}{tp:>10.2f}{args.packets / tc / 1e6:>10.1f}"
              f"{tp / tc:>8.0f}x")


if __name__ == "__main__":
    main()
