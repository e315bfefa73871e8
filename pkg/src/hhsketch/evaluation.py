"""Detector-vs-oracle experiments: per-packet FP/FN rates, memory and access audits."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError
from .flow_model import HashFamily
from .hybrid import hybrid_width2_bound
from .memory_model import (DEFAULT_BUDGET, HardwareBudget, absolute_threshold, as_fraction,
                           ceil_log2, feasible, hybrid_structures, memory_flush_seq,
                           memory_ring, memory_seq)
from .traces import Trace, TraceSpec, generate

SKETCHES = ("count-min", "gated")
WINDOWS = ("none", "flush", "ring", "sequential", "seqflush", "hybrid")
VARIANTS = ("unified", "split")
TH_RANGE = (as_fraction("0.001"), as_fraction("0.01"))
Z95 = 1.96

CSV_COLUMNS = [
    "sketch", "window", "depth", "widths", "thresholds", "N", "m", "th_fraction", "trace_id",
    "packets", "fp_rate", "fn_rate", "memory_bits", "feasible", "max_rmw", "runtime_ms",
    "fp_ci_halfwidth", "fn_ci_halfwidth", "fp_rate_nonheavy", "fn_rate_heavy", "error",
]


@dataclass(frozen=True)
class ExperimentConfig:
    sketch: str = "count-min"
    depth: int = 3
    width: int = 4096
    widths: tuple[int, ...] | None = None
    thresholds: tuple[int, ...] | None = None
    window: str = "ring"
    n: int = 65536
    th: float = 0.001
    m: int = 2
    variant: str = "unified"
    pure_ring: bool = False
    width2: int | None = None
    width3: int = 8192
    traces: tuple[TraceSpec, ...] = (TraceSpec(),)
    warmup_skip: bool | None = None
    stage_bytes: float | None = None

    @property
    def budget(self) -> HardwareBudget:
        if self.stage_bytes is None:
            return DEFAULT_BUDGET
        return replace(DEFAULT_BUDGET, stage_bytes=self.stage_bytes)

    def stage_widths(self) -> list[int]:
        if self.window == "hybrid":
            return [self.width]
        if self.widths is not None:
            return list(self.widths)
        return [self.width] * self.depth

    @property
    def th_abs(self) -> int:
        return absolute_threshold(self.th, self.n)

    @property
    def skip_warmup(self) -> bool:
        if self.warmup_skip is not None:
            return self.warmup_skip
        return self.window != "none"

    @property
    def fifo_width(self) -> int:
        if self.width2 is not None:
            return self.width2
        return hybrid_width2_bound(self.n, self.width, self.m, self.th)

    def problems(self) -> list[tuple[str, str]]:
        """Every invalid parameter, as ``(field, message)`` pairs."""
        out: list[tuple[str, str]] = []
        if self.sketch not in SKETCHES:
            out.append(("sketch", f"sketch must be one of {SKETCHES}, got {self.sketch!r}"))
        if self.window not in WINDOWS:
            out.append(("window", f"window must be one of {WINDOWS}, got {self.window!r}"))
        if self.variant not in VARIANTS:
            out.append(("variant", f"variant must be one of {VARIANTS}, got {self.variant!r}"))
        if self.n < 2:
            out.append(("n", f"N must be >= 2, got {self.n}"))
        th = as_fraction(self.th)
        if not TH_RANGE[0] <= th <= TH_RANGE[1]:
            out.append(("th", f"th must be within [0.001, 0.01], got {self.th}"))
        th_abs = math.floor(th * self.n)
        if th_abs < 1:
            out.append(("th", f"th*N = {float(th * self.n):g} gives no whole packet"))
        if not self.traces:
            out.append(("trace", "at least one trace is required"))
        if self.depth < 1:
            out.append(("depth", f"depth must be >= 1, got {self.depth}"))
        if self.width < 1:
            out.append(("width", f"width must be >= 1, got {self.width}"))
        widths = self.stage_widths() if self.depth >= 1 else []
        if any(w < 1 for w in widths):
            out.append(("widths", f"widths must be positive, got {widths}"))
            return out

        if self.sketch == "gated" and self.window != "hybrid":
            if self.thresholds is None:
                out.append(("thresholds", "gated sketch needs --thresholds"))
            elif len(self.thresholds) != len(widths):
                out.append(("thresholds",
                            f"{len(widths)} widths but {len(self.thresholds)} thresholds"))
            elif any(t < 0 for t in self.thresholds):
                out.append(("thresholds", "gate thresholds must be non-negative"))
            elif th_abs >= 1 and sum(self.thresholds) != th_abs:
                out.append(("thresholds", f"thresholds sum to {sum(self.thresholds)}, "
                                          f"floor(th*N) is {th_abs}"))
        if self.sketch == "count-min" and self.widths is not None and len(set(self.widths)) > 1:
            out.append(("widths", "count-min stages share one width; use --width"))
        if self.variant == "split" and self.window in ("sequential", "seqflush", "ring", "none",
                                                        "flush"):
            if any(w % 2 or w < 2 for w in widths):
                out.append(("width", f"split variant needs even widths, got {widths}"))
        if self.window == "seqflush":
            bad = [w for w in widths if self.n % w]
            if bad:
                out.append(("width", f"sequential flushing needs width | N; {bad} do not divide "
                                     f"N={self.n}"))
        if self.window == "hybrid":
            if self.sketch != "count-min":
                out.append(("sketch", "hybrid window runs a single count-min stage"))
            if self.m < 1:
                out.append(("m", f"m must be >= 1, got {self.m}"))
            elif th_abs >= 1 and th_abs % self.m:
                out.append(("m", f"floor(th*N)={th_abs} is not a multiple of m={self.m}"))
            if self.pure_ring and self.m >= 1 and self.n % self.m:
                out.append(("m", f"pure ring needs m | N, got N={self.n}, m={self.m}"))
            if self.width3 < 1:
                out.append(("width3", f"width3 must be >= 1, got {self.width3}"))
            if self.width2 is not None and self.width2 < 1:
                out.append(("width2", f"width2 must be >= 1, got {self.width2}"))
        if self.stage_bytes is not None and self.stage_bytes <= 0:
            out.append(("stage-bytes", f"stage budget must be positive, got {self.stage_bytes}"))
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(msg for _, msg in problems), problems[0][0])


@dataclass
class TraceResult:
    trace_id: str
    packets: int
    fp_count: int
    fn_count: int
    agree_count: int
    truly_heavy: int
    fp_rate: float
    fn_rate: float
    fp_rate_nonheavy: float
    fn_rate_heavy: float
    memory_bits: int
    feasible: bool
    max_rmw: int
    runtime_ms: float | None = None


@dataclass
class EvalReport:
    config: ExperimentConfig
    traces: list[TraceResult]
    fp_mean: float = 0.0
    fn_mean: float = 0.0
    fp_ci_halfwidth: float = 0.0
    fn_ci_halfwidth: float = 0.0
    errors: list[str] = field(default_factory=list)

    @classmethod
    def aggregate(cls, config: ExperimentConfig, traces: list[TraceResult]) -> EvalReport:
        fp = [t.fp_rate for t in traces]
        fn = [t.fn_rate for t in traces]
        return cls(config, traces, float(np.mean(fp)), float(np.mean(fn)),
                   ci_halfwidth(fp), ci_halfwidth(fn))


def ci_halfwidth(values: Sequence[float]) -> float:
    """Normal-approximation 95% half-width, ``1.96 * s / sqrt(n)``; 0 for a single value."""
    if len(values) < 2:
        return 0.0
    return float(Z95 * np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass
class MemoryReport:
    structures: dict[str, int]
    total_bits: int
    feasible: bool
    max_rmw: int


def memory_report(cfg: ExperimentConfig, budget: HardwareBudget | None = None) -> MemoryReport:
    """Theoretical bits per data-plane structure and the one-stage feasibility check."""
    cfg.validate()
    budget = cfg.budget if budget is None else budget
    widths = cfg.stage_widths()
    structures: dict[str, int] = {}
    if cfg.window == "hybrid":
        structures.update(hybrid_structures(cfg.n, cfg.m, cfg.th, cfg.width, cfg.fifo_width,
                                            cfg.width3, cfg.pure_ring))
    else:
        consumed = 0
        for i, w in enumerate(widths):
            structures[f"stage{i}"] = w * ceil_log2(cfg.n - consumed)
            if cfg.sketch == "gated":
                consumed += cfg.thresholds[i]
        split = cfg.variant == "split"
        if cfg.window == "ring":
            structures["ring"] = memory_ring(cfg.n, widths)
        elif cfg.window == "sequential":
            structures["seq_index"] = memory_seq(widths, split)
        elif cfg.window == "seqflush":
            structures["flush_pointer"] = memory_flush_seq(widths, split)
    return MemoryReport(structures, sum(structures.values()), feasible(structures, budget),
                        structural_max_rmw(cfg))


def structural_max_rmw(cfg: ExperimentConfig) -> int:
    """Worst-case rmw per counter array per packet, from the update path alone."""
    if cfg.window in ("ring", "hybrid"):
        # ring: increment + eviction; hybrid: batch expiry + batch completion
        return 2
    if cfg.window == "sequential" and cfg.variant == "unified":
        return 2
    return 1


@lru_cache(maxsize=24)
def load_trace(spec: TraceSpec) -> Trace:
    return generate(spec)


def _tables(flows: np.ndarray, widths: Sequence[int], first_seed: int = 0) -> np.ndarray:
    family = HashFamily.default(first_seed + len(widths))
    return np.ascontiguousarray(
        np.stack([family.table(first_seed + i, flows, w) for i, w in enumerate(widths)]),
        dtype=np.int32)


def detect(cfg: ExperimentConfig, trace: Trace, backend: str | None = None):
    """Per-packet ``(estimate, is_heavy, max_rmw)`` of the configured detector."""
    impl = kernels.get_backend(backend)
    if cfg.window == "hybrid":
        t1 = _tables(trace.flows, [cfg.width])[0]
        t3 = _tables(trace.flows, [cfg.width3], first_seed=1)[0]
        batch_clamp = math.ceil(cfg.m / as_fraction(cfg.th))
        est, heavy, _, rmw = impl.run_hybrid(
            trace.index, t1, t3, cfg.width, cfg.width3, cfg.n, cfg.m, cfg.th_abs // cfg.m,
            cfg.fifo_width, cfg.pure_ring, batch_clamp)
        return est, heavy.astype(bool), int(rmw.max())
    widths = cfg.stage_widths()
    tables = _tables(trace.flows, widths)
    if cfg.sketch == "gated":
        thresholds = np.array(cfg.thresholds, dtype=np.int32)
    else:
        thresholds = np.zeros(len(widths), dtype=np.int32)
    est, heavy, rmw = impl.run_sketch(
        trace.index, tables, np.array(widths, dtype=np.int32), thresholds,
        kernels.SKETCH_KINDS[cfg.sketch], cfg.th_abs, kernels.WINDOW_KINDS[cfg.window],
        cfg.n, cfg.variant == "split", cfg.n)
    return est, heavy.astype(bool), int(rmw.max()) if len(rmw) else 0


def ground_truth(trace: Trace, n_window: int, th_abs: int, backend: str | None = None):
    """Exact windowed ``(true_count, is_heavy)`` per packet."""
    impl = kernels.get_backend(backend)
    counts, heavy = impl.run_oracle(trace.index, len(trace.flows), n_window, th_abs, False)
    return counts, heavy.astype(bool)


def score(detected: np.ndarray, truth: np.ndarray, skip: int) -> dict[str, float | int]:
    det = detected[skip:]
    tru = truth[skip:]
    evaluated = int(det.size)
    fp = int(np.count_nonzero(det & ~tru))
    fn = int(np.count_nonzero(~det & tru))
    heavy = int(np.count_nonzero(tru))
    return {
        "packets": evaluated,
        "fp": fp,
        "fn": fn,
        "agree": evaluated - fp - fn,
        "heavy": heavy,
        "fp_rate": fp / evaluated if evaluated else 0.0,
        "fn_rate": fn / evaluated if evaluated else 0.0,
        "fp_rate_nonheavy": fp / (evaluated - heavy) if evaluated - heavy else 0.0,
        "fn_rate_heavy": fn / heavy if heavy else 0.0,
    }


def run_cell(cfg: ExperimentConfig, spec: TraceSpec, timing: bool = False,
             backend: str | None = None) -> TraceResult:
    trace = load_trace(spec)
    start = time.perf_counter()
    _, detected, max_rmw = detect(cfg, trace, backend)
    _, truth = ground_truth(trace, cfg.n, cfg.th_abs, backend)
    elapsed = (time.perf_counter() - start) * 1000.0
    s = score(detected, truth, cfg.n if cfg.skip_warmup else 0)
    mem = memory_report(cfg)
    return TraceResult(str(spec), s["packets"], s["fp"], s["fn"], s["agree"], s["heavy"],
                       s["fp_rate"], s["fn_rate"], s["fp_rate_nonheavy"], s["fn_rate_heavy"],
                       mem.total_bits, mem.feasible, max_rmw, elapsed if timing else None)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False,
                   backend: str | None = None) -> EvalReport:
    cfg.validate()
    cells = [(cfg, spec, timing, backend) for spec in cfg.traces]
    return EvalReport.aggregate(cfg, _map(_run_cell_args, cells, jobs))


def _run_cell_args(args) -> TraceResult:
    return run_cell(*args)


def _safe_cell(args):
    try:
        return run_cell(*args)
    except Exception as exc:  # a failing cell becomes an error row
        return f"{type(exc).__name__}: {exc}"


def _map(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep(configs: Iterable[ExperimentConfig], jobs: int = 1, timing: bool = False,
          backend: str | None = None) -> list[dict[str, str]]:
    """One row per (config, trace) plus an ``AGG`` row per config, in input order.

    Invalid configs and failing cells produce rows with ``error`` set; the
    sweep carries on.
    """
    configs = list(configs)
    plan: list[tuple[int, ExperimentConfig, str | None]] = []
    cells = []
    for k, cfg in enumerate(configs):
        problems = cfg.problems()
        if problems:
            plan.append((k, cfg, "; ".join(msg for _, msg in problems)))
            continue
        plan.append((k, cfg, None))
        cells.extend((cfg, spec, timing, backend) for spec in cfg.traces)
    results = iter(_map(_safe_cell, cells, jobs))

    rows: list[dict[str, str]] = []
    for _, cfg, error in plan:
        if error is not None:
            rows.append(_row(cfg, "AGG", error=error))
            continue
        good = []
        for spec in cfg.traces:
            res = next(results)
            if isinstance(res, str):
                rows.append(_row(cfg, str(spec), error=res))
            else:
                good.append(res)
                rows.append(_trace_row(cfg, res))
        if good:
            rows.append(_agg_row(EvalReport.aggregate(cfg, good)))
    return rows


def report_rows(report: EvalReport) -> list[dict[str, str]]:
    return [_trace_row(report.config, t) for t in report.traces] + [_agg_row(report)]


def _fmt(x: float) -> str:
    return format(x, ".10g")


def _row(cfg: ExperimentConfig, trace_id: str, error: str = "") -> dict[str, str]:
    row = dict.fromkeys(CSV_COLUMNS, "")
    if cfg.window == "hybrid":
        try:
            fifo = cfg.fifo_width
        except ConfigError:
            fifo = cfg.width2
        widths = [cfg.width, "" if fifo is None else fifo, cfg.width3]
        window = "hybrid-ring" if cfg.pure_ring else "hybrid"
        depth = 1
    else:
        widths = cfg.stage_widths() if cfg.depth >= 1 else []
        window = cfg.window if cfg.variant == "unified" else f"{cfg.window}-split"
        depth = len(widths)
    row.update(
        sketch=cfg.sketch, window=window, depth=str(depth),
        widths=";".join(str(w) for w in widths),
        thresholds=";".join(str(t) for t in cfg.thresholds) if cfg.thresholds else "",
        N=str(cfg.n), m=str(cfg.m) if cfg.window == "hybrid" else "",
        th_fraction=str(cfg.th), trace_id=trace_id, error=error)
    return row


def _trace_row(cfg: ExperimentConfig, t: TraceResult) -> dict[str, str]:
    row = _row(cfg, t.trace_id)
    row.update(packets=str(t.packets), fp_rate=_fmt(t.fp_rate), fn_rate=_fmt(t.fn_rate),
               memory_bits=str(t.memory_bits), feasible=str(t.feasible).lower(),
               max_rmw=str(t.max_rmw),
               runtime_ms="" if t.runtime_ms is None else f"{t.runtime_ms:.1f}",
               fp_rate_nonheavy=_fmt(t.fp_rate_nonheavy), fn_rate_heavy=_fmt(t.fn_rate_heavy))
    return row


def _agg_row(report: EvalReport) -> dict[str, str]:
    ts = report.traces
    row = _row(report.config, "AGG")
    heavy = sum(t.truly_heavy for t in ts)
    packets = sum(t.packets for t in ts)
    fp = sum(t.fp_count for t in ts)
    fn = sum(t.fn_count for t in ts)
    runtimes = [t.runtime_ms for t in ts if t.runtime_ms is not None]
    row.update(packets=str(packets), fp_rate=_fmt(report.fp_mean), fn_rate=_fmt(report.fn_mean),
               memory_bits=str(ts[0].memory_bits), feasible=str(ts[0].feasible).lower(),
               max_rmw=str(max(t.max_rmw for t in ts)),
               runtime_ms=f"{sum(runtimes):.1f}" if runtimes else "",
               fp_ci_halfwidth=_fmt(report.fp_ci_halfwidth),
               fn_ci_halfwidth=_fmt(report.fn_ci_halfwidth),
               fp_rate_nonheavy=_fmt(fp / (packets - heavy)) if packets - heavy else "0",
               fn_rate_heavy=_fmt(fn / heavy) if heavy else "0")
    return row


def memory_row(cfg: ExperimentConfig) -> dict[str, str]:
    mem = memory_report(cfg)
    row = _row(cfg, "MEM")
    row.update(memory_bits=str(mem.total_bits), feasible=str(mem.feasible).lower(),
               max_rmw=str(mem.max_rmw))
    return row


def rows_to_csv(rows: Iterable[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_rows(rows: Iterable[dict[str, str]], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8", newline="\n")


def with_traces(cfg: ExperimentConfig, specs: Sequence[TraceSpec]) -> ExperimentConfig:
    return replace(cfg, traces=tuple(specs))
