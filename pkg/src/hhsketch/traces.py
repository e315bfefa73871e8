"""Packet traces: seeded synthetic generators, CSV ingestion and per-window statistics.

A :class:`Trace` stores each distinct flow once (``flows``, a ``(k, 13)`` uint8
array) and the stream as dense indices into it (``index``), which is what the
batch kernels consume.
"""

from __future__ import annotations

import csv
import hashlib
import ipaddress
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, TraceFormatError
from .flow_model import FLOW_BYTES, FlowId, Packet, array_to_flows, flows_to_array
from .memory_model import as_fraction

CSV_HEADER = ["src_ip", "dst_ip", "proto", "src_port", "dst_port"]
KINDS = ("zipf", "uniform", "adversarial", "csv")


@dataclass(frozen=True)
class TraceSpec:
    kind: str = "zipf"
    packets: int = 1_000_000
    universe: int = 100_000
    s: float = 1.1
    seed: int = 0
    path: str | None = None
    rate: str = "0.001"  # adversarial: share of packets from the heavy flow

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"trace kind must be one of {KINDS}, got {self.kind!r}", "trace")
        if self.kind == "csv":
            if not self.path:
                raise ConfigError("csv traces need a path", "trace")
            return
        if self.packets < 0:
            raise ConfigError(f"packets must be >= 0, got {self.packets}", "trace")
        if self.universe < 1:
            raise ConfigError(f"universe must be >= 1, got {self.universe}", "trace")
        if self.kind == "zipf" and self.s <= 0:
            raise ConfigError(f"zipf exponent must be positive, got {self.s}", "trace")
        if self.kind == "adversarial" and not 0 < as_fraction(self.rate) <= 1:
            raise ConfigError(f"adversarial rate must be in (0, 1], got {self.rate}", "trace")

    @classmethod
    def parse(cls, text: str) -> TraceSpec:
        """``kind:key=val,key=val``, e.g. ``zipf:seed=7,packets=100000``."""
        kind, _, rest = text.partition(":")
        kwargs: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in types or key == "kind":
                raise ConfigError(f"bad trace option {item!r} in {text!r}", "trace")
            if key in ("packets", "universe", "seed"):
                try:
                    kwargs[key] = int(float(value)) if "e" in value.lower() else int(value)
                except ValueError:
                    raise ConfigError(f"{key} must be an integer in {text!r}", "trace") from None
            elif key == "s":
                try:
                    kwargs[key] = float(value)
                except ValueError:
                    raise ConfigError(f"s must be a number in {text!r}", "trace") from None
            else:
                kwargs[key] = value.strip()
        return cls(kind=kind.strip(), **kwargs)

    def __str__(self) -> str:
        defaults = TraceSpec(kind=self.kind, path=self.path) if self.kind == "csv" else TraceSpec()
        parts = []
        for key, value in asdict(self).items():
            if key == "kind":
                continue
            if key == "path" and value is not None:
                parts.append(f"path={value}")
            elif self.kind != "csv" and value != getattr(defaults, key):
                parts.append(f"{key}={value}")
        return f"{self.kind}:{','.join(parts)}" if parts else self.kind


@dataclass
class Trace:
    flows: np.ndarray
    index: np.ndarray
    name: str = field(default="trace")

    def __post_init__(self) -> None:
        self.flows = np.ascontiguousarray(self.flows, dtype=np.uint8).reshape(-1, FLOW_BYTES)
        self.index = np.ascontiguousarray(self.index, dtype=np.int32)

    @classmethod
    def from_flows(cls, flows: Iterable[FlowId], name: str = "trace") -> Trace:
        ids: dict[FlowId, int] = {}
        index = [ids.setdefault(f, len(ids)) for f in flows]
        return cls(flows_to_array(list(ids)) if ids else np.zeros((0, FLOW_BYTES), np.uint8),
                   np.array(index, dtype=np.int32), name)

    def __len__(self) -> int:
        return len(self.index)

    def flow_ids(self) -> list[FlowId]:
        """The distinct flows, in index order."""
        return array_to_flows(self.flows)

    def keys(self) -> list[FlowId]:
        table = self.flow_ids()
        return [table[i] for i in self.index.tolist()]

    def __iter__(self) -> Iterator[Packet]:
        for seq, flow in enumerate(self.keys()):
            yield Packet(flow, seq)

    def serialize(self) -> bytes:
        """The stream as concatenated 13-byte flow records."""
        return self.flows[self.index].tobytes()

    def digest(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()

    def unique_flows(self) -> int:
        return int(np.unique(self.index).size)


def random_flows(rng: np.random.Generator, k: int) -> np.ndarray:
    """``k`` distinct random IPv4 5-tuples as a ``(k, 13)`` array (protocol 6 or 17)."""
    rows = rng.integers(0, 256, size=(k, FLOW_BYTES), dtype=np.uint8)
    rows[:, 8] = np.where(rng.random(k) < 0.5, 6, 17)
    while True:
        _, first = np.unique(rows, axis=0, return_index=True)
        if first.size == k:
            return rows
        dup = np.setdiff1d(np.arange(k), first)
        rows[dup, :8] = rng.integers(0, 256, size=(dup.size, 8), dtype=np.uint8)


def zipf_probabilities(universe: int, s: float) -> np.ndarray:
    weights = np.arange(1, universe + 1, dtype=np.float64) ** -s
    return weights / weights.sum()


def generate(spec: TraceSpec) -> Trace:
    """Deterministic stream for ``spec``; identical specs give identical traces."""
    if spec.kind == "csv":
        return ingest_csv(spec.path)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "zipf":
        flows = random_flows(rng, spec.universe)
        cdf = np.cumsum(zipf_probabilities(spec.universe, spec.s))
        cdf[-1] = 1.0
        index = np.searchsorted(cdf, rng.random(spec.packets), side="right")
        index = np.minimum(index, spec.universe - 1)
    elif spec.kind == "uniform":
        flows = random_flows(rng, spec.universe)
        index = rng.integers(0, spec.universe, size=spec.packets)
    else:
        flows, index = _adversarial(rng, spec.packets, as_fraction(spec.rate))
    return Trace(flows, index, str(spec))


def _adversarial(rng: np.random.Generator, packets: int, rate: Fraction):
    """Heavy flow 0 at exactly ``rate`` (evenly spread), every other packet a new flow."""
    pos = np.arange(packets, dtype=np.int64)
    num, den = rate.numerator, rate.denominator
    heavy = ((pos + 1) * num // den) > (pos * num // den)
    n_small = int(packets - heavy.sum())
    heavy_row = rng.integers(0, 256, size=(1, FLOW_BYTES), dtype=np.uint8)
    heavy_row[0, 8] = 6
    small = np.zeros((n_small, FLOW_BYTES), dtype=np.uint8)
    ids = np.arange(n_small, dtype=np.uint64)
    shifts = np.array([24, 16, 8, 0], dtype=np.uint64)
    small[:, 0:4] = ((ids[:, None] >> shifts) & 0xFF).astype(np.uint8)
    small[:, 4:8] = (192, 168, 0, 1)
    small[:, 8] = 17
    small[:, 9:11] = (0x30, 0x39)
    small[:, 11:13] = (0, 53)
    flows = np.vstack([heavy_row, small])
    index = np.zeros(packets, dtype=np.int32)
    index[~heavy] = np.arange(1, n_small + 1, dtype=np.int32)
    return flows, index


def ingest_csv(path: str | Path) -> Trace:
    """Read ``src_ip,dst_ip,proto,src_port,dst_port`` rows in file order."""
    path = Path(path)
    flows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return Trace.from_flows([], path.name)
        if [h.strip() for h in header] != CSV_HEADER:
            raise TraceFormatError(f"expected header {','.join(CSV_HEADER)}, got {header}", 0)
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != 5:
                raise TraceFormatError(f"expected 5 fields, got {len(row)}", row_no)
            try:
                flows.append(FlowId(
                    int(ipaddress.IPv4Address(row[0].strip())),
                    int(ipaddress.IPv4Address(row[1].strip())),
                    int(row[2]), int(row[3]), int(row[4])))
            except ValueError as exc:
                raise TraceFormatError(str(exc), row_no) from None
    return Trace.from_flows(flows, path.name)


def write_csv(trace: Trace, path: str | Path) -> None:
    table = trace.flows
    src = table[:, 0:4].astype(np.uint32) @ np.array([1 << 24, 1 << 16, 1 << 8, 1], np.uint32)
    dst = table[:, 4:8].astype(np.uint32) @ np.array([1 << 24, 1 << 16, 1 << 8, 1], np.uint32)
    proto = table[:, 8]
    sport = table[:, 9].astype(np.uint32) << 8 | table[:, 10]
    dport = table[:, 11].astype(np.uint32) << 8 | table[:, 12]
    lines = [",".join(CSV_HEADER)]
    rendered = [f"{ipaddress.IPv4Address(int(a))},{ipaddress.IPv4Address(int(b))},{p},{sp},{dp}"
                for a, b, p, sp, dp in zip(src, dst, proto, sport, dport)]
    lines.extend(rendered[i] for i in trace.index.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


@dataclass
class WindowStats:
    start: int
    packets: int
    unique_flows: int
    heavy_flows: int


def window_stats(trace: Trace, n_window: int, th_fraction: float = 0.001) -> tuple[list[WindowStats], dict[str, float]]:
    """Exact statistics over consecutive blocks of ``N`` packets.

    A flow is heavy in a block when its packet count there exceeds
    ``floor(th * N)``. The last block may be shorter than ``N``.
    """
    if n_window < 1:
        raise ConfigError(f"N must be >= 1, got {n_window}", "n")
    th_abs = math.floor(as_fraction(th_fraction) * n_window)
    stats = []
    for start in range(0, len(trace), n_window):
        block = trace.index[start:start + n_window]
        _, counts = np.unique(block, return_counts=True)
        stats.append(WindowStats(start, int(block.size), int(counts.size),
                                 int((counts > th_abs).sum())))
    means = {
        "windows": len(stats),
        "mean_packets": float(np.mean([w.packets for w in stats])) if stats else 0.0,
        "mean_unique_flows": float(np.mean([w.unique_flows for w in stats])) if stats else 0.0,
        "mean_heavy_flows": float(np.mean([w.heavy_flows for w in stats])) if stats else 0.0,
    }
    return stats, means


def top_share(trace: Trace) -> float:
    """Fraction of packets belonging to the most frequent flow."""
    if not len(trace):
        return 0.0
    return float(np.bincount(trace.index).max() / len(trace))

