"""Sliding-window heavy-hitter detection with data-plane-sized sketches.

Counting sketches (single hash table, Count-Min, Gated), window maintenance
schemes (periodic flush, Ring, Sequential, Sequential Flushing, Hybrid), an
exact sliding-window oracle and an FP/FN evaluation harness.
"""

from .count_min import CountMinParams, CountMinSketch, cm_estimate_bound_holds, cm_width_for_epsilon
from .errors import ConfigError, FifoOverflowError, TraceFormatError
from .evaluation import ExperimentConfig, EvalReport, memory_report, run_experiment, sweep
from .flow_model import FlowId, HashFamily, Packet, crc16_ccitt, hash_index
from .gated import GatedSketch, gated_memory, stage2_unique_flows
from .hybrid import HybridWindow, hybrid_memory, hybrid_width2_bound
from .kernels import BACKEND
from .memory_model import (HardwareBudget, memory_count_min, memory_flush_seq, memory_gated,
                           memory_ring, memory_seq)
from .oracle import OracleWindow
from .sketch_core import AccessAudit, SketchStage, expected_collisions, load_factor
from .traces import Trace, TraceSpec, generate, ingest_csv, window_stats
from .windows import FlushBaseline, RingWindow, SequentialFlushing, SequentialWindow

__version__ = "0.1.0"

__all__ = [
    "AccessAudit", "BACKEND", "ConfigError", "CountMinParams", "CountMinSketch", "EvalReport",
    "ExperimentConfig", "FifoOverflowError", "FlowId", "FlushBaseline", "GatedSketch",
    "HardwareBudget", "HashFamily", "HybridWindow", "OracleWindow", "Packet", "RingWindow",
    "SequentialFlushing", "SequentialWindow", "SketchStage", "Trace", "TraceFormatError",
    "TraceSpec", "cm_estimate_bound_holds", "cm_width_for_epsilon", "crc16_ccitt",
    "expected_collisions", "gated_memory", "generate", "hash_index", "hybrid_memory",
    "hybrid_width2_bound", "ingest_csv", "load_factor", "memory_count_min", "memory_flush_seq",
    "memory_gated", "memory_report", "memory_ring", "memory_seq", "run_experiment",
    "stage2_unique_flows", "sweep", "window_stats",
]
