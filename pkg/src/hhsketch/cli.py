"""Command-line entry point: ``hhsketch {run,sweep,memory,tracestats,gen-trace}``.

Exit codes: 0 success, 1 configuration error, 2 I/O error.

Experiment options can also come from ``--config FILE``, a flat ``key=value``
file whose keys are the long flag names without dashes. Flags given on the
command line win over the file. ``--dump-config`` prints the resolved options
in that format and exits.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import shlex
import sys
from pathlib import Path

from .errors import ConfigError, FifoOverflowError, TraceFormatError
from .evaluation import (ExperimentConfig, memory_row, report_rows, rows_to_csv,
                         run_experiment, sweep)
from .traces import TraceSpec, generate, window_stats, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for I/O here.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _trace_arg(text: str) -> TraceSpec:
    try:
        return TraceSpec.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


# (key, type, help). Scalars and lists become ``nargs="+"`` grid axes under ``sweep``.
EXPERIMENT_OPTIONS = [
    ("sketch", str, "counting structure: count-min or gated (default count-min)"),
    ("depth", int, "number of count-min rows (default 3)"),
    ("width", int, "counters per row; for hybrid, the initial sketch width (default 4096)"),
    ("widths", _int_list, "per-stage widths, comma-separated (gated), e.g. 4096,2048"),
    ("thresholds", _int_list, "gated per-stage thresholds, comma-separated, summing to floor(th*N)"),
    ("window", str, "none, flush, ring, sequential, seqflush or hybrid (default ring)"),
    ("n", int, "window size N in packets (default 65536)"),
    ("th", float, "heavy-hitter threshold as a fraction of N, 0.001..0.01 (default 0.001)"),
    ("m", int, "hybrid: batches per heavy hitter (default 2)"),
    ("variant", str, "unified or split counter arrays for sequential windows (default unified)"),
    ("width2", int, "hybrid: flow-id FIFO rows (default: the no-overflow bound)"),
    ("width3", int, "hybrid: batch sketch width (default 8192)"),
]
BOOL_OPTIONS = [
    ("pure-ring", "hybrid: add the N/m pure ring that evicts small-flow residue"),
    ("warmup-skip", "exclude the first N packets from scoring (default: on for windowed schemes)"),
    ("timing", "fill runtime_ms; off by default so output is byte-reproducible"),
]
RUN_OPTIONS = [
    ("stage-bytes", float, "per-stage memory budget in bytes (default 1.4 MiB)"),
    ("jobs", int, "worker processes for independent (config, trace) cells (default 1)"),
    ("backend", str, "kernel backend: cython or python (default: compiled when available)"),
]
DEFAULTS = {"jobs": 1, "timing": False, "backend": None}


def _add_experiment_options(p: argparse.ArgumentParser, grid: bool) -> None:
    p.add_argument("--config", metavar="FILE", help="read key=value options from FILE; flags win")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved options as a config file and exit")
    p.add_argument("-o", "--output", metavar="PATH", default="-",
                   help="CSV output path (default stdout)")
    for key, typ, text in EXPERIMENT_OPTIONS + RUN_OPTIONS:
        nargs = "+" if grid and (key, typ, text) in EXPERIMENT_OPTIONS else None
        if grid and nargs:
            text += "; several values sweep this axis"
        p.add_argument(f"--{key}", type=typ, nargs=nargs, default=argparse.SUPPRESS, help=text)
    for key, text in BOOL_OPTIONS:
        p.add_argument(f"--{key}", action=argparse.BooleanOptionalAction,
                       default=argparse.SUPPRESS, help=text)
    p.add_argument("--trace", type=_trace_arg, action="append", default=argparse.SUPPRESS,
                   metavar="SPEC",
                   help="trace spec kind:key=val,..., repeatable; kinds zipf, uniform, "
                        "adversarial, csv (e.g. zipf:seed=7,packets=100000,s=1.1,universe=100000)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hhsketch", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog="Exit codes: 0 success, 1 configuration error, 2 I/O error.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="evaluate one configuration against the exact oracle")
    _add_experiment_options(run, grid=False)
    sw = sub.add_parser("sweep", help="evaluate the Cartesian grid of the given option values")
    _add_experiment_options(sw, grid=True)
    mem = sub.add_parser("memory", help="theoretical memory per structure and feasibility")
    _add_experiment_options(mem, grid=False)

    ts = sub.add_parser("tracestats", help="unique and heavy flows per consecutive N-packet block")
    ts.add_argument("--trace", type=_trace_arg, action="append", required=True, metavar="SPEC",
                    help="trace spec, repeatable")
    ts.add_argument("--n", type=int, default=65536, help="block size N (default 65536)")
    ts.add_argument("--th", type=float, default=0.001,
                    help="heavy threshold fraction (default 0.001)")
    ts.add_argument("-o", "--output", metavar="PATH", default="-",
                    help="CSV output path (default stdout)")

    gen = sub.add_parser("gen-trace", help="write a synthetic trace as CSV")
    gen.add_argument("--trace", type=_trace_arg, required=True, metavar="SPEC",
                     help="zipf, uniform or adversarial spec, e.g. zipf:seed=3,packets=100000")
    gen.add_argument("-o", "--output", metavar="PATH", required=True, help="trace CSV path")
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def _option_keys() -> list[str]:
    return ([k for k, _, _ in EXPERIMENT_OPTIONS] + [k for k, _ in BOOL_OPTIONS]
            + [k for k, _, _ in RUN_OPTIONS] + ["trace"])


def read_config(path: str, sub: argparse.ArgumentParser) -> dict:
    """Parse a ``key=value`` file through the same flag definitions."""
    text = Path(path).read_text(encoding="utf-8")
    known = set(_option_keys())
    argv: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        value = value.strip()
        if key in dict(BOOL_OPTIONS):
            if value.lower() not in ("true", "false"):
                raise UsageError(f"{path}:{lineno}: {key} must be true or false")
            argv.append(f"--{key}" if value.lower() == "true" else f"--no-{key}")
        elif key == "trace":
            argv.extend(["--trace", value])
        else:
            argv.append(f"--{key}")
            argv.extend(shlex.split(value))
    try:
        return vars(sub.parse_args(argv))
    except UsageError as exc:
        raise UsageError(f"{path}: {exc}") from None


def resolve(args: argparse.Namespace, sub: argparse.ArgumentParser) -> dict:
    values: dict = {}
    if args.config:
        values.update(read_config(args.config, sub))
    values.update(vars(args))
    keys = {k.replace("-", "_") for k in _option_keys()}
    return {k: v for k, v in values.items() if k in keys}


def dump_config(values: dict) -> str:
    lines = []
    for key in _option_keys():
        attr = key.replace("-", "_")
        if attr not in values or values[attr] is None:
            continue
        value = values[attr]
        if key == "trace":
            lines.extend(f"trace={spec}" for spec in value)
            continue
        if isinstance(value, bool):
            text = str(value).lower()
        elif isinstance(value, list):
            text = " ".join(_fmt_value(v) for v in value)
        else:
            text = _fmt_value(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


_CFG_FIELDS = [k for k, _, _ in EXPERIMENT_OPTIONS] + ["pure_ring", "warmup_skip", "stage_bytes"]


def make_config(values: dict) -> ExperimentConfig:
    kwargs = {k: values[k] for k in _CFG_FIELDS if k in values}
    if values.get("trace"):
        kwargs["traces"] = tuple(values["trace"])
    return ExperimentConfig(**kwargs)


def grid_configs(values: dict) -> list[ExperimentConfig]:
    axes = [k for k, _, _ in EXPERIMENT_OPTIONS if k in values]
    fixed = {k: v for k, v in values.items() if k not in axes}
    out = []
    for combo in itertools.product(*(values[k] for k in axes)):
        out.append(make_config({**fixed, **dict(zip(axes, combo))}))
    return out


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _tracestats_csv(specs, n: int, th: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trace_id", "block", "start", "packets", "unique_flows", "heavy_flows"])
    for spec in specs:
        blocks, means = window_stats(generate(spec), n, th)
        for i, b in enumerate(blocks):
            w.writerow([str(spec), i, b.start, b.packets, b.unique_flows, b.heavy_flows])
        w.writerow([str(spec), "MEAN", "", format(means["mean_packets"], ".10g"),
                    format(means["mean_unique_flows"], ".10g"),
                    format(means["mean_heavy_flows"], ".10g")])
    return buf.getvalue()


def _dispatch(argv: list[str] | None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cmd = args.command

    if cmd == "gen-trace":
        if args.trace.kind == "csv":
            raise UsageError("gen-trace: --trace must be a synthetic kind, not csv")
        write_csv(generate(args.trace), args.output)
        return EXIT_OK
    if cmd == "tracestats":
        if args.n < 1:
            raise ConfigError(f"N must be >= 1, got {args.n}", "n")
        _emit(_tracestats_csv(args.trace, args.n, args.th), args.output)
        return EXIT_OK

    values = {**DEFAULTS, **resolve(args, _subparser(parser, cmd))}
    if args.dump_config:
        _emit(dump_config(values), "-")
        return EXIT_OK
    if values["jobs"] < 1:
        raise ConfigError(f"jobs must be >= 1, got {values['jobs']}", "jobs")
    if values["backend"] not in (None, "cython", "python"):
        raise ConfigError(f"backend must be cython or python, got {values['backend']!r}",
                          "backend")

    if cmd == "memory":
        rows = [memory_row(make_config(values))]
    elif cmd == "run":
        cfg = make_config(values)
        report = run_experiment(cfg, values["jobs"], values["timing"], values["backend"])
        rows = report_rows(report)
    else:
        rows = sweep(grid_configs(values), values["jobs"], values["timing"], values["backend"])
    _emit(rows_to_csv(rows), args.output)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return _dispatch(argv)
    except (UsageError, ConfigError, FifoOverflowError) as exc:
        field = getattr(exc, "field", None)
        prefix = f"error ({field}): " if field else "error: "
        print(prefix + str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, TraceFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
