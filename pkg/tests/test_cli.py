import csv
import io
import subprocess
import sys

import pytest

from hhsketch.cli import BOOL_OPTIONS, EXPERIMENT_OPTIONS, RUN_OPTIONS, main
from hhsketch.evaluation import CSV_COLUMNS

TRACE = "zipf:packets=12000,universe=1500,seed=4"
SMALL = ["--n", "2048", "--th", "0.005", "--width", "256", "--trace", TRACE]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_run_smoke(capsys):
    code, out, _ = run(["run", *SMALL], capsys)
    assert code == 0
    got = rows(out)
    assert [r["trace_id"] for r in got] == [TRACE, "AGG"]
    assert list(got[0]) == CSV_COLUMNS
    assert got[0]["fn_rate"] == "0" and got[0]["window"] == "ring"


def test_console_script_and_module_entry(tmp_path):
    out = tmp_path / "r.csv"
    subprocess.run([sys.executable, "-m", "hhsketch", "run", *SMALL, "-o", str(out)],
                   check=True)
    assert out.read_text().startswith("sketch,window,")


def test_memory_reports_infeasible_ring(capsys):
    code, out, _ = run(["memory", "--window", "ring", "--n", "1048576", "--depth", "1"], capsys)
    (row,) = rows(out)
    assert code == 0 and row["feasible"] == "false"
    assert row["memory_bits"] == str(2**20 * 12 + 4096 * 20)


def test_unknown_flag_exits_one_without_output(tmp_path, capsys):
    out = tmp_path / "never.csv"
    code, _, err = run(["run", "--bogus", "-o", str(out)], capsys)
    assert code == 1 and not out.exists() and "bogus" in err


def test_invalid_config_exits_one(capsys):
    code, _, err = run(["run", *SMALL, "--window", "hybrid", "--m", "3"], capsys)
    assert code == 1 and err.startswith("error (m):")


def test_help_lists_every_flag(capsys):
    for cmd in ("run", "sweep", "memory"):
        with pytest.raises(SystemExit):
            main([cmd, "--help"])
        text = capsys.readouterr().out
        for key, *_ in EXPERIMENT_OPTIONS + RUN_OPTIONS + BOOL_OPTIONS:
            assert f"--{key}" in text
        for flag in ("--trace", "--config", "--dump-config", "--output"):
            assert flag in text


def test_config_round_trip(tmp_path, capsys):
    argv = ["run", *SMALL, "--window", "seqflush", "--variant", "split", "--depth", "2"]
    code, direct, _ = run(argv, capsys)
    code2, dumped, _ = run(argv + ["--dump-config"], capsys)
    cfg = tmp_path / "exp.conf"
    cfg.write_text("# saved\n" + dumped)
    code3, via_file, _ = run(["run", "--config", str(cfg)], capsys)
    assert code == code2 == code3 == 0 and direct == via_file


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "exp.conf"
    cfg.write_text(f"window=sequential\nn=2048\nth=0.005\nwidth=256\ntrace={TRACE}\n")
    _, out, _ = run(["run", "--config", str(cfg), "--window", "none"], capsys)
    assert rows(out)[0]["window"] == "none"


def test_bad_config_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "exp.conf"
    cfg.write_text("colour=blue\n")
    assert run(["run", "--config", str(cfg)], capsys)[0] == 1


@pytest.mark.parametrize("argv", [
    ["run", "--config", "/nonexistent/exp.conf"],
    ["run", "--trace", "csv:path=/nonexistent/t.csv", "--n", "1000", "--th", "0.005"],
    ["run", *SMALL, "-o", "/nonexistent/dir/out.csv"],
])
def test_io_failures_exit_two(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_gen_trace_then_tracestats(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert main(["gen-trace", "--trace", TRACE, "-o", str(path)]) == 0
    code, out, _ = run(["tracestats", "--trace", f"csv:path={path}", "--n", "3000",
                        "--th", "0.005"], capsys)
    got = rows(out)
    assert code == 0 and [r["block"] for r in got] == ["0", "1", "2", "3", "MEAN"]
    assert sum(int(r["packets"]) for r in got[:4]) == 12000
    # the csv trace replays to the same detector results as the generator
    _, a, _ = run(["run", *SMALL], capsys)
    _, b, _ = run(["run", *SMALL[:-2], "--trace", f"csv:path={path}"], capsys)
    strip = lambda text: [{k: v for k, v in r.items() if k != "trace_id"} for r in rows(text)]
    assert strip(a) == strip(b)


def test_gen_trace_rejects_csv_kind(tmp_path, capsys):
    assert run(["gen-trace", "--trace", f"csv:path={tmp_path}/x.csv", "-o",
                str(tmp_path / "y.csv")], capsys)[0] == 1


def test_sweep_grid_and_jobs(tmp_path, capsys):
    argv = ["sweep", *SMALL, "--trace", "uniform:packets=12000,universe=1500,seed=1",
            "--window", "ring", "sequential", "--depth", "1", "3"]
    code, serial, _ = run(argv, capsys)
    code2, parallel, _ = run(argv + ["--jobs", "4"], capsys)
    assert code == code2 == 0 and serial == parallel
    got = rows(serial)
    assert sum(r["trace_id"] == "AGG" for r in got) == 4
    assert [(r["window"], r["depth"]) for r in got if r["trace_id"] == "AGG"] == [
        ("ring", "1"), ("sequential", "1"), ("ring", "3"), ("sequential", "3")]


def test_sweep_invalid_point_is_an_error_row(capsys):
    code, out, _ = run(["sweep", *SMALL, "--window", "seqflush", "--width", "256", "300"],
                       capsys)
    got = rows(out)
    assert code == 0 and got[-1]["error"] and not got[0]["error"]
