"""Command-line workflows: simulate, classify, assess, sweep."""

import csv
import json

import numpy as np
import pytest

from lyapstab.cli import main
from lyapstab.ingest import parse_traces


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture()
def stable_case(tmp_path, networks_dir):
    """Simulated stable two-machine event on disk: (traces path, meta path)."""
    out = tmp_path / "traces.csv"
    code = run_cli("simulate", "--network", networks_dir / "twomachine.net",
                   "--fault-bus", "3", "--fault-time", "0.1",
                   "--clear-time", "0.2", "--horizon", "8.0", "--out", out)
    assert code == 0
    return out, tmp_path / "traces.meta.json"


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_writes_traces_and_meta(tmp_path, networks_dir):
    out = tmp_path / "smib.csv"
    code = run_cli("simulate", "--network", networks_dir / "smib.net",
                   "--fault-bus", "1", "--fault-time", "0.1",
                   "--clear-time", "0.2", "--open-branch", "L2",
                   "--horizon", "6.0", "--out", out)
    assert code == 0
    traces = parse_traces(out)
    assert {tr.gen_id for tr in traces} == {"G1", "INF"}
    meta = json.loads((tmp_path / "smib.meta.json").read_text())
    assert meta["clear_time_s"] == 0.2
    assert meta["faulted_element"] == "1"


def test_simulate_is_deterministic(tmp_path, networks_dir):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        run_cli("simulate", "--network", networks_dir / "twomachine.net",
                "--fault-bus", "3", "--clear-time", "0.2", "--out", out)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_zero_duration_fault_keeps_traces_constant(tmp_path,
                                                            networks_dir):
    out = tmp_path / "flat.csv"
    code = run_cli("simulate", "--network", networks_dir / "twomachine.net",
                   "--fault-bus", "3", "--fault-time", "0.1",
                   "--clear-time", "0.1", "--horizon", "2.0", "--out", out)
    assert code == 0
    for tr in parse_traces(out):
        assert np.abs(tr.angles - tr.angles[0]).max() < 1e-8


def test_simulate_bad_network_path_fails(tmp_path):
    code = run_cli("simulate", "--network", tmp_path / "missing.net",
                   "--fault-bus", "1", "--clear-time", "0.2",
                   "--out", tmp_path / "x.csv")
    assert code == 1


# ---------------------------------------------------------------------------
# assess
# ---------------------------------------------------------------------------

def test_assess_stable_exit_zero(stable_case, capsys, tmp_path):
    traces_path, meta_path = stable_case
    report_path = tmp_path / "report.json"
    code = run_cli("assess", "--traces", traces_path, "--meta", meta_path,
                   "--out", report_path)
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["system"]["status"] == "STABLE"
    assert json.loads(report_path.read_text()) == payload


def test_assess_unstable_exit_two(tmp_path, networks_dir, capsys):
    out = tmp_path / "unstable.csv"
    run_cli("simulate", "--network", networks_dir / "twomachine.net",
            "--fault-bus", "3", "--clear-time", "0.34",
            "--horizon", "8.0", "--out", out)
    code = run_cli("assess", "--traces", out,
                   "--meta", tmp_path / "unstable.meta.json")
    assert code == 2
    payload = json.loads(capsys.readouterr().out)
    assert payload["system"]["status"] == "UNSTABLE"
    assert payload["pairs"][0]["status"].startswith("UNSTABLE")


def test_assess_missing_meta_exit_one(stable_case, capsys):
    traces_path, _ = stable_case
    code = run_cli("assess", "--traces", traces_path)
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_assess_flags_override_meta(stable_case):
    traces_path, _ = stable_case
    code = run_cli("assess", "--traces", traces_path,
                   "--fault-time", "0.1", "--clear-time", "0.2")
    assert code == 0


def test_assess_dumps_series(stable_case, tmp_path):
    traces_path, meta_path = stable_case
    prefix = str(tmp_path / "dump_")
    run_cli("assess", "--traces", traces_path, "--meta", meta_path,
            "--dump-mle", prefix, "--dump-distance", prefix)
    dump_files = list(tmp_path.glob("dump_*csv"))
    assert len(dump_files) == 2  # one exponent + one distance file per pair
    headers = {p.read_text().splitlines()[0] for p in dump_files}
    assert headers == {"t,lambda", "t,d"}


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def test_classify_reports_parameters(stable_case, capsys):
    traces_path, meta_path = stable_case
    code = run_cli("classify", "--traces", traces_path, "--meta", meta_path,
                   "--pair", "G2,G1")
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["severe"] == "G2"
    assert payload["pattern"] in ("I", "II", "III", "IV", "V", "VI")
    assert payload["m_n"] >= payload["w"] >= 1
    assert payload["decided_at"] >= 0


def test_classify_all_identified_pairs(stable_case, capsys):
    traces_path, meta_path = stable_case
    code = run_cli("classify", "--traces", traces_path, "--meta", meta_path)
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert isinstance(payload, list) and len(payload) == 1


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_rows_and_rerun_identical(tmp_path, networks_dir):
    out_a = tmp_path / "sweep_a.csv"
    out_b = tmp_path / "sweep_b.csv"
    for out in (out_a, out_b):
        code = run_cli("sweep", "--network", networks_dir / "twomachine.net",
                       "--fault-bus", "3",
                       "--clear-time", "0.14", "--clear-time", "0.22",
                       "--clear-time", "0.3", "--clear-time", "0.38",
                       "--open-branch", "none", "--horizon", "8.0",
                       "--oracle-window", "5.0", "--out", out)
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()

    with open(out_a, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    verdicts = [r["oracle"] for r in rows]
    flips = sum(a != b for a, b in zip(verdicts, verdicts[1:]))
    assert flips == 1  # oracle flips exactly once along the clearing grid
    assert all(r["agree"] == "True" for r in rows if r["agree"])

    summary = (tmp_path / "sweep_a_summary.csv").read_text().splitlines()
    assert summary[0].startswith("clear_time_s,I,II,III,IV,V,VI")


def test_sweep_parallel_matches_serial(tmp_path, networks_dir):
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    args = ("sweep", "--network", networks_dir / "twomachine.net",
            "--fault-bus", "3", "--clear-time", "0.2", "--clear-time", "0.34",
            "--open-branch", "none", "--horizon", "8.0",
            "--oracle-window", "5.0")
    assert run_cli(*args, "--out", serial) == 0
    assert run_cli(*args, "--jobs", "2", "--out", parallel) == 0
    assert serial.read_bytes() == parallel.read_bytes()
