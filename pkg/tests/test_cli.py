import csv
import json
import subprocess
import sys

import pytest

from agar import cli, train
from agar import tensor as tn

TINY = ["levels=2", "k=[2,2]", "ssgnn_k=3", "ssgnn_widths=[4,4]", "dynamic_width=4",
        "batch_size=2", "log_every=1"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert run("gen-data", "--count", 2, "--seed", 3, "--points", 16, "--frames", 6, "--out", out) == 0
    return out


def test_gen_data_is_byte_identical(tmp_path, dataset):
    again = tmp_path / "again"
    assert run("gen-data", "--count", 2, "--seed", 3, "--points", 16, "--frames", 6, "--out", again) == 0
    assert files(dataset) == files(again)
    assert len([p for p in files(dataset) if p.name.startswith("frame_")]) == 12


def test_train_eval_explain_pipeline(tmp_path, dataset, capsys):
    run_dir = tmp_path / "run"
    assert run("train", "--data", dataset, "--run-dir", run_dir, "--quiet", "iterations=2", *TINY) == 0
    for name in ("config.json", "checkpoint.agar", "loss_curve.csv", "summary.json", "manifests.json"):
        assert (run_dir / name).is_file()
    assert len(train.read_curve(run_dir / "loss_curve.csv")) == 2

    capsys.readouterr()
    assert run("eval", "--run-dir", run_dir, "--data", dataset) == 0
    table = capsys.readouterr().out
    header = [line for line in table.splitlines() if line.startswith("method")][0]
    assert header.split()[1:] == ["CD", "EMD", "CD", "Top", "5%"]
    assert "copy-last" in table and "copy-frozen" in table
    summary = json.loads((run_dir / "eval" / "summary.json").read_text())
    assert set(summary) == {"short_term", "long_term"}
    assert set(summary["short_term"]["model"]) == {"cd", "emd", "cd_top5"}

    assert run("explain", "--run-dir", run_dir, "--data", dataset, "--out", tmp_path / "x") == 0
    assert len(list((tmp_path / "x").glob("frame_*.csv"))) == 5


def test_runs_replay_bit_identically(tmp_path, dataset):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("train", "--data", dataset, "--run-dir", a, "--quiet", "iterations=2", *TINY) == 0
    manifests = json.loads((a / "manifests.json").read_text())
    assert run("train", "--config", a / "config.json", "--data", manifests["data"], "--run-dir", b, "--quiet") == 0
    assert (a / "checkpoint.agar").read_bytes() == (b / "checkpoint.agar").read_bytes()
    assert (a / "loss_curve.csv").read_bytes() == (b / "loss_curve.csv").read_bytes()


def test_commands_leave_inputs_untouched(tmp_path, dataset):
    before = files(dataset)
    run_dir = tmp_path / "run"
    run("train", "--data", dataset, "--run-dir", run_dir, "--quiet", "iterations=1", *TINY)
    run("eval", "--run-dir", run_dir, "--data", dataset)
    assert files(dataset) == before


def test_explain_with_zeroed_attention_reports_half(tmp_path, dataset):
    run_dir = tmp_path / "run"
    assert run("train", "--data", dataset, "--run-dir", run_dir, "--quiet", "iterations=0", *TINY) == 0
    model = train.load_model(run_dir)
    for l in (1, 2):
        model.params[f"attn.{l}"].W.data[:] = 0
        model.params[f"attn.{l}"].b.data[:] = 0
    tn.save_checkpoint(run_dir / "checkpoint.agar", model.params)
    out = tmp_path / "explain"
    assert run("explain", "--run-dir", run_dir, "--data", dataset, "--out", out) == 0
    for path in out.glob("frame_*.csv"):
        rows = list(csv.DictReader(open(path)))
        assert len(rows) == 16
        assert {r["alpha_1"] for r in rows} == {"0.5"} and {r["alpha_2"] for r in rows} == {"0.5"}


def test_validation_errors_exit_1(tmp_path, dataset, capsys):
    assert run("frobnicate") == 1
    assert run("train", "--data", dataset, "--run-dir", tmp_path / "r", "bogus_key=1") == 1
    assert "bogus_key" in capsys.readouterr().err
    assert not (tmp_path / "r").exists()
    assert run("train", "--data", tmp_path / "missing", "--run-dir", tmp_path / "r2") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"levels": 0}')
    assert run("train", "--config", bad, "--data", dataset, "--run-dir", tmp_path / "r3") == 1
    assert "levels" in capsys.readouterr().err
    assert run("eval", "--run-dir", tmp_path / "nothing", "--data", dataset) == 1


def test_numeric_failure_exits_2(tmp_path, dataset):
    run_dir = tmp_path / "run"
    run("train", "--data", dataset, "--run-dir", run_dir, "--quiet", "iterations=0", *TINY)
    model = train.load_model(run_dir)
    model.head.b.data[:] = float("nan")
    tn.save_checkpoint(run_dir / "checkpoint.agar", model.params)
    assert run("eval", "--run-dir", run_dir, "--data", dataset) == 2
    # a NaN learning signal during training also exits 2 and leaves a checkpoint behind
    nan_run = tmp_path / "nan"
    with pytest.warns(RuntimeWarning):
        status = run("train", "--data", dataset, "--run-dir", nan_run, "--quiet", "iterations=2", "lr=1e300", *TINY)
    assert status == 2
    assert (nan_run / "checkpoint.agar").is_file()
    assert json.loads((nan_run / "summary.json").read_text())["iterations"] == 1


def test_grad_check_verb(capsys):
    assert run("grad-check", "--samples", 8) == 0
    assert "max relative error" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "agar.cli", "gen-data", "--count", "1", "--points", "8",
                           "--frames", "2", "--out", str(tmp_path / "d")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "agar.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1
