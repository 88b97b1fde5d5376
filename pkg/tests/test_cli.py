import json

import numpy as np
import pytest

from ppgstress.cli import run
from ppgstress.dsp import design_from_text, normalize
from ppgstress.dataset import load_subject
from ppgstress.synthetic import make_labeled_record
from ppgstress.training import TrainReport

# every condition appears twice so both sides of the chronological split
# see every class
SCHEDULE = [
    (1, 10.0), (2, 7.5), (3, 5.0), (4, 7.5),
    (1, 10.0), (2, 7.5), (3, 5.0), (4, 7.5), (0, 2.5),
]


def write_subject(root, sid, seed):
    rec = make_labeled_record(sid, SCHEDULE, seed=seed)
    d = root / f"S{sid}"
    d.mkdir()
    (d / "ppg.csv").write_text("".join(f"{float(v)!r}\n" for v in rec.ppg))
    (d / "labels.csv").write_text("".join(f"{int(v)}\n" for v in rec.labels))
    (d / "meta.txt").write_text(f"subject={sid}\nppg_rate_hz=64\nlabel_rate_hz=700\n")


@pytest.fixture(scope="module")
def data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("subjects")
    for sid, seed in ((2, 31), (8, 32), (15, 33)):
        write_subject(root, sid, seed)
    return root


@pytest.fixture(autouse=True)
def _env(monkeypatch, data_root):
    monkeypatch.setenv("PPGSTRESS_DATA", str(data_root))


FAST = ["--config", "max_iter=12"]


# --------------------------------------------------------------------------
# preprocess


def test_preprocess_no_filter_is_normalize_only(tmp_path, data_root):
    out = tmp_path / "cond"
    assert run(["preprocess", "--subject", "2", "--no-filter", "--out", str(out)]) == 0
    rec = load_subject(data_root / "S2")
    expected, _ = normalize(rec.ppg)
    got = np.loadtxt(out / "ppg.csv")
    np.testing.assert_array_equal(got, expected)
    assert not (out / "filter.txt").exists()


def test_preprocess_output_is_a_loadable_subject_dir(tmp_path):
    out = tmp_path / "cond"
    assert run(["preprocess", "--subject", "2", "--out", str(out)]) == 0
    rec = load_subject(out)  # validates meta/labels/ppg together
    assert rec.subject_id == 2
    design = design_from_text((out / "filter.txt").read_text())
    assert design.passband_hz == (0.5, 8.0)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "preprocess"
    assert "timestamp" in manifest


def test_preprocess_twice_yields_identical_bytes(tmp_path, data_root):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["preprocess", "--subject", "2", "--out", str(a)])
    run(["preprocess", "--subject", "2", "--out", str(b)])
    assert (a / "ppg.csv").read_bytes() == (b / "ppg.csv").read_bytes()
    n_in = len((data_root / "S2" / "ppg.csv").read_text().splitlines())
    n_out = len((a / "ppg.csv").read_text().splitlines())
    assert n_in == n_out


def test_preprocess_unknown_subject_exits_2(tmp_path, capsys):
    assert run(["preprocess", "--subject", "9", "--out", str(tmp_path / "x")]) == 2
    assert "not a subject directory" in capsys.readouterr().err


# --------------------------------------------------------------------------
# train


def test_train_writes_model_report_manifest(tmp_path):
    out = tmp_path / "run"
    code = run(["train", "--subjects", "2", "--classes", "2", "--seed", "3",
                *FAST, "--out", str(out)])
    assert code == 0
    assert (out / "model.bin").is_file()
    report = TrainReport.from_text((out / "report.txt").read_text())
    assert report.epochs_run <= 12
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == {"seed": 3}
    assert manifest["config"]["frame"] == 64


def test_train_same_seed_bitwise_identical(tmp_path):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert run(["train", "--subjects", "2", "--classes", "2", "--seed", "9",
                    *FAST, "--out", str(out)]) == 0
    assert (outs[0] / "model.bin").read_bytes() == (outs[1] / "model.bin").read_bytes()
    assert (outs[0] / "report.txt").read_bytes() == (outs[1] / "report.txt").read_bytes()


def test_train_unknown_config_key_names_it(tmp_path, capsys):
    code = run(["train", "--subjects", "2", "--classes", "2",
                "--config", "bogus=1", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_train_rejects_an_input_only_stack(tmp_path, capsys):
    code = run(["train", "--subjects", "2", "--classes", "2",
                "--config", "n_cnn=1", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "n_cnn" in capsys.readouterr().err


def test_train_empty_subject_list_exits_2(tmp_path):
    assert run(["train", "--subjects", ",", "--classes", "2",
                "--out", str(tmp_path / "x")]) == 2


def test_train_without_data_root_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("PPGSTRESS_DATA")
    code = run(["train", "--subjects", "2", "--classes", "2", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "PPGSTRESS_DATA" in capsys.readouterr().err


# --------------------------------------------------------------------------
# evaluate


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory, data_root):
    import os
    out = tmp_path_factory.mktemp("trained") / "run"
    old = os.environ.get("PPGSTRESS_DATA")
    os.environ["PPGSTRESS_DATA"] = str(data_root)
    try:
        assert run(["train", "--subjects", "2", "--classes", "2", "--seed", "4",
                    *FAST, "--out", str(out)]) == 0
    finally:
        if old is None:
            os.environ.pop("PPGSTRESS_DATA", None)
        else:
            os.environ["PPGSTRESS_DATA"] = old
    return out


def test_evaluate_agrees_with_the_training_report(trained_run, capsys):
    report = TrainReport.from_text((trained_run / "report.txt").read_text())
    capsys.readouterr()
    code = run(["evaluate", "--model", str(trained_run / "model.bin"), "--subjects", "2"])
    assert code == 0
    stdout = capsys.readouterr().out
    acc_line = next(l for l in stdout.splitlines() if l.startswith("accuracy\t"))
    assert float(acc_line.split("\t")[1]) == report.final_test_accuracy


def test_evaluate_class_count_mismatch_exits_2(trained_run, capsys):
    code = run(["evaluate", "--model", str(trained_run / "model.bin"),
                "--subjects", "2", "--classes", "5"])
    assert code == 2
    assert "classes" in capsys.readouterr().err


def test_evaluate_writes_artifacts_when_asked(trained_run, tmp_path):
    ev = tmp_path / "eval"
    assert run(["evaluate", "--model", str(trained_run / "model.bin"), "--subjects", "2",
                "--out", str(ev)]) == 0
    assert (ev / "eval.txt").is_file() and (ev / "manifest.json").is_file()


# --------------------------------------------------------------------------
# gradcheck


def test_gradcheck_default_passes(capsys):
    assert run(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok") == 5


def test_gradcheck_impossible_tolerance_fails(capsys):
    assert run(["gradcheck", "--tolerance", "0"]) == 3
    assert "failed" in capsys.readouterr().err


# --------------------------------------------------------------------------
# grid


ROW_OK = "row=1 subjects=2 classes=2 n_cnn=2 n_mlp=2 frame=64 filter=16 filtered=no\n"
ROW_BAD = "row=2 subjects=2 classes=2 n_cnn=2 n_mlp=2 frame=60000 filter=16 filtered=no\n"


def test_grid_runs_a_row_file(tmp_path, capsys):
    rows = tmp_path / "rows.txt"
    rows.write_text(ROW_OK)
    out = tmp_path / "grid"
    assert run(["grid", "--rows", str(rows), "--out", str(out)]) == 0
    table = (out / "grid.txt").read_text()
    assert table.splitlines()[0].startswith("row")
    assert len([l for l in table.splitlines() if l and not l.startswith(("row", "-"))]) == 1


def test_grid_keeps_going_past_failures(tmp_path, capsys):
    rows = tmp_path / "rows.txt"
    rows.write_text(ROW_OK + ROW_BAD)
    assert run(["grid", "--rows", str(rows)]) == 3
    out = capsys.readouterr().out
    assert "failed:" in out          # the bad row is reported in place
    assert "error_floor" in out or "max_iterations" in out  # the good row still ran


def test_grid_rejects_malformed_row_file(tmp_path, capsys):
    rows = tmp_path / "rows.txt"
    rows.write_text("row=1 nonsense\n")
    assert run(["grid", "--rows", str(rows)]) == 2


# --------------------------------------------------------------------------
# parser plumbing


def test_unknown_subcommand_exits_2(capsys):
    assert run(["frobnicate"]) == 2


def test_no_arguments_exits_2(capsys):
    assert run([]) == 2
