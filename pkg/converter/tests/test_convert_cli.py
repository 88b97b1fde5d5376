import numpy as np
import pytest

from wesad_convert.cli import run

from test_convert import SCHEDULE, make_archive


def test_convert_one_archive(tmp_path, capsys):
    path = make_archive(tmp_path, 2, SCHEDULE)
    out = tmp_path / "converted"
    assert run(["--out", str(out), str(path)]) == 0
    text = capsys.readouterr().out
    assert "subject 2" in text
    assert "baseline" in text
    assert (out / "S2" / "ppg.csv").is_file()
    # synthetic counts cannot match the published subject-2 tallies,
    # so the tripwire notes must fire
    assert "note:" in text
    assert "published" in text


def test_bad_archive_does_not_stop_the_rest(tmp_path, capsys):
    good = make_archive(tmp_path, 4, SCHEDULE)
    bad = tmp_path / "S9.pkl"
    bad.write_text("junk")
    out = tmp_path / "converted"
    assert run(["--out", str(out), str(bad), str(good)]) == 2
    captured = capsys.readouterr()
    assert "not a readable pickle" in captured.err
    assert "subject 4" in captured.out
    assert (out / "S4" / "meta.txt").is_file()
    assert not (out / "S9").exists()


def test_discarded_subject_is_refused(tmp_path, capsys):
    path = make_archive(tmp_path, 12, SCHEDULE)
    assert run(["--out", str(tmp_path / "out"), str(path)]) == 2
    assert "excluded" in capsys.readouterr().err


def test_default_out_is_cwd(tmp_path, monkeypatch):
    path = make_archive(tmp_path, 6, SCHEDULE)
    workdir = tmp_path / "work"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    assert run([str(path)]) == 0
    assert (workdir / "S6" / "ppg.csv").is_file()


def test_no_arguments_is_a_usage_error(capsys):
    assert run([]) == 2
    capsys.readouterr()


def test_folded_labels_reported(tmp_path, capsys):
    path = make_archive(tmp_path, 7, SCHEDULE + [(7, 2.0)])
    assert run(["--out", str(tmp_path / "out"), str(path)]) == 0
    text = capsys.readouterr().out
    assert "folded" in text
    written = np.loadtxt(tmp_path / "out" / "S7" / "labels.csv", dtype=np.int64)
    assert written.max() <= 4
