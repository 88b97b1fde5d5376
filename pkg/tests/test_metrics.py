import numpy as np
import pytest

from ppgstress.dataset import ClassMap, ClassMode, Frame, FrameSet
from ppgstress.metrics import (
    DEFAULT_GRID,
    ConfusionMatrix,
    GridResult,
    GridRow,
    evaluate,
    parse_rows_text,
    render_grid,
    rows_to_text,
)


class FixedPredictor:
    """Stands in for a network: predicts from a lookup of frame starts."""

    def __init__(self, n_classes, answers):
        from ppgstress.network import NetworkConfig
        self.config = NetworkConfig(n_conv=1, n_mlp=1, n_classes=n_classes,
                                    frame_size=16, kernel_size=4)
        self._answers = answers

    def predict(self, samples):
        return self._answers[int(samples[0])]


def test_confusion_matrix_tallies():
    cm = ConfusionMatrix(("a", "b"))
    for true, pred in [(0, 0), (0, 1), (1, 1), (1, 1), (0, 0)]:
        cm.update(true, pred)
    assert cm.total == 5
    assert cm.accuracy() == pytest.approx(4 / 5)
    assert cm.per_class_recall() == {"a": pytest.approx(2 / 3), "b": pytest.approx(1.0)}
    np.testing.assert_array_equal(cm.counts, [[2, 1], [0, 2]])


def test_confusion_matrix_render_alignment():
    cm = ConfusionMatrix(("short", "a-longer-name"))
    cm.update(0, 1)
    text = cm.to_text()
    lines = text.splitlines()
    assert len(lines) == 3
    assert len(set(len(line) for line in lines[1:])) == 1  # data rows align


def test_evaluate_counts_argmax_decisions():
    cmap = ClassMap.for_mode(ClassMode.TWO)
    frames = FrameSet(
        [Frame(np.full(16, float(i)), i % 2, 2, i) for i in range(10)],
        cmap, 16, 16,
    )
    # predict class 1 for every frame: half right
    net = FixedPredictor(2, {i: 1 for i in range(10)})
    result = evaluate(net, frames)
    assert result.accuracy == pytest.approx(0.5)
    assert result.n_frames == 10
    np.testing.assert_array_equal(result.confusion.counts, [[0, 5], [0, 5]])


def test_evaluate_rejects_empty_or_mismatched():
    cmap = ClassMap.for_mode(ClassMode.TWO)
    empty = FrameSet([], cmap, 16, 16)
    net = FixedPredictor(2, {})
    with pytest.raises(ValueError, match="empty"):
        evaluate(net, empty)
    frames = FrameSet([Frame(np.zeros(16), 0, 2, 0)], cmap, 16, 16)
    with pytest.raises(ValueError, match="classes"):
        evaluate(FixedPredictor(5, {}), frames)


def test_default_grid_mirrors_the_benchmark_table():
    assert len(DEFAULT_GRID) == 11
    by_row = {r.row: r for r in DEFAULT_GRID}
    assert by_row[1].subjects == (2,) and not by_row[1].filtered
    assert by_row[4].frame_size == 64 and by_row[4].kernel_size == 16 and by_row[4].filtered
    assert by_row[7].subjects == (8, 15)
    assert by_row[10].subjects == "all" and by_row[10].mode is ClassMode.TWO
    assert by_row[11].mode is ClassMode.FIVE
    assert by_row[2].kernel_assumed and by_row[3].kernel_assumed
    # class counts across the table
    assert sorted(r.mode.value for r in DEFAULT_GRID) == [2, 2, 2, 2, 3, 3, 3, 5, 5, 5, 5]


def test_grid_row_requires_an_input_stage():
    with pytest.raises(ValueError, match="n_cnn"):
        GridRow(1, (2,), ClassMode.TWO, 1, 2, 64, 16, filtered=True)


def test_rows_text_roundtrip():
    text = rows_to_text(DEFAULT_GRID)
    back = parse_rows_text(text)
    assert back == DEFAULT_GRID


def test_rows_text_validation():
    with pytest.raises(ValueError, match="missing key 'frame'"):
        parse_rows_text("row=1 subjects=2 classes=2 n_cnn=2 n_mlp=3 filter=16 filtered=no\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_rows_text(
            "row=1 subjects=2 classes=2 n_cnn=2 n_mlp=3 frame=64 filter=16 "
            "filtered=no color=red\n"
        )
    with pytest.raises(ValueError, match="bad subjects"):
        parse_rows_text(
            "row=1 subjects=two classes=2 n_cnn=2 n_mlp=3 frame=64 filter=16 filtered=no\n"
        )
    with pytest.raises(ValueError, match="no rows"):
        parse_rows_text("# nothing here\n")


def test_render_grid_reports_results_and_failures():
    ok = GridResult(DEFAULT_GRID[0], train_accuracy=0.957, test_accuracy=0.946,
                    n_train=100, n_test=150, epochs_run=42, stop_reason="error_floor")
    bad = GridResult(DEFAULT_GRID[1], error="SplitError: class 'stress' has empty test side")
    text = render_grid([ok, bad])
    lines = text.splitlines()
    assert lines[0].split() == list(
        ("row", "subjects", "classes", "n_cnn", "n_mlp", "frame",
         "filter", "filtered", "train_acc", "test_acc", "epochs", "stop")
    )
    assert "95.7%" in text and "94.6%" in text
    assert "failed: SplitError" in text
    assert "16*" in text  # assumed kernel flagged
    assert "* kernel size assumed" in text
