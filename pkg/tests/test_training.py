import numpy as np
import pytest

from ppgstress.dataset import ClassMap, Frame, FrameSet
from ppgstress.network import Network, NetworkConfig
from ppgstress.synthetic import make_sine_vs_noise_frames
from ppgstress.training import (
    TrainConfig,
    TrainingDivergedError,
    TrainReport,
    train,
    undersample_frames,
)


def small_net(seed=0, n_classes=2, frame_size=32):
    cfg = NetworkConfig(n_conv=2, n_mlp=2, n_classes=n_classes,
                        frame_size=frame_size, kernel_size=8, pool_factor=2)
    return Network(cfg, rng=np.random.default_rng(seed))


def test_train_reaches_error_floor_on_separable_data():
    frames = make_sine_vs_noise_frames(n_per_class=40, frame_size=32, seed=1)
    net = small_net(seed=2)
    report = train(net, frames, TrainConfig(shuffle_seed=3))
    assert report.stop_reason == "error_floor"
    assert report.epochs[-1].class_error <= 0.01
    assert report.final_train_accuracy > 0.95
    assert report.n_train == 80 and report.n_test == 0


def test_train_respects_iteration_budget():
    # random labels cannot be learned, so the budget is what stops it
    rng = np.random.default_rng(4)
    cmap = ClassMap.for_mode(2)
    frames = FrameSet(
        [Frame(rng.standard_normal(32), int(rng.integers(2)), 2, 32 * i) for i in range(30)],
        cmap, 32, 32,
    )
    report = train(small_net(5), frames, TrainConfig(max_iterations=3, shuffle_seed=6))
    assert report.stop_reason == "max_iterations"
    assert report.epochs_run == 3


def test_error_floor_wins_when_both_hit_on_the_same_epoch():
    frames = make_sine_vs_noise_frames(n_per_class=10, frame_size=32, seed=7)
    report = train(
        small_net(8), frames,
        TrainConfig(max_iterations=1, min_train_error=0.99, shuffle_seed=9),
    )
    assert report.epochs_run == 1
    assert report.stop_reason == "error_floor"


def test_train_is_deterministic():
    frames = make_sine_vs_noise_frames(n_per_class=20, frame_size=32, seed=10)
    runs = []
    for _ in range(2):
        net = small_net(seed=11)
        report = train(net, frames, TrainConfig(max_iterations=5, shuffle_seed=12))
        runs.append((report.to_text(), [p.copy() for _, p in net.parameters()]))
    assert runs[0][0] == runs[1][0]
    for a, b in zip(runs[0][1], runs[1][1]):
        np.testing.assert_array_equal(a, b)


def test_different_shuffle_seed_changes_the_path():
    frames = make_sine_vs_noise_frames(n_per_class=20, frame_size=32, seed=10)
    texts = set()
    for seed in (1, 2):
        net = small_net(seed=11)
        texts.add(train(net, frames, TrainConfig(max_iterations=3,
                                                 min_train_error=0.0,
                                                 shuffle_seed=seed)).to_text())
    assert len(texts) == 2


def test_train_raises_on_nonfinite_loss():
    frames = make_sine_vs_noise_frames(n_per_class=5, frame_size=32, seed=13)
    net = small_net(14)
    net.conv_w[0][0, 0, 0] = np.nan
    with pytest.raises(TrainingDivergedError, match="epoch 1"):
        train(net, frames, TrainConfig(shuffle_seed=15))


def test_train_rejects_mismatched_class_count():
    frames = make_sine_vs_noise_frames(n_per_class=5, frame_size=32, seed=16)
    with pytest.raises(ValueError, match="classes"):
        train(small_net(17, n_classes=5), frames)


def test_train_config_validation():
    TrainConfig()  # defaults fine
    for kw in ({"learning_rate": 0.0}, {"momentum": 1.0}, {"momentum": -0.1},
               {"max_iterations": 0}, {"min_train_error": 1.0}):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


def test_report_text_roundtrip():
    frames = make_sine_vs_noise_frames(n_per_class=15, frame_size=32, seed=18)
    report = train(small_net(19), frames, TrainConfig(max_iterations=4, shuffle_seed=20))
    back = TrainReport.from_text(report.to_text())
    assert back == report
    assert back.to_text() == report.to_text()


def test_report_text_roundtrip_without_test_side():
    report = TrainReport(
        stop_reason="max_iterations",
        epochs=[],
        final_train_accuracy=0.5,
        final_test_accuracy=None,
        n_train=10,
        n_test=0,
        config=TrainConfig(),
    )
    # an empty epoch table cannot happen from train(), but the format allows it
    text = report.to_text()
    assert "final_test_accuracy\tnone" in text
    assert TrainReport.from_text(text) == report


def test_report_rejects_foreign_text():
    with pytest.raises(ValueError):
        TrainReport.from_text("hello\nworld\n")


def test_undersample_balances_to_smallest_class():
    rng = np.random.default_rng(21)
    cmap = ClassMap.for_mode(2)
    frames = FrameSet(
        [Frame(rng.standard_normal(16), 0, 2, 16 * i) for i in range(50)]
        + [Frame(rng.standard_normal(16), 1, 2, 16 * i) for i in range(7)],
        cmap, 16, 16,
    )
    balanced = undersample_frames(frames, np.random.default_rng(22))
    counts = balanced.frame_count_by_class()
    assert counts == {"non-stress": 7, "stress": 7}
    # deterministic given the same generator state
    again = undersample_frames(frames, np.random.default_rng(22))
    assert [f.start_index for f in again.frames] == [f.start_index for f in balanced.frames]


def test_undersample_option_shrinks_training_set():
    rng = np.random.default_rng(23)
    cmap = ClassMap.for_mode(2)
    frames = FrameSet(
        [Frame(rng.standard_normal(32), 0, 2, 32 * i) for i in range(30)]
        + [Frame(rng.standard_normal(32), 1, 2, 32 * i) for i in range(10)],
        cmap, 32, 32,
    )
    report = train(
        small_net(24), frames,
        TrainConfig(max_iterations=2, min_train_error=0.0, shuffle_seed=25, undersample=True),
    )
    assert report.n_train == 20


def test_final_accuracies_come_from_reevaluation():
    frames = make_sine_vs_noise_frames(n_per_class=25, frame_size=32, seed=26)
    net = small_net(27)
    report = train(net, frames, TrainConfig(max_iterations=6, shuffle_seed=28),
                   test_frames=frames)
    # same frames on both sides: the two numbers must agree exactly
    assert report.final_test_accuracy == report.final_train_accuracy
    assert report.n_test == len(frames)
