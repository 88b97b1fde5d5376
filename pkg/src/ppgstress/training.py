"""Frame-by-frame gradient descent with momentum, plus the run report.

Training is deliberately plain: one frame at a time, immediate update, a
fresh seeded shuffle of the frame order every epoch. The run stops early the
moment the epoch's running classification error reaches the configured floor;
otherwise it runs the full iteration budget. When both happen on the same
epoch the floor wins as the stated reason.

The per-epoch error is the running estimate from that epoch's own pre-update
forwards, so it is cheap (no extra passes) but slightly pessimistic early in
an epoch's learning. Final accuracies in the report come from full re-runs
over the train and test sets with the finished weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FrameSet
from .metrics import EvalResult, evaluate
from .network import Gradients, Network, frame_loss, target_vector


class TrainingDivergedError(ArithmeticError):
    """The loss left the realm of finite numbers."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    max_iterations: int = 200
    min_train_error: float = 0.01
    shuffle_seed: int = 0
    undersample: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_iterations < 1:
            raise ValueError(f"need at least 1 iteration, got {self.max_iterations}")
        if not 0.0 <= self.min_train_error < 1.0:
            raise ValueError(
                f"error floor must be in [0, 1), got {self.min_train_error}"
            )


class MomentumSGD:
    """Classic heavy-ball update: velocity decays, gradient pushes."""

    def __init__(self, net: Network, learning_rate: float, momentum: float):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.velocity = {name: np.zeros_like(p) for name, p in net.parameters()}

    def step(self, net: Network, grads: Gradients) -> None:
        params = dict(net.parameters())
        for name, g in net.gradient_arrays(grads):
            v = self.velocity[name]
            v *= self.momentum
            v -= self.learning_rate * g
            params[name] += v


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    class_error: float


@dataclass
class TrainReport:
    """What a training run did, in a form that round-trips through text."""

    stop_reason: str
    epochs: list[EpochRecord]
    final_train_accuracy: float
    final_test_accuracy: float | None
    n_train: int
    n_test: int
    config: TrainConfig

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)

    def to_text(self) -> str:
        fmt = lambda x: repr(float(x))
        lines = [
            "train report v1",
            f"stop_reason\t{self.stop_reason}",
            f"epochs_run\t{self.epochs_run}",
            f"final_train_accuracy\t{fmt(self.final_train_accuracy)}",
            "final_test_accuracy\t"
            + ("none" if self.final_test_accuracy is None else fmt(self.final_test_accuracy)),
            f"n_train\t{self.n_train}",
            f"n_test\t{self.n_test}",
            f"learning_rate\t{fmt(self.config.learning_rate)}",
            f"momentum\t{fmt(self.config.momentum)}",
            f"max_iterations\t{self.config.max_iterations}",
            f"min_train_error\t{fmt(self.config.min_train_error)}",
            f"shuffle_seed\t{self.config.shuffle_seed}",
            f"undersample\t{'yes' if self.config.undersample else 'no'}",
            "epoch\tmean_loss\tclass_error",
        ]
        lines.extend(
            f"{e.epoch}\t{fmt(e.mean_loss)}\t{fmt(e.class_error)}" for e in self.epochs
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainReport":
        lines = text.splitlines()
        if not lines or lines[0] != "train report v1":
            raise ValueError("not a train report (missing version line)")
        kv = {}
        i = 1
        while i < len(lines) and lines[i] != "epoch\tmean_loss\tclass_error":
            key, _, value = lines[i].partition("\t")
            kv[key] = value
            i += 1
        if i == len(lines):
            raise ValueError("train report has no epoch table")
        epochs = []
        for line in lines[i + 1 :]:
            if not line:
                continue
            e, lo, ce = line.split("\t")
            epochs.append(EpochRecord(int(e), float(lo), float(ce)))
        try:
            config = TrainConfig(
                learning_rate=float(kv["learning_rate"]),
                momentum=float(kv["momentum"]),
                max_iterations=int(kv["max_iterations"]),
                min_train_error=float(kv["min_train_error"]),
                shuffle_seed=int(kv["shuffle_seed"]),
                undersample=kv["undersample"] == "yes",
            )
            test_acc = kv["final_test_accuracy"]
            return cls(
                stop_reason=kv["stop_reason"],
                epochs=epochs,
                final_train_accuracy=float(kv["final_train_accuracy"]),
                final_test_accuracy=None if test_acc == "none" else float(test_acc),
                n_train=int(kv["n_train"]),
                n_test=int(kv["n_test"]),
                config=config,
            )
        except KeyError as exc:
            raise ValueError(f"train report missing field {exc}") from None


def undersample_frames(frames: FrameSet, rng: np.random.Generator) -> FrameSet:
    """Seeded static rebalancing: trim every class to the smallest class's size."""
    by_class: dict[int, list[int]] = {}
    for i, f in enumerate(frames.frames):
        by_class.setdefault(f.class_index, []).append(i)
    smallest = min(len(v) for v in by_class.values())
    keep: list[int] = []
    for c in sorted(by_class):
        idx = np.array(by_class[c], dtype=np.int64)
        keep.extend(rng.permutation(idx)[:smallest].tolist())
    keep.sort()
    return FrameSet(
        [frames.frames[i] for i in keep],
        frames.class_map,
        frames.frame_size,
        frames.hop,
    )


def train(
    net: Network,
    train_frames: FrameSet,
    config: TrainConfig = TrainConfig(),
    test_frames: FrameSet | None = None,
) -> TrainReport:
    """Fit ``net`` in place on ``train_frames``; returns the run report."""
    if len(train_frames) == 0:
        raise ValueError("cannot train on an empty frame set")
    if net.config.n_classes != train_frames.class_map.n_classes:
        raise ValueError(
            f"model has {net.config.n_classes} outputs but the frames carry "
            f"{train_frames.class_map.n_classes} classes"
        )
    rng = np.random.default_rng(config.shuffle_seed)
    if config.undersample:
        train_frames = undersample_frames(train_frames, rng)
    frames = train_frames.frames
    targets = [target_vector(f.class_index, net.config.n_classes) for f in frames]
    opt = MomentumSGD(net, config.learning_rate, config.momentum)
    records: list[EpochRecord] = []
    stop_reason = "max_iterations"
    for epoch in range(1, config.max_iterations + 1):
        order = rng.permutation(len(frames))
        loss_sum = 0.0
        n_wrong = 0
        for fi in order:
            state = net.forward(frames[fi].samples)
            loss = frame_loss(state.output, targets[fi])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, frame {int(fi)} "
                    f"(try a smaller learning rate)"
                )
            loss_sum += loss
            if int(np.argmax(state.output)) != frames[fi].class_index:
                n_wrong += 1
            opt.step(net, net.backward(state, targets[fi]))
        class_error = n_wrong / len(frames)
        records.append(EpochRecord(epoch, loss_sum / len(frames), class_error))
        if class_error <= config.min_train_error:
            stop_reason = "error_floor"
            break
    train_eval: EvalResult = evaluate(net, train_frames)
    test_eval = evaluate(net, test_frames) if test_frames and len(test_frames) else None
    return TrainReport(
        stop_reason=stop_reason,
        epochs=records,
        final_train_accuracy=train_eval.accuracy,
        final_test_accuracy=None if test_eval is None else test_eval.accuracy,
        n_train=len(train_frames),
        n_test=0 if test_frames is None else len(test_frames),
        config=config,
    )
