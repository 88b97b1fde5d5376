"""A full training run on synthetic frames, plus model file round-trip.

Sines vs noise is easy enough that the stop-at-1%-error rule fires after a
handful of epochs. The saved model file reloads to the exact same weights
and the exact same decisions.
"""

import tempfile
from pathlib import Path

import numpy as np

from ppgstress import (
    Network,
    NetworkConfig,
    TrainConfig,
    evaluate,
    load_model,
    make_sine_vs_noise_frames,
    save_model,
    split_40_60,
    train,
)

frames = make_sine_vs_noise_frames(n_per_class=150, frame_size=64, seed=1)
split = split_40_60(frames)
print(f"{len(split.train)} train / {len(split.test)} test windows")

net = Network(
    NetworkConfig(n_conv=2, n_mlp=2, n_classes=2, frame_size=64, kernel_size=16),
    rng=np.random.default_rng(42),
)
report = train(net, split.train, TrainConfig(shuffle_seed=42), test_frames=split.test)

print(f"\nstopped: {report.stop_reason} after {report.epochs_run} epochs")
for e in report.epochs:
    bar = "#" * int(round(40 * (1.0 - e.class_error)))
    print(f"  epoch {e.epoch:2d}  loss {e.mean_loss:.4f}  "
          f"error {e.class_error:6.1%}  {bar}")
print(f"\ntrain accuracy {report.final_train_accuracy:.1%}, "
      f"test accuracy {report.final_test_accuracy:.1%}")

result = evaluate(net, split.test)
print("\nconfusion on the test side:")
print(result.confusion.to_text())

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.bin"
    save_model(path, net, extra={"note": "demo run"})
    print(f"model file: {path.stat().st_size} bytes")
    loaded, extra = load_model(path)
    same = all(
        np.array_equal(a, b)
        for (_, a), (_, b) in zip(net.parameters(), loaded.parameters())
    )
    print(f"reloaded weights identical: {same}, extra: {extra}")
    redo = evaluate(loaded, split.test)
    print(f"reloaded test accuracy {redo.accuracy:.1%} "
          f"(same: {redo.accuracy == result.accuracy})")
