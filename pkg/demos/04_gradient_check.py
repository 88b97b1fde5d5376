"""Backprop vs central differences, every parameter, a few shapes.

frame_loss is differentiated two ways: analytically by Network.backward and
numerically by wiggling each weight by +-1e-5. If the worst relative
disagreement stays under 1e-4 the hand-derived gradients are right.
"""

import time

import numpy as np

from ppgstress import Network, NetworkConfig, gradient_check

CONFIGS = [
    (2, 2, 2),
    (2, 3, 2),
    (3, 2, 2),
    (3, 3, 3),
]

rng = np.random.default_rng(5)
t0 = time.perf_counter()
for n_conv, n_mlp, n_classes in CONFIGS:
    config = NetworkConfig(
        n_conv=n_conv,
        n_mlp=n_mlp,
        n_classes=n_classes,
        frame_size=32,
        kernel_size=5,
        pool_factor=2,
    )
    net = Network(config, rng=rng)
    frame = rng.standard_normal(32)
    worst = gradient_check(net, frame, class_index=rng.integers(n_classes))
    status = "ok" if worst < 1e-4 else "MISMATCH"
    print(f"conv={n_conv} mlp={n_mlp} classes={n_classes} "
          f"({net.n_parameters():4d} params)  worst rel err {worst:.3e}  {status}")
print(f"\n{time.perf_counter() - t0:.2f} s total")
