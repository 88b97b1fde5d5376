"""One network, many input lengths.

The last convolutional stage pools over however many samples reach it, so
the classifier head always sees one number per kernel. That makes the same
weights usable on 32-sample windows and 256-sample windows alike. This
script traces the shapes and proves the head input width never moves.
"""

import numpy as np

from ppgstress import Network, NetworkConfig, trace_shapes

config = NetworkConfig(
    n_conv=2,
    n_mlp=2,
    n_classes=2,
    frame_size=64,
    kernel_size=5,
    pool_factor=2,
    conv_width=8,
)
net = Network(config, rng=np.random.default_rng(11))
print(f"network: {config.n_conv} conv layers of {config.conv_width} kernels "
      f"({config.kernel_size} taps), head widths {config.mlp_layer_widths()}")
print(f"{net.n_parameters()} parameters\n")

rng = np.random.default_rng(0)
for length in (32, 64, 128, 256):
    print(f"input of {length} samples:")
    for t in trace_shapes(config, length):
        tail = " (pools everything)" if t.pool_factor == t.conv_len else ""
        print(f"  conv {t.layer}: {t.in_len} -> correlate -> {t.conv_len} "
              f"-> pool/{t.pool_factor} -> {t.out_len}{tail}")
    state = net.forward(rng.standard_normal(length))
    head_in = state.mlp_inputs[0]
    print(f"  head sees {head_in.shape[0]} values, "
          f"output {np.array2string(state.output, precision=3)}, "
          f"decision class {int(np.argmax(state.output))}\n")

# too-short inputs fail loudly instead of silently mangling shapes
try:
    net.forward(np.zeros(4))
except Exception as exc:
    print(f"4 samples: {type(exc).__name__}: {exc}")
