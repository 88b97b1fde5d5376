"""A compact 1-d convolutional network with a dense tail, written on numpy.

Every convolutional neuron does three things in order: slide its kernels over
the previous layer's signals (valid cross-correlation, stride 1), squash with
tanh, then shrink the result by mean pooling. The final convolutional layer
pools over *everything it has left*, i.e. its pool factor is set to the length
of its own activation at run time, so each of its neurons hands a single
scalar to the dense layers. That one rule makes the network indifferent to
input length: the same weights accept any frame long enough to survive the
valid correlations.

Dense layers are ordinary affine maps with tanh. Class targets live in
{-1, +1} (one +1, rest -1) to match the tanh range, and the per-frame cost is
half the squared distance to that target. Decisions are argmax of the output.

Gradients are computed by hand here, layer by layer; `gradient_check`
compares them against central differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """A network description is internally inconsistent."""


class ModelFormatError(ValueError):
    """A model file is corrupt or from an unknown writer."""


def conv1d_valid(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Sliding dot product keeping only fully-overlapped positions.

    Output length is ``len(x) - len(w) + 1``. The kernel is not flipped;
    flipping, where a derivation wants it, is the caller's business.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 1 or w.ndim != 1:
        raise ValueError("conv1d_valid takes 1-d arrays")
    if w.size > x.size:
        raise ValueError(f"kernel ({w.size}) longer than signal ({x.size})")
    return np.correlate(x, w, mode="valid")


def conv1d_full(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Sliding dot product over every overlap, zero-padded at the ends.

    Output length is ``len(x) + len(w) - 1``.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 1 or w.ndim != 1:
        raise ValueError("conv1d_full takes 1-d arrays")
    return np.correlate(x, w, mode="full")


def subsample(y: np.ndarray, factor: int) -> np.ndarray:
    """Mean over consecutive blocks of ``factor`` samples.

    A short trailing block is averaged over its actual length, so the output
    has ``ceil(len(y) / factor)`` entries and no sample is discarded.
    """
    y = np.asarray(y, dtype=np.float64)
    if factor < 1:
        raise ValueError(f"pool factor must be >= 1, got {factor}")
    if y.ndim == 1:
        return subsample(y[None, :], factor)[0]
    if y.shape[1] == 0:
        raise ValueError("cannot pool an empty signal")
    starts = np.arange(0, y.shape[1], factor)
    lens = np.diff(np.append(starts, y.shape[1]))
    return np.add.reduceat(y, starts, axis=1) / lens


def upsample(d: np.ndarray, factor: int, out_len: int | None = None) -> np.ndarray:
    """Adjoint of :func:`subsample`: spread each value back over its block.

    Each entry is divided by its block's true length and repeated across it,
    so `subsample` followed by `upsample` round-trips gradients exactly.
    """
    d = np.asarray(d, dtype=np.float64)
    if factor < 1:
        raise ValueError(f"pool factor must be >= 1, got {factor}")
    if d.ndim == 1:
        return upsample(d[None, :], factor, out_len)[0]
    n = d.shape[1] * factor if out_len is None else out_len
    starts = np.arange(0, n, factor)
    if starts.size != d.shape[1]:
        raise ValueError(
            f"{d.shape[1]} pooled values cannot cover {n} samples at factor {factor}"
        )
    lens = np.diff(np.append(starts, n))
    return np.repeat(d / lens, lens, axis=1)


def _act(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def _act_prime_from_y(y: np.ndarray) -> np.ndarray:
    return 1.0 - y * y


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of the architecture.

    ``n_mlp`` counts the output layer, so ``n_mlp=1`` means the pooled
    convolutional scalars feed the class read-out directly. ``frame_size``
    is the length the surrounding pipeline cuts frames at; `forward` itself
    accepts any length the shape trace admits.
    """

    n_conv: int
    n_mlp: int
    n_classes: int
    frame_size: int
    kernel_size: int = 16
    pool_factor: int = 2
    conv_width: int = 8
    mlp_width: int = 5

    def __post_init__(self):
        if self.n_conv < 1:
            raise ConfigError(f"need at least 1 convolutional layer, got {self.n_conv}")
        if self.n_mlp < 1:
            raise ConfigError(f"need at least 1 dense layer, got {self.n_mlp}")
        if self.n_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.n_classes}")
        if self.kernel_size < 2:
            raise ConfigError(f"kernel size must be >= 2, got {self.kernel_size}")
        if self.pool_factor < 1:
            raise ConfigError(f"pool factor must be >= 1, got {self.pool_factor}")
        if self.conv_width < 1 or self.mlp_width < 1:
            raise ConfigError("layer widths must be >= 1")
        if self.frame_size < self.kernel_size:
            raise ConfigError(
                f"frame size {self.frame_size} shorter than kernel {self.kernel_size}"
            )
        trace_shapes(self, self.frame_size)

    def conv_layer_widths(self) -> list[int]:
        return [self.conv_width] * self.n_conv

    def mlp_layer_widths(self) -> list[int]:
        return [self.mlp_width] * (self.n_mlp - 1) + [self.n_classes]

    def to_dict(self) -> dict:
        return {
            "n_conv": self.n_conv,
            "n_mlp": self.n_mlp,
            "n_classes": self.n_classes,
            "frame_size": self.frame_size,
            "kernel_size": self.kernel_size,
            "pool_factor": self.pool_factor,
            "conv_width": self.conv_width,
            "mlp_width": self.mlp_width,
        }


@dataclass(frozen=True)
class LayerTrace:
    """Lengths seen by one convolutional layer for a given input length."""

    layer: int
    in_len: int
    conv_len: int
    pool_factor: int
    out_len: int


def trace_shapes(config: NetworkConfig, in_len: int) -> list[LayerTrace]:
    """Walk the convolutional stack symbolically for ``in_len`` samples.

    Raises :class:`ConfigError` naming the first layer whose valid
    correlation would come up empty.
    """
    rows = []
    length = int(in_len)
    for layer in range(config.n_conv):
        conv_len = length - config.kernel_size + 1
        if conv_len < 1:
            raise ConfigError(
                f"conv layer {layer}: input of {length} samples is shorter than "
                f"the {config.kernel_size}-tap kernel"
            )
        last = layer == config.n_conv - 1
        factor = conv_len if last else config.pool_factor
        out_len = -(-conv_len // factor)
        rows.append(LayerTrace(layer, length, conv_len, factor, out_len))
        length = out_len
    return rows


@dataclass
class ForwardState:
    """Everything `forward` computed, kept for the backward pass."""

    conv_inputs: list[np.ndarray]   # per layer: (n_prev, L_in)
    conv_y: list[np.ndarray]        # per layer: (n_k, L_conv), post-tanh
    conv_pool: list[int]            # per layer: effective pool factor
    mlp_inputs: list[np.ndarray]    # per layer: (n_in,)
    mlp_y: list[np.ndarray]         # per layer: (n_out,), post-tanh

    @property
    def output(self) -> np.ndarray:
        return self.mlp_y[-1]


@dataclass
class Gradients:
    """Parameter gradients, shaped exactly like the network's arrays."""

    conv_w: list[np.ndarray]
    conv_b: list[np.ndarray]
    mlp_w: list[np.ndarray]
    mlp_b: list[np.ndarray]


class Network:
    """The model: kernels, biases and dense weights, plus both passes."""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator | None = None):
        self.config = config
        rng = np.random.default_rng(0) if rng is None else rng
        self.conv_w: list[np.ndarray] = []
        self.conv_b: list[np.ndarray] = []
        n_prev = 1
        f = config.kernel_size
        for width in config.conv_layer_widths():
            limit = np.sqrt(6.0 / (n_prev * f + width * f))
            self.conv_w.append(rng.uniform(-limit, limit, size=(n_prev, width, f)))
            self.conv_b.append(np.zeros(width))
            n_prev = width
        self.mlp_w: list[np.ndarray] = []
        self.mlp_b: list[np.ndarray] = []
        for width in config.mlp_layer_widths():
            limit = np.sqrt(6.0 / (n_prev + width))
            self.mlp_w.append(rng.uniform(-limit, limit, size=(n_prev, width)))
            self.mlp_b.append(np.zeros(width))
            n_prev = width

    # -- parameter bookkeeping -------------------------------------------

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(zip(self.conv_w, self.conv_b)):
            out.append((f"conv{i}.w", w))
            out.append((f"conv{i}.b", b))
        for i, (w, b) in enumerate(zip(self.mlp_w, self.mlp_b)):
            out.append((f"mlp{i}.w", w))
            out.append((f"mlp{i}.b", b))
        return out

    def n_parameters(self) -> int:
        return sum(p.size for _, p in self.parameters())

    def gradient_arrays(self, grads: Gradients) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(zip(grads.conv_w, grads.conv_b)):
            out.append((f"conv{i}.w", w))
            out.append((f"conv{i}.b", b))
        for i, (w, b) in enumerate(zip(grads.mlp_w, grads.mlp_b)):
            out.append((f"mlp{i}.w", w))
            out.append((f"mlp{i}.b", b))
        return out

    # -- forward -----------------------------------------------------------

    def forward(self, frame: np.ndarray) -> ForwardState:
        x = np.asarray(frame, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError(f"expected a 1-d frame, got shape {x.shape}")
        trace = trace_shapes(self.config, x.size)
        s = x[None, :]
        conv_inputs, conv_y, conv_pool = [], [], []
        f = self.config.kernel_size
        for layer, (w, b) in enumerate(zip(self.conv_w, self.conv_b)):
            conv_inputs.append(s)
            win = np.lib.stride_tricks.sliding_window_view(s, f, axis=1)
            y = _act(np.einsum("ilf,ikf->kl", win, w) + b[:, None])
            factor = trace[layer].pool_factor
            conv_y.append(y)
            conv_pool.append(factor)
            s = subsample(y, factor)
        v = s.ravel()
        mlp_inputs, mlp_y = [], []
        for w, b in zip(self.mlp_w, self.mlp_b):
            mlp_inputs.append(v)
            v = _act(v @ w + b)
            mlp_y.append(v)
        return ForwardState(conv_inputs, conv_y, conv_pool, mlp_inputs, mlp_y)

    def predict(self, frame: np.ndarray) -> int:
        return int(np.argmax(self.forward(frame).output))

    # -- backward ----------------------------------------------------------

    def backward(self, state: ForwardState, target: np.ndarray) -> Gradients:
        """Gradients of ``frame_loss(output, target)`` w.r.t. every parameter."""
        target = np.asarray(target, dtype=np.float64)
        g_mlp_w, g_mlp_b = [], []
        delta = None
        for li in reversed(range(len(self.mlp_w))):
            y = state.mlp_y[li]
            if li == len(self.mlp_w) - 1:
                ds = y - target
            else:
                ds = self.mlp_w[li + 1] @ delta
            delta = ds * _act_prime_from_y(y)
            g_mlp_w.append(np.outer(state.mlp_inputs[li], delta))
            g_mlp_b.append(delta.copy())
        g_mlp_w.reverse()
        g_mlp_b.reverse()

        # gradient w.r.t. the flattened pooled scalars feeding the dense tail
        d_flat = self.mlp_w[0] @ delta
        ds_pool = d_flat.reshape(self.conv_w[-1].shape[1], -1)

        g_conv_w = [None] * len(self.conv_w)
        g_conv_b = [None] * len(self.conv_b)
        f = self.config.kernel_size
        for li in reversed(range(len(self.conv_w))):
            y = state.conv_y[li]
            s_prev = state.conv_inputs[li]
            factor = state.conv_pool[li]
            dy = upsample(ds_pool, factor, out_len=y.shape[1])
            dx = dy * _act_prime_from_y(y)
            conv_len = y.shape[1]
            win2 = np.lib.stride_tricks.sliding_window_view(s_prev, conv_len, axis=1)
            g_conv_w[li] = np.einsum("imn,kn->ikm", win2, dx)
            g_conv_b[li] = dx.sum(axis=1)
            if li > 0:
                pad = np.zeros((dx.shape[0], f - 1))
                dxp = np.concatenate([pad, dx, pad], axis=1)
                win3 = np.lib.stride_tricks.sliding_window_view(dxp, f, axis=1)
                ds_pool = np.einsum("klf,ikf->il", win3, self.conv_w[li][:, :, ::-1])
        return Gradients(g_conv_w, g_conv_b, g_mlp_w, g_mlp_b)


def target_vector(class_index: int, n_classes: int) -> np.ndarray:
    """One class at +1, every other at -1, matching the tanh output range."""
    if not 0 <= class_index < n_classes:
        raise ValueError(f"class index {class_index} out of range [0, {n_classes})")
    t = -np.ones(n_classes)
    t[class_index] = 1.0
    return t


def frame_loss(output: np.ndarray, target: np.ndarray) -> float:
    """Half squared distance between the output vector and its target."""
    d = np.asarray(output, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return 0.5 * float(d @ d)


def gradient_check(
    net: Network, frame: np.ndarray, class_index: int, h: float = 1e-5
) -> float:
    """Worst relative disagreement between backprop and central differences.

    Every single parameter is perturbed by ±``h``; the relative error uses
    ``max(|analytic|, |numeric|, 1e-8)`` in the denominator so zero gradients
    do not divide by zero.
    """
    target = target_vector(class_index, net.config.n_classes)
    state = net.forward(frame)
    grads = net.backward(state, target)
    analytic = dict(net.gradient_arrays(grads))
    worst = 0.0
    for name, param in net.parameters():
        ga = analytic[name]
        flat = param.ravel()
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + h
            up = frame_loss(net.forward(frame).output, target)
            flat[j] = keep - h
            dn = frame_loss(net.forward(frame).output, target)
            flat[j] = keep
            gn = (up - dn) / (2.0 * h)
            gaj = float(ga.ravel()[j])
            err = abs(gaj - gn) / max(abs(gaj), abs(gn), 1e-8)
            worst = max(worst, err)
    return worst


# -- model files -------------------------------------------------------------

MODEL_MAGIC = b"ACNN1D\n"
MODEL_VERSION = 1


def save_model(path, net: Network, extra: dict | None = None) -> None:
    """Write the model to a self-describing binary file.

    Layout: magic, version, header length, a canonical JSON header (config,
    caller-supplied ``extra`` metadata, array manifest), then the raw float64
    little-endian array bodies in manifest order. Identical models produce
    identical bytes; nothing time- or path-dependent is stored.
    """
    arrays = net.parameters()
    header = json.dumps(
        {
            "config": net.config.to_dict(),
            "extra": extra or {},
            "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(MODEL_VERSION.to_bytes(4, "little"))
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path) -> tuple[Network, dict]:
    """Read a model file back; returns the network and its ``extra`` metadata."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: not a model file (bad magic {magic!r})")
        version = int.from_bytes(fh.read(4), "little")
        if version != MODEL_VERSION:
            raise ModelFormatError(f"{path}: unsupported model version {version}")
        hlen = int.from_bytes(fh.read(8), "little")
        try:
            header = json.loads(fh.read(hlen))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: corrupt header ({exc})") from None
        try:
            config = NetworkConfig(**header["config"])
            manifest = header["arrays"]
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"{path}: incomplete header ({exc})") from None
        net = Network(config, rng=np.random.default_rng(0))
        expected = dict(net.parameters())
        if [m["name"] for m in manifest] != list(expected):
            raise ModelFormatError(f"{path}: array manifest does not match the config")
        for m in manifest:
            shape = tuple(m["shape"])
            if expected[m["name"]].shape != shape:
                raise ModelFormatError(
                    f"{path}: array {m['name']} has shape {shape}, "
                    f"expected {expected[m['name']].shape}"
                )
            n_bytes = int(np.prod(shape)) * 8
            raw = fh.read(n_bytes)
            if len(raw) != n_bytes:
                raise ModelFormatError(f"{path}: truncated array {m['name']}")
            expected[m["name"]][...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        if fh.read(1):
            raise ModelFormatError(f"{path}: trailing bytes after the last array")
    return net, header["extra"]
