"""Network topologies, inference, and the ``.gsm`` model file format.

Four shallow fully-convolutional topologies are provided. All map a
(rings, columns) frame to a same-size two-channel logit map; strides reduce
only the horizontal dimension and a single transposed convolution restores
it where used.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..encoder import NUM_CHANNELS, DenseFrame
from ..errors import ConfigError, CorruptModelError, MalformedFileError, ShapeError, StateError
from . import ops

CONV = "conv"
DECONV = "deconv"
RELU = "relu"

L05_DECONV = "L05_DECONV"
L04_CONV_DEC = "L04_CONV_DEC"
L03_DECONV_INC = "L03_DECONV_INC"
L03_DECONV_INC_MULTICH = "L03_DECONV_INC_MULTICH"

REFERENCE_SHAPE = (64, 360)

_GSM_MAGIC = b"GSM1"
_GSM_VERSION = 1
_KIND_CODES = {CONV: 0, DECONV: 1, RELU: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kernel: tuple[int, int] | None = None
    in_channels: int | None = None
    out_channels: int | None = None
    stride: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind == RELU:
            if any(v is not None for v in (self.kernel, self.in_channels,
                                           self.out_channels, self.stride)):
                raise ConfigError("relu layers take no parameters")
            return
        if self.kind not in (CONV, DECONV):
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if None in (self.kernel, self.in_channels, self.out_channels, self.stride):
            raise ConfigError(f"{self.kind} layers need kernel, channels, and stride")
        if any(s not in (1, 2) for s in self.stride):
            raise ConfigError(f"stride components must be 1 or 2, got {self.stride}")

    def kernel_shape(self) -> tuple[int, int, int, int]:
        kh, kw = self.kernel
        if self.kind == CONV:
            return (self.out_channels, self.in_channels, kh, kw)
        return (self.in_channels, self.out_channels, kh, kw)


def spatial_output_shape(layers, shape: tuple[int, int]) -> tuple[int, int]:
    """Spatial shape after the layer stack; raises on stride indivisibility."""
    h, w = shape
    for spec in layers:
        if spec.kind == RELU:
            continue
        sv, sh = spec.stride
        if spec.kind == CONV:
            if h % sv or w % sh:
                raise ShapeError(f"({h}, {w}) not divisible by stride ({sv}, {sh})")
            h, w = h // sv, w // sh
        else:
            h, w = h * sv, w * sh
    return (h, w)


@dataclass
class NetworkSpec:
    """An ordered layer stack with its weights.

    ``weights[i]`` is a (kernel, bias) pair for parametric layers and None
    for relu. Channel chaining and the same-size spatial contract at the
    reference shape are validated at construction.
    """

    name: str
    layers: list[LayerSpec]
    weights: list[tuple[np.ndarray, np.ndarray] | None] = field(repr=False, default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.layers):
            raise ConfigError("one weight slot per layer required")
        ch = NUM_CHANNELS
        for spec, w in zip(self.layers, self.weights):
            if spec.kind == RELU:
                if w is not None:
                    raise ConfigError("relu layers carry no weights")
                continue
            if spec.in_channels != ch:
                raise ConfigError(
                    f"layer expects {spec.in_channels} channels but receives {ch}")
            ch = spec.out_channels
            kernel, bias = w
            if kernel.shape != spec.kernel_shape():
                raise ConfigError(f"kernel shape {kernel.shape} != spec {spec.kernel_shape()}")
            if bias.shape != (spec.out_channels,):
                raise ConfigError(f"bias shape {bias.shape} != ({spec.out_channels},)")
        if ch != 2:
            raise ConfigError(f"network must emit 2 logit channels, emits {ch}")
        if spatial_output_shape(self.layers, REFERENCE_SHAPE) != REFERENCE_SHAPE:
            raise ConfigError("layer stack does not preserve the frame size")

    def copy(self) -> "NetworkSpec":
        return NetworkSpec(self.name, list(self.layers),
                           [None if w is None else (w[0].copy(), w[1].copy())
                            for w in self.weights])

    def num_parameters(self) -> int:
        return sum(w[0].size + w[1].size for w in self.weights if w is not None)


@dataclass
class ProbabilityMap:
    """Per-cell ground probability; the non-ground probability is 1 - p."""

    p_ground: np.ndarray

    def __post_init__(self):
        self.p_ground = np.asarray(self.p_ground, dtype=np.float64)


def _conv(kernel: int, cin: int, cout: int, stride=(1, 1)) -> LayerSpec:
    return LayerSpec(CONV, (kernel, kernel), cin, cout, tuple(stride))


def _deconv(kernel: int, cin: int, cout: int, stride=(1, 1)) -> LayerSpec:
    return LayerSpec(DECONV, (kernel, kernel), cin, cout, tuple(stride))


_RELU = LayerSpec(RELU)

# Layer tables for the four topologies. Strides halve/restore only the
# horizontal (azimuth) dimension; rows are few and keep full resolution.
_TOPOLOGIES: dict[str, list[LayerSpec]] = {
    L05_DECONV: [
        _conv(5, 3, 32), _RELU,
        _conv(5, 32, 32, (1, 2)), _RELU,
        _conv(3, 32, 64), _RELU,
        _conv(3, 64, 64), _RELU,
        _conv(3, 64, 64), _RELU,
        _deconv(4, 64, 2, (1, 2)),
    ],
    L04_CONV_DEC: [
        _conv(7, 3, 16), _RELU,
        _conv(5, 16, 32), _RELU,
        _conv(3, 32, 32), _RELU,
        _conv(3, 32, 2),
    ],
    L03_DECONV_INC: [
        _conv(3, 3, 16), _RELU,
        _conv(5, 16, 24, (1, 2)), _RELU,
        _conv(7, 24, 32), _RELU,
        _deconv(4, 32, 2, (1, 2)),
    ],
    L03_DECONV_INC_MULTICH: [
        _conv(3, 3, 64), _RELU,
        _conv(5, 64, 96, (1, 2)), _RELU,
        _conv(7, 96, 128), _RELU,
        _deconv(4, 128, 2, (1, 2)),
    ],
}

TOPOLOGY_NAMES = tuple(_TOPOLOGIES)


def build_topology(name: str, rng_seed: int = 0) -> NetworkSpec:
    """Instantiate a named topology with seeded fan-in-scaled uniform weights."""
    if name not in _TOPOLOGIES:
        raise ConfigError(f"unknown topology {name!r}; known: {', '.join(TOPOLOGY_NAMES)}")
    rng = np.random.default_rng(rng_seed)
    layers = _TOPOLOGIES[name]
    weights = []
    for spec in layers:
        if spec.kind == RELU:
            weights.append(None)
            continue
        fan_in = spec.in_channels * spec.kernel[0] * spec.kernel[1]
        a = np.sqrt(3.0 / fan_in)
        kernel = rng.uniform(-a, a, spec.kernel_shape())
        weights.append((kernel, np.zeros(spec.out_channels)))
    return NetworkSpec(name, list(layers), weights)


def forward_layers(net: NetworkSpec, x: np.ndarray, keep_inputs: bool = False,
                   ws: ops.Workspace | None = None) -> tuple[np.ndarray, list]:
    """Run the stack on a (batch, 3, rows, cols) tensor, returning logits.

    With ``keep_inputs`` each layer's input (and, for convolutions, its
    column buffer) is returned so the backward pass can reuse them. A
    workspace recycles the large scratch buffers across iterations; every
    layer gets its own tag so live tensors never share a buffer.
    """
    cache: list = []
    for i, (spec, w) in enumerate(zip(net.layers, net.weights)):
        if spec.kind == CONV:
            cols = ops.im2col(x, spec.kernel, spec.stride, ws, f"L{i}") \
                if keep_inputs else None
            if keep_inputs:
                cache.append((x, cols))
            x = ops.conv2d_forward(x, w[0], w[1], spec.stride, cols=cols,
                                   ws=ws, tag=f"L{i}")
        elif spec.kind == DECONV:
            if keep_inputs:
                cache.append((x, None))
            x = ops.deconv2d_forward(x, w[0], w[1], spec.stride, ws=ws, tag=f"L{i}")
        else:
            if keep_inputs:
                cache.append((x, None))
            x = ops.relu(x)
    return x, cache


def backward_layers(net: NetworkSpec, cache: list, grad: np.ndarray,
                    ws: ops.Workspace | None = None) -> list:
    """Backpropagate a logit gradient; returns per-layer (gk, gb) or None."""
    grads: list = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        spec, w = net.layers[i], net.weights[i]
        x, cols = cache[i]
        if spec.kind == CONV:
            grad, gk, gb = ops.conv2d_backward(grad, x, w[0], spec.stride,
                                               cols=cols, ws=ws, tag=f"L{i}")
            grads[i] = (gk, gb)
        elif spec.kind == DECONV:
            grad, gk, gb = ops.deconv2d_backward(grad, x, w[0], spec.stride,
                                                 ws=ws, tag=f"L{i}")
            grads[i] = (gk, gb)
        else:
            grad = ops.relu_backward(grad, x)
    return grads


def forward(net: NetworkSpec, frame: DenseFrame) -> ProbabilityMap:
    """Ground-probability map for one normalized frame."""
    if not frame.normalized:
        raise StateError("normalize the frame before inference")
    logits, _ = forward_layers(net, frame.values[None])
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    p = e[:, 1] / (e[:, 0] + e[:, 1])
    return ProbabilityMap(p[0])


def save_model(net: NetworkSpec, path: str | Path) -> None:
    name = net.name.encode()
    parts = [_GSM_MAGIC, struct.pack("<IH", _GSM_VERSION, len(name)), name,
             struct.pack("<H", len(net.layers))]
    for spec in net.layers:
        if spec.kind == RELU:
            parts.append(struct.pack("<BHHHHBB", _KIND_CODES[RELU], 0, 0, 0, 0, 0, 0))
        else:
            parts.append(struct.pack(
                "<BHHHHBB", _KIND_CODES[spec.kind], spec.kernel[0], spec.kernel[1],
                spec.in_channels, spec.out_channels, spec.stride[0], spec.stride[1]))
    for w in net.weights:
        if w is not None:
            parts.append(w[0].astype("<f8").tobytes())
            parts.append(w[1].astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path: str | Path) -> NetworkSpec:
    path = Path(path)
    blob = path.read_bytes()

    def take(n: int, off: int) -> tuple[bytes, int]:
        if off + n > len(blob):
            raise MalformedFileError(f"{path}: truncated model file")
        return blob[off:off + n], off + n

    head, off = take(10, 0)
    if head[:4] != _GSM_MAGIC:
        raise MalformedFileError(f"{path}: not a model file")
    version, name_len = struct.unpack("<IH", head[4:])
    if version != _GSM_VERSION:
        raise MalformedFileError(f"{path}: unsupported model version {version}")
    raw_name, off = take(name_len, off)
    name = raw_name.decode()
    raw_count, off = take(2, off)
    (layer_count,) = struct.unpack("<H", raw_count)
    layers = []
    for _ in range(layer_count):
        raw, off = take(11, off)
        kind, kh, kw, cin, cout, sv, sh = struct.unpack("<BHHHHBB", raw)
        if kind not in _KIND_NAMES:
            raise MalformedFileError(f"{path}: unknown layer kind byte {kind}")
        if _KIND_NAMES[kind] == RELU:
            layers.append(LayerSpec(RELU))
        else:
            layers.append(LayerSpec(_KIND_NAMES[kind], (kh, kw), cin, cout, (sv, sh)))
    weights = []
    for spec in layers:
        if spec.kind == RELU:
            weights.append(None)
            continue
        shape = spec.kernel_shape()
        ksize = int(np.prod(shape))
        raw, off = take(8 * ksize, off)
        kernel = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
        raw, off = take(8 * spec.out_channels, off)
        bias = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        weights.append((kernel, bias))
    if off != len(blob):
        raise MalformedFileError(f"{path}: {len(blob) - off} trailing bytes")
    if name in _TOPOLOGIES and layers != _TOPOLOGIES[name]:
        raise CorruptModelError(f"{path}: layer table does not match topology {name}")
    try:
        return NetworkSpec(name, layers, weights)
    except ConfigError as exc:
        raise CorruptModelError(f"{path}: {exc}") from exc
