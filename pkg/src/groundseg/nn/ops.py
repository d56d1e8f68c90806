"""Dense-tensor layer operations with hand-written gradients.

Tensors are plain float64 numpy arrays shaped (batch, channels, rows, cols).
Padding is "same with stride": output spatial dims equal input dims divided
by the stride. The horizontal axis is azimuth and wraps, so horizontal
padding is circular; the vertical axis is the ring index and is zero-padded.

Convolution is lowered to one batched matrix product over an explicit
column buffer (one row block per kernel tap). Transposed convolution is the
exact adjoint of the convolution under the same padding scheme, so its
forward pass is the convolution's input gradient with the kernel roles
fixed.

The training loop repeats identical shapes every iteration, where fresh
allocation of the multi-hundred-megabyte column buffers costs more in page
faults than the matrix products themselves; a ``Workspace`` passed by the
caller recycles them. All operations also run without one.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyMaskError, ShapeError


class Workspace:
    """Reusable scratch buffers keyed by name and shape.

    Keys must be unique per simultaneous use: two live tensors may share a
    buffer only if their lifetimes do not overlap within one training
    iteration. Layer-tagged names from the model guarantee that.
    """

    def __init__(self):
        self._buffers: dict = {}

    def buffer(self, name: str, shape: tuple, zero_on_create: bool = False) -> np.ndarray:
        key = (name, shape)
        buf = self._buffers.get(key)
        if buf is None:
            buf = np.zeros(shape) if zero_on_create else np.empty(shape)
            self._buffers[key] = buf
        return buf

    def zeros(self, name: str, shape: tuple) -> np.ndarray:
        key = (name, shape)
        buf = self._buffers.get(key)
        if buf is None:
            buf = np.zeros(shape)
            self._buffers[key] = buf
        else:
            buf[:] = 0.0
        return buf


def same_pads(kernel: int, stride: int) -> tuple[int, int]:
    """(before, after) padding so that output size = input size / stride."""
    if kernel < stride:
        raise ShapeError(f"kernel {kernel} smaller than stride {stride}")
    total = kernel - stride
    return total // 2, total - total // 2


def _pad_geometry(kernel_hw, stride):
    pt, pb = same_pads(kernel_hw[0], stride[0])
    pl, pr = same_pads(kernel_hw[1], stride[1])
    return pt, pb, pl, pr


def pad_input(x: np.ndarray, kernel_hw: tuple[int, int],
              stride: tuple[int, int], ws: Workspace | None = None) -> np.ndarray:
    """Zero-pad rows and circular-pad columns for a same-size convolution.

    The vertical margins of a recycled buffer are written only once (they
    stay zero), so the pad buffer may be shared by every call with the same
    geometry.
    """
    pt, pb, pl, pr = _pad_geometry(kernel_hw, stride)
    b, c, h, w = x.shape
    shape = (b, c, h + pt + pb, w + pl + pr)
    if ws is None:
        out = np.zeros(shape)
    else:
        # the vertical margins are zeroed at creation and never rewritten,
        # so the same buffer serves every call with this geometry
        out = ws.buffer(f"pad{pt},{pb},{pl},{pr}", shape, zero_on_create=True)
    out[:, :, pt:pt + h, pl:pl + w] = x
    if pl:
        out[:, :, pt:pt + h, :pl] = x[:, :, :, w - pl:]
    if pr:
        out[:, :, pt:pt + h, pl + w:] = x[:, :, :, :pr]
    return out


def fold_padding(gpad: np.ndarray, kernel_hw: tuple[int, int],
                 stride: tuple[int, int], out_hw: tuple[int, int],
                 out: np.ndarray | None = None) -> np.ndarray:
    """Adjoint of ``pad_input``: sum circular duplicates back, drop zero rows."""
    pt, _, pl, pr = _pad_geometry(kernel_hw, stride)
    h, w = out_hw
    core = gpad[:, :, pt:pt + h, pl:pl + w]
    if out is None:
        out = core.copy()
    else:
        out[:] = core
    if pl:
        out[:, :, :, w - pl:] += gpad[:, :, pt:pt + h, :pl]
    if pr:
        out[:, :, :, :pr] += gpad[:, :, pt:pt + h, pl + w:]
    return out


def im2col(x: np.ndarray, kernel_hw: tuple[int, int], stride: tuple[int, int],
           ws: Workspace | None = None, tag: str = "") -> np.ndarray:
    """Column buffer (batch, in_ch * kh * kw, out_rows * out_cols)."""
    kh, kw = kernel_hw
    sv, sh = stride
    b, c, h, w = x.shape
    hout, wout = h // sv, w // sh
    padded = pad_input(x, kernel_hw, stride, ws)
    shape = (b, c * kh * kw, hout * wout)
    cols = np.empty(shape) if ws is None else ws.buffer(f"{tag}.cols", shape)
    view = cols.reshape(b, c, kh, kw, hout, wout)
    for i in range(kh):
        for j in range(kw):
            view[:, :, i, j] = padded[:, :, i:i + sv * hout:sv, j:j + sh * wout:sh]
    return cols


def col2im(cols: np.ndarray, in_ch: int, kernel_hw: tuple[int, int],
           stride: tuple[int, int], out_hw: tuple[int, int],
           ws: Workspace | None = None, tag: str = "") -> np.ndarray:
    """Adjoint of ``im2col``: scatter-add the taps back onto the input."""
    kh, kw = kernel_hw
    sv, sh = stride
    h, w = out_hw
    pt, pb, pl, pr = _pad_geometry(kernel_hw, stride)
    b = cols.shape[0]
    hout, wout = h // sv, w // sh
    taps = cols.reshape(b, in_ch, kh, kw, hout, wout)
    pad_shape = (b, in_ch, h + pt + pb, w + pl + pr)
    gpad = np.zeros(pad_shape) if ws is None else ws.zeros(f"{tag}.gpad", pad_shape)
    for i in range(kh):
        for j in range(kw):
            gpad[:, :, i:i + sv * hout:sv, j:j + sh * wout:sh] += taps[:, :, i, j]
    out = None if ws is None else ws.buffer(f"{tag}.fold", (b, in_ch, h, w))
    return fold_padding(gpad, kernel_hw, stride, out_hw, out)


def _check_conv_shapes(x: np.ndarray, kernel: np.ndarray,
                       stride: tuple[int, int]) -> None:
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError("inputs and kernels are 4-d tensors")
    if x.shape[1] != kernel.shape[1]:
        raise ShapeError(f"input has {x.shape[1]} channels, kernel expects {kernel.shape[1]}")
    if x.shape[2] % stride[0] or x.shape[3] % stride[1]:
        raise ShapeError(f"spatial dims {x.shape[2:]} not divisible by stride {stride}")


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray | None,
                   stride: tuple[int, int] = (1, 1),
                   cols: np.ndarray | None = None,
                   ws: Workspace | None = None, tag: str = "") -> np.ndarray:
    """Strided cross-correlation; kernel is (out_ch, in_ch, kh, kw)."""
    _check_conv_shapes(x, kernel, stride)
    cout = kernel.shape[0]
    b = x.shape[0]
    hout, wout = x.shape[2] // stride[0], x.shape[3] // stride[1]
    if cols is None:
        cols = im2col(x, kernel.shape[2:], stride, ws, tag)
    shape = (b, cout, hout * wout)
    y = np.empty(shape) if ws is None else ws.buffer(f"{tag}.y", shape)
    np.matmul(kernel.reshape(cout, -1), cols, out=y)
    if bias is not None:
        y += bias[None, :, None]
    return y.reshape(b, cout, hout, wout)


def conv2d_backward(grad_out: np.ndarray, x: np.ndarray, kernel: np.ndarray,
                    stride: tuple[int, int] = (1, 1),
                    cols: np.ndarray | None = None,
                    ws: Workspace | None = None, tag: str = ""
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of ``conv2d_forward`` w.r.t. input, kernel, and bias.

    ``cols`` may pass the forward pass's column buffer to avoid rebuilding.
    """
    _check_conv_shapes(x, kernel, stride)
    cout, cin = kernel.shape[:2]
    b = x.shape[0]
    hout, wout = x.shape[2] // stride[0], x.shape[3] // stride[1]
    if grad_out.shape != (b, cout, hout, wout):
        raise ShapeError(f"grad_out shape {grad_out.shape} inconsistent with forward pass")
    if cols is None:
        cols = im2col(x, kernel.shape[2:], stride, ws, tag)
    go = grad_out.reshape(b, cout, hout * wout)
    grad_kernel = np.matmul(go, cols.transpose(0, 2, 1)).sum(axis=0).reshape(kernel.shape)
    grad_bias = go.sum(axis=(0, 2))
    gshape = (b, cin * kernel.shape[2] * kernel.shape[3], hout * wout)
    gcols = np.empty(gshape) if ws is None else ws.buffer(f"{tag}.gcols", gshape)
    np.matmul(kernel.reshape(cout, -1).T, go, out=gcols)
    grad_input = col2im(gcols, cin, kernel.shape[2:], stride, x.shape[2:], ws, tag)
    return grad_input, grad_kernel, grad_bias


def deconv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray | None,
                     stride: tuple[int, int] = (1, 1),
                     ws: Workspace | None = None, tag: str = "") -> np.ndarray:
    """Transposed convolution; kernel is (in_ch, out_ch, kh, kw).

    Output spatial dims are the input dims times the stride; the map is the
    adjoint of ``conv2d_forward`` with the same kernel array.
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError("inputs and kernels are 4-d tensors")
    cin, cout = kernel.shape[:2]
    b = x.shape[0]
    if x.shape[1] != cin:
        raise ShapeError(f"input has {x.shape[1]} channels, kernel expects {cin}")
    out_hw = (x.shape[2] * stride[0], x.shape[3] * stride[1])
    xm = x.reshape(b, cin, -1)
    gshape = (b, cout * kernel.shape[2] * kernel.shape[3], xm.shape[2])
    gcols = np.empty(gshape) if ws is None else ws.buffer(f"{tag}.gcols", gshape)
    np.matmul(kernel.reshape(cin, -1).T, xm, out=gcols)
    y = col2im(gcols, cout, kernel.shape[2:], stride, out_hw, ws, tag)
    if bias is not None:
        y += bias[None, :, None, None]
    return y


def deconv2d_backward(grad_out: np.ndarray, x: np.ndarray, kernel: np.ndarray,
                      stride: tuple[int, int] = (1, 1),
                      ws: Workspace | None = None, tag: str = ""
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of ``deconv2d_forward`` w.r.t. input, kernel, and bias."""
    cin, cout = kernel.shape[:2]
    out_hw = (x.shape[2] * stride[0], x.shape[3] * stride[1])
    if grad_out.shape != (x.shape[0], cout) + out_hw:
        raise ShapeError(f"grad_out shape {grad_out.shape} inconsistent with forward pass")
    cols = im2col(grad_out, kernel.shape[2:], stride, ws, f"{tag}.go")
    grad_input = np.matmul(kernel.reshape(cin, -1), cols).reshape(x.shape)
    xm = x.reshape(x.shape[0], cin, -1)
    grad_kernel = np.matmul(xm, cols.transpose(0, 2, 1)).sum(axis=0).reshape(kernel.shape)
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    return grad_input, grad_kernel, grad_bias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    # subgradient 0 at exactly x == 0
    return np.where(x > 0.0, grad_out, 0.0)


def softmax_xent(logits: np.ndarray, target: np.ndarray, mask: np.ndarray
                 ) -> tuple[float, np.ndarray, np.ndarray]:
    """Two-way softmax cross-entropy over masked cells.

    ``logits`` is (batch, 2, rows, cols) with channel 1 the ground class;
    ``target`` is a boolean ground map and ``mask`` selects the cells that
    contribute to the loss. Returns (mean loss, grad w.r.t. logits, ground
    probabilities).
    """
    if logits.ndim != 4 or logits.shape[1] != 2:
        raise ShapeError(f"logits must be (batch, 2, rows, cols), got {logits.shape}")
    spatial = (logits.shape[0],) + logits.shape[2:]
    if target.shape != spatial or mask.shape != spatial:
        raise ShapeError("target/mask shape does not match logits")
    n = int(mask.sum())
    if n == 0:
        raise EmptyMaskError("loss mask selects zero cells")
    m = logits.max(axis=1)
    # stable log-sum-exp per cell
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    target = target.astype(bool)
    z_true = np.where(target, logits[:, 1], logits[:, 0])
    loss = float((lse - z_true)[mask].mean())
    probs = np.exp(logits - lse[:, None])
    grad = probs.copy()
    grad[:, 0] -= ~target
    grad[:, 1] -= target
    grad *= mask[:, None] / n
    return loss, grad, probs[:, 1]
