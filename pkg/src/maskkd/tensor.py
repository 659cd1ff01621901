"""Dense tensors with a recording tape for reverse-mode differentiation.

Every op works on numpy buffers and, when a :class:`Tape` is active and any
input requires gradients, appends a node holding its backward rule.  Nodes
are recorded in execution order, so walking the tape backwards is already a
valid reverse topological order.

Ops that take images accept either a single ``C x H x W`` tensor or a batch
``B x C x H x W``; that leading batch axis is the only implicit shape
adaptation anywhere in the library.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    """Raised when operand shapes do not satisfy an op's contract."""


class ContractError(RuntimeError):
    """Raised when an API precondition (not a shape) is violated."""


class NumericError(ArithmeticError):
    """Raised when a computation produces NaN or Inf."""


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str = ""):
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype == np.float64 else DEFAULT_DTYPE
        self.data: np.ndarray = np.array(data, dtype=dtype, copy=True, order="C")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr)
        # ascontiguousarray would promote 0-d results to shape (1,)
        t.data = arr if arr.flags.c_contiguous else arr.copy(order="C")
        t.requires_grad = False
        t.grad = None
        t.name = ""
        return t

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def __repr__(self) -> str:
        rg = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{rg})"

    # arithmetic sugar; every overload maps onto a named op below
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return div(self, other)
        return scale(self, 1.0 / float(other))

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


@dataclass
class _Node:
    out: Tensor
    inputs: tuple
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class Tape:
    """Ordered record of differentiable ops executed while the tape is active.

    Usage::

        with Tape() as tape:
            loss = ...
        tape.backward(loss)
    """

    nodes: list = field(default_factory=list)

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPES.pop()

    def record(self, out: Tensor, inputs: tuple, backward) -> None:
        self.nodes.append(_Node(out, inputs, backward))

    def backward(self, loss: Tensor) -> None:
        backward(loss, self)


_TAPES: list = []


def active_tape() -> Optional[Tape]:
    return _TAPES[-1] if _TAPES else None


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    g = g.astype(t.data.dtype, copy=False)
    if t.grad is None:
        t.grad = np.array(g, copy=True)
    else:
        t.grad += g


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate ``.grad`` of every requires_grad tensor that ``loss`` depends on.

    Gradients accumulate into existing ``.grad`` buffers, so leaves should be
    zeroed between steps (the optimizer does this).
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss does not depend on any requires_grad tensor on this tape")
    # intermediates get .grad too; seed the loss after clearing stale values
    for node in tape.nodes:
        node.out.grad = None
    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(tape.nodes):
        g = node.out.grad
        if g is None:
            continue
        grads = node.backward(g)
        for inp, gi in zip(node.inputs, grads):
            if gi is not None and inp.requires_grad:
                _accumulate(inp, gi)


def _make(data: np.ndarray, inputs: tuple, backward_fn) -> Tensor:
    dtype = inputs[0].data.dtype
    out = Tensor._wrap(np.asarray(data, dtype=dtype))
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward_fn)
    return out


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _make(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def div(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("div", a, b)
    ad, bd = a.data, b.data
    q = ad / bd
    return _make(q, (a, b), lambda g: (g / bd, -(g * q) / bd))


def scale(a: Tensor, c: float) -> Tensor:
    c = a.data.dtype.type(c)
    return _make(a.data * c, (a,), lambda g: (g * c,))


def square(a: Tensor) -> Tensor:
    ad = a.data
    return _make(ad * ad, (a,), lambda g: (2 * g * ad,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0), (a,), lambda g: (g * mask,))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows; outputs stay strictly inside (0, 1)
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1 / (1 + e), e / (1 + e)).astype(x.dtype)
    # in f32, 1/(1+e) rounds to exactly 1 once x > ~17; the lower floor keeps
    # 1/y (mask normalizers, Dice denominators) finite during backward
    info = np.finfo(x.dtype)
    y = np.clip(y, info.eps, np.nextafter(x.dtype.type(1), x.dtype.type(0)))
    return _make(y, (a,), lambda g: (g * y * (1 - y),))


def softmax_rows(a: Tensor) -> Tensor:
    """Softmax over the last axis, with per-row max subtraction."""
    x = a.data
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _make(y, (a,), bw)


# ---------------------------------------------------------------------------
# reductions and layout
# ---------------------------------------------------------------------------


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return _make(a.data.sum(), (a,), lambda g: (np.broadcast_to(g, shape),))


def mean_all(a: Tensor) -> Tensor:
    shape, n = a.shape, a.size
    return _make(a.data.sum() / n, (a,), lambda g: (np.broadcast_to(g / n, shape),))


def sum_axis(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    shape = a.shape
    ax = axis % a.ndim

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, ax)
        return (np.broadcast_to(g, shape),)

    return _make(a.data.sum(axis=ax, keepdims=keepdims), (a,), bw)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != a.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}")
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a: Tensor) -> Tensor:
    """Swap the last two axes."""
    if a.ndim < 2:
        raise ShapeError(f"transpose: need >= 2 dims, got {a.shape}")
    return _make(np.swapaxes(a.data, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),))


def detach(a: Tensor) -> Tensor:
    return a.detach()


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------


def _matmul_data(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.matmul(a, b)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product.

    Operands are ``n x k`` and ``k x m``.  Either side may carry one leading
    batch axis; a 2-D operand against a batched one is shared across the
    batch and its gradient is summed over the batch.
    """
    if a.ndim not in (2, 3) or b.ndim not in (2, 3):
        raise ShapeError(f"matmul: expected 2-D or batched 3-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ for {a.shape} and {b.shape}")
    if a.ndim == 3 and b.ndim == 3 and a.shape[0] != b.shape[0]:
        raise ShapeError(f"matmul: batch sizes differ for {a.shape} and {b.shape}")
    ad, bd = a.data, b.data

    def bw(g):
        ga = _matmul_data(g, np.swapaxes(bd, -1, -2))
        gb = _matmul_data(np.swapaxes(ad, -1, -2), g)
        if a.ndim == 2 and ga.ndim == 3:
            ga = ga.sum(axis=0)
        if b.ndim == 2 and gb.ndim == 3:
            gb = gb.sum(axis=0)
        return ga, gb

    return _make(_matmul_data(ad, bd), (a, b), bw)


def _batched(x: Tensor, want: int, op: str):
    if x.ndim == want:
        return True
    if x.ndim == want - 1:
        return False
    raise ShapeError(f"{op}: expected {want - 1}-D or batched {want}-D input, got {x.shape}")


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of ``C_in x H x W`` input with ``C_out x C_in x k x k`` kernel."""
    batched = _batched(x, 4, "conv2d")
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise ShapeError(f"conv2d: kernel must be C_out x C_in x k x k, got {kernel.shape}")
    c_out, c_in, k, _ = kernel.shape
    if k not in (1, 3):
        raise ShapeError(f"conv2d: kernel size must be 1 or 3, got {k}")
    xd = x.data if batched else x.data[None]
    b, c, h, w = xd.shape
    if c != c_in:
        raise ShapeError(f"conv2d: input has {c} channels, kernel expects {c_in} ({x.shape} vs {kernel.shape})")
    if stride < 1 or pad < 0:
        raise ShapeError(f"conv2d: invalid stride={stride} pad={pad}")
    span_h, span_w = h + 2 * pad - k, w + 2 * pad - k
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise ShapeError(f"conv2d: output size not integral for H={h} W={w} k={k} stride={stride} pad={pad}")
    ho, wo = span_h // stride + 1, span_w // stride + 1
    kd = kernel.data

    if k == 1 and stride == 1 and pad == 0:
        kmat = kd.reshape(c_out, c_in)
        flat = xd.reshape(b, c, h * w)
        out = _matmul_data(kmat, flat).reshape(b, c_out, h, w)

        def bw(g):
            gf = g.reshape(b, c_out, h * w)
            gx = _matmul_data(kmat.T, gf).reshape(b, c, h, w)
            gk = _matmul_data(gf, np.swapaxes(flat, 1, 2)).sum(axis=0).reshape(kd.shape)
            return (gx if batched else gx[0]), gk

        return _make(out if batched else out[0], (x, kernel), bw)

    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else xd
    # windows: b, c, ho, wo, k, k  ->  rows (b*ho*wo) x (c*k*k)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(b * ho * wo, c * k * k)
    kmat = kd.reshape(c_out, c * k * k)
    out = (cols @ kmat.T).reshape(b, ho, wo, c_out).transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)

    def bw(g):
        g = g if batched else g[None]
        gr = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(b * ho * wo, c_out)
        gk = (gr.T @ cols).reshape(kd.shape)
        gcols = (gr @ kmat).reshape(b, ho, wo, c, k, k)
        gxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        gx = gxp[:, :, pad:pad + h, pad:pad + w] if pad else gxp
        return (gx if batched else gx[0]), gk

    return _make(out if batched else out[0], (x, kernel), bw)


def add_channel_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a length-C bias to every spatial position of a C x H x W map."""
    batched = _batched(x, 4, "add_channel_bias")
    c = x.shape[-3]
    if bias.shape != (c,):
        raise ShapeError(f"add_channel_bias: bias {bias.shape} does not match {c} channels")
    axes = (0, 2, 3) if batched else (1, 2)
    return _make(x.data + bias.data[:, None, None], (x, bias), lambda g: (g, g.sum(axis=axes)))


def avg_pool_spatial(x: Tensor) -> Tensor:
    """Per-channel mean over H x W.  Returns ``1 x C`` (or ``B x 1 x C``)."""
    batched = _batched(x, 4, "avg_pool_spatial")
    h, w = x.shape[-2:]
    n = h * w
    xd = x.data if batched else x.data[None]
    b, c = xd.shape[:2]
    out = xd.reshape(b, c, n).sum(axis=2) / xd.dtype.type(n)
    out = out.reshape(b, 1, c)

    def bw(g):
        gx = np.broadcast_to((g.reshape(b, c) / n)[:, :, None, None], (b, c, h, w))
        return (gx if batched else gx[0],)

    return _make(out if batched else out[0], (x,), bw)


def avg_pool2x2(x: Tensor) -> Tensor:
    """2x2 mean pooling with stride 2 (H and W must be even)."""
    batched = _batched(x, 4, "avg_pool2x2")
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2x2: spatial size must be even, got {x.shape}")
    xd = x.data if batched else x.data[None]
    b, c = xd.shape[:2]
    out = xd.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def bw(g):
        gb = g if batched else g[None]
        gx = np.repeat(np.repeat(gb, 2, axis=2), 2, axis=3) / 4
        return (gx if batched else gx[0],)

    return _make(out if batched else out[0], (x,), bw)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean per-pixel cross-entropy of ``K x H x W`` logits against ``H x W`` labels."""
    batched = _batched(logits, 4, "cross_entropy")
    ld = logits.data if batched else logits.data[None]
    lab = np.asarray(labels)
    lab = lab if batched else lab[None]
    b, k, h, w = ld.shape
    if lab.shape != (b, h, w):
        raise ShapeError(f"cross_entropy: labels {np.asarray(labels).shape} do not match logits {logits.shape}")
    if lab.size and (lab.min() < 0 or lab.max() >= k):
        raise ValueError(f"cross_entropy: labels must lie in [0, {k}), got range [{lab.min()}, {lab.max()}]")
    lab = lab.astype(np.int64)
    m = ld.max(axis=1, keepdims=True)
    z = ld - m
    e = np.exp(z)
    s = e.sum(axis=1, keepdims=True)
    logp = z - np.log(s)
    picked = np.take_along_axis(logp, lab[:, None], axis=1)
    n = b * h * w
    loss = -picked.sum() / n

    def bw(g):
        p = e / s
        np.put_along_axis(p, lab[:, None], np.take_along_axis(p, lab[:, None], axis=1) - 1, axis=1)
        gx = p * (g / n)
        return (gx if batched else gx[0],)

    return _make(loss, (logits,), bw)


def check_finite(t: Tensor, what: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values in {what}")
    return t
