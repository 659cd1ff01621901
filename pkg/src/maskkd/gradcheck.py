"""Central finite-difference checks of tape gradients, run in float64."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .tensor import Tape, Tensor

F64 = np.float64


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """``max|a - n| / max(max|a|, max|n|, floor)`` over one tensor."""
    scale = max(float(np.max(np.abs(analytic), initial=0)), float(np.max(np.abs(numeric), initial=0)), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0)) / scale


def numeric_grad(loss_fn: Callable[[], Tensor], p: Tensor, h: float = 1e-4) -> np.ndarray:
    flat = p.data.reshape(-1)
    out = np.zeros(flat.shape, dtype=F64)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_fn().item()
        flat[i] = orig - h
        down = loss_fn().item()
        flat[i] = orig
        out[i] = (up - down) / (2 * h)
    return out.reshape(p.shape)


def check_gradients(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-4) -> list[float]:
    """Compare backward gradients of ``loss_fn()`` with central differences.

    ``params`` must hold float64 data; they are perturbed in place and
    restored.  Returns one relative error per parameter.
    """
    for p in params:
        if p.data.dtype != F64:
            raise TypeError("gradient checks need float64 parameters")
        p.requires_grad = True
        p.grad = None
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = [np.zeros(p.shape) if p.grad is None else p.grad.copy() for p in params]
    return [relative_error(a, numeric_grad(loss_fn, p, h)) for a, p in zip(analytic, params)]


def _t(rng, *shape, low=-1.0, high=1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), dtype=F64)


def _off_kink(rng, *shape) -> Tensor:
    # |x| >= 0.01 keeps central differences from straddling relu's kink at 0
    mag = rng.uniform(0.01, 1.0, size=shape)
    return Tensor(np.where(rng.random(shape) < 0.5, -mag, mag), dtype=F64)


def _weighted_sum(out: Tensor, w: np.ndarray) -> Tensor:
    # contract a non-scalar output against fixed random weights
    return T.sum_all(T.mul(out, Tensor(w, dtype=F64)))


def _case(rng, fn, *inputs):
    probe = fn(*inputs)
    w = rng.uniform(-1, 1, size=probe.shape)
    return (lambda: _weighted_sum(fn(*inputs), w)), list(inputs)


def _full_loss_case(rng):
    from .ascm import SelectionUnits
    from .config import DistillConfig, Strategy
    from .harness import DistillModel
    from .nets import ConvNet, NetConfig

    seed = int(rng.integers(0, 2**31))
    cfg = DistillConfig(strategy=Strategy.ACAM_FULL, num_masks=2, teacher_channels=2, student_channels=2,
                        student_depth=1, num_classes=3, inherit=False, seed=seed,
                        teacher_tap="-1", student_tap="-1", stop_grad_masks=False)
    # full gradient flow: with detached masks backward is a surrogate, not the derivative
    teacher = ConvNet(NetConfig(2, 1, 3, seed=seed))
    model = DistillModel(cfg, teacher)
    # non-identity adapter so its kernel is checked too
    from .nets import AlignLayer

    model.aligns = [AlignLayer(2, 2, seed=seed + 5)]
    model.units = [SelectionUnits(2, 2, seed=seed + 6)]
    params = model.parameters()
    for p in params:
        p.data = rng.uniform(-1, 1, size=p.shape)
    x = Tensor(rng.uniform(0, 1, size=(1, 3, 2, 2)), dtype=F64)
    labels = rng.integers(0, 3, size=(1, 2, 2))
    f_t = Tensor(rng.uniform(0, 2, size=(1, 2, 2, 2)), dtype=F64)
    return (lambda: model.objective(x, labels, [f_t])[0]), params


def op_cases() -> dict[str, Callable[[np.random.Generator], tuple]]:
    """Named gradient-check instances, each small enough for exhaustive FD."""
    from .ascm import SelectionUnits, generate_masks
    from .losses import distill_channel_loss, distill_spatial_loss, diversity_loss, masked_feat_loss
    from .stca import FusionParams, stca_forward

    def units_case(rng):
        u = SelectionUnits(2, 4, seed=int(rng.integers(1 << 30)))
        u.m_c.data = rng.normal(size=2)
        u.m_s.data = rng.normal(size=(2, 4))
        f = _t(rng, 4, 2, 3)
        w_c, w_s = rng.uniform(-1, 1, (2, 4)), rng.uniform(-1, 1, (2, 2, 3))

        def fn():
            ms = generate_masks(u, f)
            return T.add(_weighted_sum(ms.channel, w_c), _weighted_sum(ms.spatial, w_s))

        return fn, [u.m_c, u.m_s, f]

    def fusion_case(rng):
        p = FusionParams(4, seed=int(rng.integers(1 << 30)))
        for k in p.parameters():
            k.data = rng.uniform(-1, 1, size=k.shape)
        f_t, f_s = _t(rng, 4, 2, 2), _t(rng, 4, 2, 2)
        w = rng.uniform(-1, 1, (4, 2, 2))
        return (lambda: _weighted_sum(stca_forward(f_t, f_s, p), w)), [*p.parameters(), f_s, f_t]

    def masks_pos(rng, *shape):
        return _t(rng, *shape, low=0.1, high=1.0)

    return {
        "add": lambda r: _case(r, T.add, _t(r, 3, 4), _t(r, 3, 4)),
        "sub": lambda r: _case(r, T.sub, _t(r, 3, 4), _t(r, 3, 4)),
        "mul": lambda r: _case(r, T.mul, _t(r, 3, 4), _t(r, 3, 4)),
        "div": lambda r: _case(r, T.div, _t(r, 3, 4), _t(r, 3, 4, low=0.5, high=2.0)),
        "scale": lambda r: _case(r, lambda a: T.scale(a, -1.7), _t(r, 3, 4)),
        "square": lambda r: _case(r, T.square, _t(r, 3, 4)),
        "relu": lambda r: _case(r, T.relu, _off_kink(r, 3, 4)),
        "sigmoid": lambda r: _case(r, T.sigmoid, _t(r, 3, 4, low=-4, high=4)),
        "softmax": lambda r: _case(r, T.softmax_rows, _t(r, 3, 5, low=-3, high=3)),
        "sum_axis": lambda r: _case(r, lambda a: T.sum_axis(a, 1), _t(r, 2, 3, 4)),
        "mean": lambda r: _case(r, T.mean_all, _t(r, 3, 4)),
        "reshape": lambda r: _case(r, lambda a: T.reshape(a, (4, 3)), _t(r, 3, 4)),
        "transpose": lambda r: _case(r, T.transpose, _t(r, 2, 3, 4)),
        "matmul": lambda r: _case(r, T.matmul, _t(r, 3, 4), _t(r, 4, 2)),
        "matmul_shared": lambda r: _case(r, T.matmul, _t(r, 3, 4), _t(r, 2, 4, 2)),
        "conv2d_k1": lambda r: _case(r, T.conv2d, _t(r, 3, 3, 3), _t(r, 2, 3, 1, 1)),
        "conv2d_k3": lambda r: _case(r, lambda x, k: T.conv2d(x, k, 1, 1), _t(r, 2, 4, 4), _t(r, 2, 2, 3, 3)),
        "conv2d_k3_stride2": lambda r: _case(r, lambda x, k: T.conv2d(x, k, 2, 1), _t(r, 2, 5, 5), _t(r, 2, 2, 3, 3)),
        "add_channel_bias": lambda r: _case(r, T.add_channel_bias, _t(r, 3, 2, 2), _t(r, 3)),
        "avg_pool_spatial": lambda r: _case(r, T.avg_pool_spatial, _t(r, 3, 2, 2)),
        "avg_pool2x2": lambda r: _case(r, T.avg_pool2x2, _t(r, 2, 4, 4)),
        "cross_entropy": lambda r: (lambda x, lab: ((lambda: T.cross_entropy(x, lab)), [x]))(
            _t(r, 3, 2, 2, low=-2, high=2), r.integers(0, 3, size=(2, 2))),
        "stca": fusion_case,
        "masks": units_case,
        "masked_feat": lambda r: (lambda a, b, m: ((lambda: masked_feat_loss(a, b, m)), [a, b, m]))(
            _t(r, 2, 2, 2), _t(r, 2, 2, 2), masks_pos(r, 2, 2, 2)),
        "distill_spatial": lambda r: (lambda a, b, m: ((lambda: distill_spatial_loss(a, b, m)), [a, b, m]))(
            _t(r, 2, 2, 2), _t(r, 2, 2, 2), masks_pos(r, 2, 2, 2)),
        "distill_channel": lambda r: (lambda a, b, m: ((lambda: distill_channel_loss(a, b, m)), [a, b, m]))(
            _t(r, 2, 2, 2), _t(r, 2, 2, 2), masks_pos(r, 2, 2)),
        "diversity": lambda r: (lambda m: ((lambda: diversity_loss(m)), [m]))(masks_pos(r, 3, 4)),
        "full_loss": _full_loss_case,
    }


def run_case(name: str, seed: int = 0, h: float = 1e-4) -> float:
    """Max relative error over all parameters of one named case."""
    cases = op_cases()
    if name not in cases:
        raise KeyError(f"unknown gradcheck case {name!r}; choose from {', '.join(sorted(cases))}")
    rng = np.random.default_rng(seed)
    fn, params = cases[name](rng)
    return max(check_gradients(fn, params, h))
