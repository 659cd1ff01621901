"""Distillation, diversity, task and combined objectives.

Every loss accepts a single image or a batch (leading axis) and averages
per-image values over the batch.  Mask arguments are ``M x H x W`` (spatial)
or ``M x C`` (channel).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import tensor as T
from .tensor import NumericError, ShapeError, Tensor


class DegenerateMaskError(ArithmeticError):
    """A mask summed to zero, so its normalizer is undefined."""


class DivSets(str, enum.Enum):
    SPATIAL = "spatial"
    CHANNEL = "channel"
    BOTH = "both"


def _check_pair(f_t: Tensor, f_s_aligned: Tensor) -> None:
    if f_t.shape != f_s_aligned.shape:
        raise ShapeError(f"teacher features {f_t.shape} and aligned student features {f_s_aligned.shape} differ")


def _guard(den: Tensor) -> None:
    if np.any(den.data <= 0):
        raise DegenerateMaskError("a mask sums to zero; its loss normalizer is undefined")


def masked_feat_loss(f_t: Tensor, f_s_aligned: Tensor, masks: Tensor) -> Tensor:
    """Spatially masked squared error, normalized per mask by ``C * sum(mask)``.

    The mask multiplies the difference *before* squaring, so each per-mask
    term scales linearly when its mask is scaled.
    """
    _check_pair(f_t, f_s_aligned)
    *lead, c, h, w = f_t.shape
    if tuple(masks.shape[:len(lead)]) != tuple(lead) or tuple(masks.shape[-2:]) != (h, w):
        raise ShapeError(f"spatial masks {masks.shape} do not match features {f_t.shape}")
    m = masks.shape[-3]
    if np.any(masks.data < 0):
        raise ValueError("spatial masks must be nonnegative")
    diff = T.sub(f_t, f_s_aligned)
    err = T.sum_axis(T.square(diff), axis=-3)                      # H x W
    err = T.reshape(err, (*lead, h * w, 1))
    flat = T.reshape(masks, (*lead, m, h * w))
    num = T.matmul(T.square(flat), err)                            # M x 1
    den = T.scale(T.sum_axis(flat, axis=-1, keepdims=True), c)     # M x 1
    _guard(den)
    return T.mean_all(T.div(num, den))


def distill_spatial_loss(f_t: Tensor, f_s_aligned: Tensor, spatial_masks: Tensor) -> Tensor:
    return masked_feat_loss(f_t, f_s_aligned, spatial_masks)


def distill_channel_loss(f_t: Tensor, f_s_aligned: Tensor, channel_masks: Tensor) -> Tensor:
    """Channel-masked squared error, normalized per mask by ``HW * sum(mask)``."""
    _check_pair(f_t, f_s_aligned)
    *lead, c, h, w = f_t.shape
    if tuple(channel_masks.shape[:len(lead)]) != tuple(lead) or channel_masks.shape[-1] != c:
        raise ShapeError(f"channel masks {channel_masks.shape} do not match features {f_t.shape}")
    if np.any(channel_masks.data < 0):
        raise ValueError("channel masks must be nonnegative")
    diff = T.reshape(T.sub(f_t, f_s_aligned), (*lead, c, h * w))
    err = T.sum_axis(T.square(diff), axis=-1, keepdims=True)                  # C x 1
    num = T.matmul(T.square(channel_masks), err)                              # M x 1
    den = T.scale(T.sum_axis(channel_masks, axis=-1, keepdims=True), h * w)   # M x 1
    _guard(den)
    return T.mean_all(T.div(num, den))


def diversity_loss(masks: Tensor, batched: bool = False) -> Tensor:
    """Dice-style overlap between every pair of distinct masks.

    ``masks`` is ``M x ...`` (``B x M x ...`` when batched); trailing axes are
    flattened.  Returns ``sum_{i != j} <M_i, M_j> / sum_i |M_i|^2``, which
    is 0 for mutually orthogonal masks and M-1 for M identical ones.
    """
    lead = masks.shape[:2] if batched else masks.shape[:1]
    if len(lead) != (2 if batched else 1) or masks.ndim <= len(lead):
        raise ShapeError(f"diversity_loss: cannot read masks of shape {masks.shape} (batched={batched})")
    m = lead[-1]
    flat = T.reshape(masks, (*lead, int(np.prod(masks.shape[len(lead):]))))
    gram = T.matmul(flat, T.transpose(flat))                        # M x M
    eye = np.eye(m, dtype=masks.dtype)
    if batched:
        eye = np.broadcast_to(eye, gram.shape)
    off = T.mul(gram, Tensor(1 - eye, dtype=masks.dtype))
    on = T.mul(gram, Tensor(eye, dtype=masks.dtype))
    num = T.sum_axis(T.sum_axis(off, -1), -1)
    den = T.sum_axis(T.sum_axis(on, -1), -1)
    if np.any(den.data == 0):
        warnings.warn("diversity_loss: all-zero mask set; returning 0", RuntimeWarning, stacklevel=2)
        return Tensor(0.0, dtype=masks.dtype)
    return T.mean_all(T.div(num, den))


def task_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    return T.cross_entropy(logits, labels)


@dataclass
class LossBreakdown:
    task: float
    distill_c: float
    distill_s: float
    div: float
    total: float
    alpha: float
    lam: float

    def as_dict(self) -> dict:
        return asdict(self)


def _value(x) -> float:
    if x is None:
        return 0.0
    return x.item() if isinstance(x, Tensor) else float(x)


def total_loss(
    task,
    distill_c=None,
    distill_s=None,
    div=None,
    alpha: float = 1.0,
    lam: float = 1.0,
) -> tuple[Optional[Tensor], LossBreakdown]:
    """``task + alpha * (distill_c + distill_s) + lam * div``.

    Components may be Tensors (the returned total is then differentiable) or
    plain floats; missing components count as zero.  Returns
    ``(total_tensor_or_None, breakdown)``.
    """
    parts = {"task": task, "distill_c": distill_c, "distill_s": distill_s, "div": div}
    for name, x in parts.items():
        if x is not None and not math.isfinite(_value(x)):
            raise NumericError(f"loss component '{name}' is not finite")
    vals = {k: _value(v) for k, v in parts.items()}
    breakdown = LossBreakdown(
        **vals,
        total=vals["task"] + alpha * (vals["distill_c"] + vals["distill_s"]) + lam * vals["div"],
        alpha=alpha,
        lam=lam,
    )
    if not isinstance(task, Tensor):
        return None, breakdown
    total = task
    distill = [x for x in (distill_c, distill_s) if isinstance(x, Tensor)]
    if distill and alpha != 0:
        d = distill[0] if len(distill) == 1 else T.add(distill[0], distill[1])
        total = T.add(total, T.scale(d, alpha))
    if isinstance(div, Tensor) and lam != 0:
        total = T.add(total, T.scale(div, lam))
    breakdown.total = total.item()
    return total, breakdown
