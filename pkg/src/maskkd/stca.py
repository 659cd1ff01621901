"""Student-teacher cross-attention feature fusion.

The teacher map is projected to queries and the (aligned) student map to keys
and values; spatial attention of the queries over the keys mixes the values
into a fused ``C x H x W`` map.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from . import tensor as T
from .nets import ConfigError, he_uniform
from .tensor import ShapeError, Tensor


class QuerySource(str, enum.Enum):
    TEACHER = "teacher"
    STUDENT = "student"


class FusionParams:
    """Bias-free 1x1 projections: W_q, W_k (C -> C/2) and W_v (C -> C)."""

    def __init__(self, channels: int, seed: int = 0, query_source: QuerySource = QuerySource.TEACHER):
        if channels % 2:
            raise ConfigError(f"fusion needs an even channel count, got {channels}")
        self.channels = channels
        self.c_q = channels // 2
        self.query_source = QuerySource(query_source)
        rng = np.random.default_rng(seed)
        self.w_q = Tensor(he_uniform(rng, (self.c_q, channels, 1, 1), channels), requires_grad=True)
        self.w_k = Tensor(he_uniform(rng, (self.c_q, channels, 1, 1), channels), requires_grad=True)
        self.w_v = Tensor(he_uniform(rng, (channels, channels, 1, 1), channels), requires_grad=True)

    def named_parameters(self) -> dict[str, Tensor]:
        return {"wq": self.w_q, "wk": self.w_k, "wv": self.w_v}

    def parameters(self) -> list[Tensor]:
        return [self.w_q, self.w_k, self.w_v]


def _flatten(x: Tensor) -> Tensor:
    # C x H x W -> C x HW (row-major over H, W)
    *lead, c, h, w = x.shape
    return T.reshape(x, (*lead, c, h * w))


def project(f_t: Tensor, f_s_aligned: Tensor, p: FusionParams) -> tuple[Tensor, Tensor, Tensor]:
    """Returns ``Q (HW x C_q)``, ``K (C_q x HW)``, ``V (HW x C)``."""
    if f_t.shape != f_s_aligned.shape:
        raise ShapeError(f"project: teacher {f_t.shape} and student {f_s_aligned.shape} features differ")
    c = f_t.shape[-3]
    if c % 2:
        raise ConfigError(f"project: channel count must be even, got {c}")
    if c != p.channels:
        raise ShapeError(f"project: features have {c} channels, fusion params expect {p.channels}")
    q_src = f_t if p.query_source is QuerySource.TEACHER else f_s_aligned
    q = T.transpose(_flatten(T.conv2d(q_src, p.w_q)))
    k = _flatten(T.conv2d(f_s_aligned, p.w_k))
    v = T.transpose(_flatten(T.conv2d(f_s_aligned, p.w_v)))
    return q, k, v


def attention(q: Tensor, k: Tensor, c_q: int) -> Tensor:
    if c_q < 1:
        raise ConfigError(f"attention: c_q must be >= 1, got {c_q}")
    return T.softmax_rows(T.scale(T.matmul(q, k), 1.0 / math.sqrt(c_q)))


def fuse(a: Tensor, v: Tensor, h: int, w: int) -> Tensor:
    """``A V`` (HW x C) laid back out as ``C x H x W``."""
    hw = v.shape[-2]
    if hw != h * w or a.shape[-1] != hw:
        raise ShapeError(f"fuse: attention {a.shape} / values {v.shape} inconsistent with {h}x{w}")
    av = T.matmul(a, v)
    *lead, _, c = av.shape
    return T.reshape(T.transpose(av), (*lead, c, h, w))


def stca_forward(f_t: Tensor, f_s_aligned: Tensor, p: FusionParams, return_attention: bool = False):
    h, w = f_t.shape[-2:]
    q, k, v = project(f_t, f_s_aligned, p)
    a = attention(q, k, p.c_q)
    fused = fuse(a, v, h, w)
    return (fused, a) if return_attention else fused
