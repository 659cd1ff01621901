"""Adaptive spatial-channel masking driven by learnable selection units."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .nets import ConfigError
from .tensor import ShapeError, Tensor


class SelectionUnits:
    """Channel units ``m_c`` (length M) and spatial units ``m_s`` (M x C).

    Drawn from a seeded standard normal so the initial masks already differ
    from one another.
    """

    def __init__(self, num_masks: int, channels: int, seed: int = 0, std: float = 1.0):
        if num_masks < 1:
            raise ConfigError(f"need at least one mask, got M={num_masks}")
        rng = np.random.default_rng(seed)
        self.num_masks = num_masks
        self.channels = channels
        self.m_c = Tensor(rng.normal(0.0, std, size=num_masks).astype(np.float32), requires_grad=True)
        self.m_s = Tensor(rng.normal(0.0, std, size=(num_masks, channels)).astype(np.float32), requires_grad=True)

    def named_parameters(self) -> dict[str, Tensor]:
        return {"mc": self.m_c, "ms": self.m_s}

    def parameters(self) -> list[Tensor]:
        return [self.m_c, self.m_s]


@dataclass
class MaskSet:
    channel: Tensor  # M x C  (or B x M x C)
    spatial: Tensor  # M x H x W  (or B x M x H x W)


def pooled_descriptor(f_fused: Tensor) -> Tensor:
    return T.avg_pool_spatial(f_fused)


def flatten_descriptor(f_fused: Tensor) -> Tensor:
    *lead, c, h, w = f_fused.shape
    return T.reshape(f_fused, (*lead, c, h * w))


def unflatten_descriptor(z: Tensor, h: int, w: int) -> Tensor:
    *lead, c, _ = z.shape
    return T.reshape(z, (*lead, c, h, w))


def generate_masks(u: SelectionUnits, f_fused: Tensor) -> MaskSet:
    c = f_fused.shape[-3]
    if c != u.channels:
        raise ShapeError(f"generate_masks: fused map has {c} channels, units expect {u.channels}")
    *lead, _, h, w = f_fused.shape
    v = pooled_descriptor(f_fused)                           # 1 x C
    z = flatten_descriptor(f_fused)                          # C x HW
    m_c = T.reshape(u.m_c, (u.num_masks, 1))
    channel = T.sigmoid(T.matmul(m_c, v))                    # M x C
    spatial = T.sigmoid(T.matmul(u.m_s, z))                  # M x HW
    spatial = T.reshape(spatial, (*lead, u.num_masks, h, w))
    return MaskSet(channel=channel, spatial=spatial)
