"""Toy fully-convolutional teacher/student networks and the alignment adapter."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetConfig:
    channels: int
    depth: int
    num_classes: int
    in_channels: int = 3
    seed: int = 0
    # layer index whose output is distilled; -1 = last pre-head layer, depth = head logits
    feature_tap: int = -1

    def validate(self) -> None:
        if self.channels <= 0 or self.depth <= 0 or self.num_classes <= 0 or self.in_channels <= 0:
            raise ConfigError(f"channels, depth, num_classes and in_channels must be positive: {self}")
        if not -self.depth <= self.feature_tap <= self.depth:
            raise ConfigError(f"feature_tap {self.feature_tap} out of range for depth {self.depth}")


TEACHER_DEFAULT = NetConfig(channels=32, depth=4, num_classes=4)
STUDENT_DEFAULT = NetConfig(channels=16, depth=2, num_classes=4)


def he_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def checksum(arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


@dataclass
class ConvLayer:
    kernel: Tensor
    bias: Tensor
    relu: bool = True


class ConvNet:
    """Stack of padded 3x3 convs (stride 1) followed by a 1x1 classification head."""

    def __init__(self, cfg: NetConfig):
        cfg.validate()
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.layers: list[ConvLayer] = []
        c_in = cfg.in_channels
        for _ in range(cfg.depth):
            k = he_uniform(rng, (cfg.channels, c_in, 3, 3), c_in * 9)
            self.layers.append(ConvLayer(Tensor(k, requires_grad=True), Tensor(np.zeros(cfg.channels, np.float32), requires_grad=True)))
            c_in = cfg.channels
        self.head_kernel = Tensor(he_uniform(rng, (cfg.num_classes, c_in, 1, 1), c_in), requires_grad=True)
        self.head_bias = Tensor(np.zeros(cfg.num_classes, np.float32), requires_grad=True)
        self.feature_tap = cfg.feature_tap if cfg.feature_tap == cfg.depth else cfg.feature_tap % cfg.depth

    @property
    def channels(self) -> int:
        return self.cfg.channels

    def named_parameters(self) -> dict[str, Tensor]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layer{i}.kernel"] = layer.kernel
            out[f"layer{i}.bias"] = layer.bias
        out["head.kernel"] = self.head_kernel
        out["head.bias"] = self.head_bias
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def checksum(self) -> str:
        return checksum(p.data for p in self.parameters())

    def set_requires_grad(self, flag: bool) -> None:
        for p in self.parameters():
            p.requires_grad = flag

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, p in self.named_parameters().items():
            if state[name].shape != p.shape:
                raise ShapeError(f"{name}: checkpoint shape {state[name].shape} vs model {p.shape}")
            p.data[...] = state[name]

    def tap_channels(self, tap: int | None = None) -> int:
        tap = self.feature_tap if tap is None else tap
        return self.cfg.num_classes if tap == self.cfg.depth else self.cfg.channels

    def forward(self, x: Tensor, taps: int = 1) -> tuple[Tensor, list[Tensor]]:
        """Returns ``(logits, features)``.

        ``features[0]`` is the output of the tap layer at full resolution (the
        logits themselves when the tap is the head); with ``taps=2`` a second
        feature, the first layer's output pooled 2x2, is appended.
        """
        h = x
        feats: list[Optional[Tensor]] = [None, None]
        for i, layer in enumerate(self.layers):
            h = T.add_channel_bias(T.conv2d(h, layer.kernel, stride=1, pad=1), layer.bias)
            if layer.relu:
                h = T.relu(h)
            if i == self.feature_tap:
                feats[0] = h
            if i == 0 and taps == 2:
                feats[1] = T.avg_pool2x2(h)
        logits = T.add_channel_bias(T.conv2d(h, self.head_kernel), self.head_bias)
        if self.feature_tap == self.cfg.depth:
            feats[0] = logits
        return logits, [f for f in feats[:taps]]

    def predict(self, x: Tensor) -> np.ndarray:
        logits, _ = self.forward(x)
        return logits.data.argmax(axis=-3)


def build_teacher(cfg: NetConfig = TEACHER_DEFAULT) -> ConvNet:
    return ConvNet(cfg)


def build_student(cfg: NetConfig = STUDENT_DEFAULT) -> ConvNet:
    return ConvNet(cfg)


class AlignLayer:
    """1x1 conv mapping student channels onto teacher channels.

    When the channel counts agree and ``identity`` is requested the layer is a
    pass-through with no parameters.
    """

    def __init__(self, c_student: int, c_teacher: int, seed: int = 0, identity: bool = False):
        if identity and c_student != c_teacher:
            raise ConfigError(f"identity alignment needs equal channels, got {c_student} -> {c_teacher}")
        self.c_in = c_student
        self.c_out = c_teacher
        self.kernel: Optional[Tensor] = None
        if not identity:
            rng = np.random.default_rng(seed)
            self.kernel = Tensor(he_uniform(rng, (c_teacher, c_student, 1, 1), c_student), requires_grad=True)

    @property
    def is_identity(self) -> bool:
        return self.kernel is None

    def parameters(self) -> list[Tensor]:
        return [] if self.kernel is None else [self.kernel]


def align(f_s: Tensor, a: AlignLayer) -> Tensor:
    if f_s.shape[-3] != a.c_in:
        raise ShapeError(f"align: feature has {f_s.shape[-3]} channels, adapter expects {a.c_in}")
    if a.kernel is None:
        return f_s
    return T.conv2d(f_s, a.kernel)


def inherit_init(student: ConvNet, teacher: ConvNet) -> int:
    """Copy teacher tensors into same-named student tensors of identical shape."""
    t_params = teacher.named_parameters()
    count = 0
    for name, p in student.named_parameters().items():
        src = t_params.get(name)
        if src is not None and src.shape == p.shape:
            p.data[...] = src.data
            count += 1
    return count
