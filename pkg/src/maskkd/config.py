"""Flat run configuration and its ``key=value`` text form."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, fields
from pathlib import Path

from .losses import DivSets
from .nets import ConfigError, NetConfig
from .stca import QuerySource
from .synth import DataConfig


class Strategy(str, enum.Enum):
    NO_KD = "no_kd"
    NO_MASK = "no_mask"
    FIXED_TEACHER_MASK = "fixed_teacher_mask"
    ACAM_SPATIAL_ONLY = "acam_spatial_only"
    ACAM_CHANNEL_ONLY = "acam_channel_only"
    ACAM_FULL = "acam_full"

    @property
    def uses_fusion(self) -> bool:
        return self.value.startswith("acam")

    @property
    def uses_spatial(self) -> bool:
        return self in (Strategy.ACAM_SPATIAL_ONLY, Strategy.ACAM_FULL)

    @property
    def uses_channel(self) -> bool:
        return self in (Strategy.ACAM_CHANNEL_ONLY, Strategy.ACAM_FULL)


class LrSchedule(str, enum.Enum):
    CONSTANT = "constant"
    POLY = "poly"


@dataclass
class DistillConfig:
    # distillation
    strategy: Strategy = Strategy.ACAM_FULL
    num_masks: int = 4
    alpha: float = 1.0
    lam: float = 1.0
    query_source: QuerySource = QuerySource.TEACHER
    div_sets: DivSets = DivSets.BOTH
    stop_grad_masks: bool = True
    taps: int = 1
    inherit: bool = True
    # optimization
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_schedule: LrSchedule = LrSchedule.CONSTANT
    epochs: int = 20
    batch_size: int = 8
    seed: int = 0
    # data
    height: int = 16
    width: int = 16
    num_classes: int = 4
    shapes_per_image: int = 3
    noise_std: float = 0.3
    color_jitter: float = 0.08
    data_seed: int = 0
    n_train: int = 64
    n_val: int = 128
    # networks
    teacher_channels: int = 32
    teacher_depth: int = 4
    student_channels: int = 16
    student_depth: int = 2
    # "head" distills the logits; an integer picks a conv layer (negative counts from the end)
    teacher_tap: str = "head"
    student_tap: str = "head"
    # teacher training
    teacher_seed: int = 0
    teacher_epochs: int = 12
    teacher_lr: float = 0.02
    teacher_n_train: int = 1024
    # reporting
    snapshot_epochs: str = "5,20"
    probe_index: int = 0
    overlap_images: int = 32

    def validate(self) -> "DistillConfig":
        if self.num_masks < 1:
            raise ConfigError(f"num_masks must be >= 1, got {self.num_masks}")
        if self.taps not in (1, 2):
            raise ConfigError(f"taps must be 1 or 2, got {self.taps}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        for name in ("epochs", "batch_size", "n_train", "n_val", "teacher_n_train"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.teacher_epochs < 0:
            raise ConfigError("teacher_epochs must be >= 0")
        if not self.strategy.uses_fusion and self.query_source is not QuerySource.TEACHER:
            raise ConfigError(f"query_source={self.query_source.value} has no meaning for strategy={self.strategy.value}")
        t_ch = self.num_classes if self.teacher_tap_index() == self.teacher_depth else self.teacher_channels
        if t_ch % 2:
            raise ConfigError(f"teacher tap has {t_ch} channels; fusion needs an even count")
        if (self.teacher_tap_index() == self.teacher_depth) != (self.student_tap_index() == self.student_depth):
            raise ConfigError("teacher and student must both tap the head, or both tap a conv layer")
        if self.taps == 2 and (self.height % 2 or self.width % 2):
            raise ConfigError("taps=2 needs even height and width")
        self.snapshot_list()
        self.data_config().validate()
        self.teacher_net().validate()
        self.student_net().validate()
        return self

    def snapshot_list(self) -> list[int]:
        try:
            eps = [int(s) for s in self.snapshot_epochs.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"snapshot_epochs must be comma-separated integers: {self.snapshot_epochs!r}") from exc
        return sorted(set(e for e in eps if 1 <= e <= self.epochs))

    def teacher_tap_index(self) -> int:
        return tap_index(self.teacher_tap, self.teacher_depth)

    def student_tap_index(self) -> int:
        return tap_index(self.student_tap, self.student_depth)

    def data_config(self) -> DataConfig:
        return DataConfig(self.height, self.width, self.num_classes, self.shapes_per_image,
                          self.noise_std, self.color_jitter, self.data_seed)

    def teacher_net(self) -> NetConfig:
        return NetConfig(self.teacher_channels, self.teacher_depth, self.num_classes, seed=self.teacher_seed,
                         feature_tap=self.teacher_tap_index())

    def student_net(self) -> NetConfig:
        return NetConfig(self.student_channels, self.student_depth, self.num_classes, seed=self.seed,
                         feature_tap=self.student_tap_index())

    def replace(self, **kw) -> "DistillConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return {f.name: _format(getattr(self, f.name)) for f in fields(self)}


def tap_index(raw, depth: int) -> int:
    """Map ``"head"`` or a (possibly negative) layer index onto ``0..depth``."""
    if str(raw).strip().lower() == "head":
        return depth
    try:
        i = int(raw)
    except ValueError as exc:
        raise ConfigError(f"tap must be 'head' or a layer index, got {raw!r}") from exc
    if not -depth <= i < depth:
        raise ConfigError(f"tap {i} out of range for depth {depth}")
    return i % depth


_FIELDS = {f.name: f for f in fields(DistillConfig)}
_TYPES = {
    "strategy": Strategy, "query_source": QuerySource, "div_sets": DivSets, "lr_schedule": LrSchedule,
}


def _format(v) -> str:
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(key: str, raw: str):
    default = getattr(DistillConfig(), key)
    raw = raw.strip()
    try:
        if key in _TYPES:
            return _TYPES[key](raw)
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_pairs(pairs: dict[str, str], base: DistillConfig | None = None) -> DistillConfig:
    base = base or DistillConfig()
    updates = {}
    for key, raw in pairs.items():
        key = key.strip().replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        updates[key] = _parse_value(key, raw)
    return dataclasses.replace(base, **updates)


def parse_text(text: str, base: DistillConfig | None = None) -> DistillConfig:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return parse_pairs(pairs, base)


def load(path) -> DistillConfig:
    return parse_text(Path(path).read_text(encoding="utf-8"))


def dump_text(cfg: DistillConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in cfg.to_dict().items())
