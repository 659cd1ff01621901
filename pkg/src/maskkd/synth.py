"""Seeded synthetic segmentation data: colored rectangles and discs on noise."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np

from .nets import ConfigError
from .tensor import ShapeError

SPLIT_STRIDE = 10_000_000
VAL_OFFSET = 5_000_000


@dataclass(frozen=True)
class DataConfig:
    height: int = 16
    width: int = 16
    num_classes: int = 4
    shapes_per_image: int = 3
    noise_std: float = 0.35
    color_jitter: float = 0.08
    data_seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.height < 16 or self.width < 16:
            raise ConfigError(f"height and width must be >= 16, got {self.height}x{self.width}")
        if self.shapes_per_image < 0 or self.noise_std < 0 or self.color_jitter < 0:
            raise ConfigError("shapes_per_image, noise_std and color_jitter must be nonnegative")


@dataclass
class SyntheticSample:
    image: np.ndarray   # 3 x H x W, float32 in [0, 1]
    labels: np.ndarray  # H x W, int64 in [0, K)
    seed: int


BACKGROUND = np.array([0.5, 0.5, 0.5])


def palette(num_classes: int) -> np.ndarray:
    """Class colors: gray background, then evenly spaced saturated hues."""
    colors = [BACKGROUND]
    for k in range(1, num_classes):
        hue = (k - 1) / (num_classes - 1)
        colors.append(np.array(colorsys.hsv_to_rgb(hue, 0.8, 0.9)))
    return np.stack(colors)


def _shape_mask(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    if rng.random() < 0.5:
        rh = int(rng.integers(h // 5, h // 2 + 1))
        rw = int(rng.integers(w // 5, w // 2 + 1))
        y0 = int(rng.integers(0, h - rh + 1))
        x0 = int(rng.integers(0, w - rw + 1))
        return (yy >= y0) & (yy < y0 + rh) & (xx >= x0) & (xx < x0 + rw)
    r = rng.uniform(min(h, w) / 8, min(h, w) / 4)
    cy = rng.uniform(r, h - r)
    cx = rng.uniform(r, w - r)
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def render(cfg: DataConfig, shapes: list, seed: int, rng: np.random.Generator | None = None) -> SyntheticSample:
    """Paint ``shapes`` (pairs of class id and boolean H x W mask) in order."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    h, w = cfg.height, cfg.width
    pal = palette(cfg.num_classes)
    img = np.broadcast_to(pal[0][:, None, None], (3, h, w)).copy()
    labels = np.zeros((h, w), dtype=np.int64)
    for cls, mask in shapes:
        color = pal[cls] + cfg.color_jitter * rng.standard_normal(3) if cfg.color_jitter else pal[cls]
        img[:, mask] = color[:, None]
        labels[mask] = cls
    if cfg.noise_std:
        img = img + cfg.noise_std * rng.standard_normal(img.shape)
    return SyntheticSample(np.clip(img, 0.0, 1.0).astype(np.float32), labels, seed)


def generate(seed: int, cfg: DataConfig) -> SyntheticSample:
    cfg.validate()
    rng = np.random.default_rng(seed)
    shapes = []
    for _ in range(cfg.shapes_per_image):
        cls = int(rng.integers(1, cfg.num_classes))
        shapes.append((cls, _shape_mask(rng, cfg.height, cfg.width)))
    return render(cfg, shapes, seed, rng)


def sample_seed(cfg: DataConfig, split: str, index: int) -> int:
    if not 0 <= index < VAL_OFFSET:
        raise ConfigError(f"sample index {index} out of range")
    offset = {"train": 0, "val": VAL_OFFSET}[split]
    return cfg.data_seed * SPLIT_STRIDE + offset + index


def make_split(cfg: DataConfig, split: str, n: int, start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``n`` samples of a split into ``N x 3 x H x W`` images and ``N x H x W`` labels."""
    samples = [generate(sample_seed(cfg, split, start + i), cfg) for i in range(n)]
    if not samples:
        return (np.zeros((0, 3, cfg.height, cfg.width), np.float32), np.zeros((0, cfg.height, cfg.width), np.int64))
    return np.stack([s.image for s in samples]), np.stack([s.labels for s in samples])


def confusion_matrix(pred: np.ndarray, true: np.ndarray, k: int) -> np.ndarray:
    pred = np.asarray(pred).reshape(-1)
    true = np.asarray(true).reshape(-1)
    return np.bincount(true * k + pred, minlength=k * k).reshape(k, k)


def miou(pred_labels: np.ndarray, true_labels: np.ndarray, k: int) -> float:
    """Mean IoU over classes that occur in the prediction or the truth."""
    pred_labels = np.asarray(pred_labels)
    true_labels = np.asarray(true_labels)
    if pred_labels.shape != true_labels.shape:
        raise ShapeError(f"miou: prediction {pred_labels.shape} and truth {true_labels.shape} differ")
    for name, arr in (("prediction", pred_labels), ("truth", true_labels)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise ValueError(f"miou: {name} labels outside [0, {k})")
    cm = confusion_matrix(pred_labels.astype(np.int64), true_labels.astype(np.int64), k)
    inter = np.diag(cm).astype(np.float64)
    union = cm.sum(axis=0) + cm.sum(axis=1) - np.diag(cm)
    present = union > 0
    if not present.any():
        return 1.0
    return float(np.mean(inter[present] / union[present]))
