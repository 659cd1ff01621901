"""Teacher training, distillation under each strategy, and the ablation suite."""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import tensor as T
from .ascm import MaskSet, SelectionUnits, generate_masks
from .config import DistillConfig, LrSchedule, Strategy, dump_text, parse_text, tap_index
from .losses import (
    DivSets,
    LossBreakdown,
    distill_channel_loss,
    distill_spatial_loss,
    diversity_loss,
    masked_feat_loss,
    task_loss,
    total_loss,
)
from .nets import AlignLayer, ConvNet, align, build_student, build_teacher, inherit_init
from .optim import SGD
from .stca import FusionParams, QuerySource, stca_forward
from .synth import DataConfig, generate, make_split, miou
from .tenio import atomic_open, load_checkpoint, save_checkpoint, save_pgm
from .tensor import NumericError, Tape, Tensor

log = logging.getLogger(__name__)

EVAL_BATCH = 64


@functools.lru_cache(maxsize=8)
def _split(cfg: DataConfig, split: str, n: int):
    images, labels = make_split(cfg, split, n)
    images.setflags(write=False)
    labels.setflags(write=False)
    return images, labels


def fixed_teacher_mask(f_t: np.ndarray) -> np.ndarray:
    """Per-pixel L2 norm of teacher features, min-max scaled to [0, 1].

    A crude stand-in for offline teacher-derived masks; returns ``1 x H x W``
    (``B x 1 x H x W`` for batches).  A constant norm map yields all ones.
    """
    f_t = np.asarray(f_t)
    batched = f_t.ndim == 4
    f = f_t if batched else f_t[None]
    norm = np.sqrt(np.sum(f.astype(np.float64) ** 2, axis=1))
    lo = norm.min(axis=(1, 2), keepdims=True)
    hi = norm.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    out = np.where(span > 0, (norm - lo) / np.where(span > 0, span, 1), 1.0)
    out = out[:, None].astype(f_t.dtype)
    return out if batched else out[0]


def pairwise_dice(masks: np.ndarray) -> float:
    """Mean over images and unordered pairs i<j of ``2<a,b> / (|a|^2 + |b|^2)``.

    ``masks`` is ``B x M x ...``.
    """
    b, m = masks.shape[:2]
    if m < 2:
        return 0.0
    flat = masks.reshape(b, m, -1).astype(np.float64)
    gram = flat @ flat.transpose(0, 2, 1)
    sq = np.diagonal(gram, axis1=1, axis2=2)
    iu, ju = np.triu_indices(m, k=1)
    dice = 2 * gram[:, iu, ju] / (sq[:, iu] + sq[:, ju])
    return float(dice.mean())


class DistillModel:
    """Student plus every trainable distillation component for one strategy."""

    def __init__(self, cfg: DistillConfig, teacher: ConvNet):
        self.cfg = cfg
        self.strategy = cfg.strategy
        self.student = build_student(cfg.student_net())
        self.inherited = inherit_init(self.student, teacher) if cfg.inherit else 0
        s_ch = [self.student.tap_channels(), cfg.student_channels][:cfg.taps]
        t_ch = [cfg.num_classes if cfg.teacher_tap_index() == cfg.teacher_depth else cfg.teacher_channels,
                cfg.teacher_channels][:cfg.taps]
        self.aligns: list[AlignLayer] = []
        self.fusions: list[FusionParams] = []
        self.units: list[SelectionUnits] = []
        if self.strategy is not Strategy.NO_KD:
            for tap in range(cfg.taps):
                base = 7919 * (cfg.seed + 1) + 101 * tap
                self.aligns.append(AlignLayer(s_ch[tap], t_ch[tap], seed=base + 1,
                                              identity=s_ch[tap] == t_ch[tap]))
                if self.strategy.uses_fusion:
                    self.fusions.append(FusionParams(t_ch[tap], seed=base + 2, query_source=cfg.query_source))
                    self.units.append(SelectionUnits(cfg.num_masks, t_ch[tap], seed=base + 3))

    def named_parameters(self) -> dict[str, Tensor]:
        out = {f"student.{k}": v for k, v in self.student.named_parameters().items()}
        for i, a in enumerate(self.aligns):
            if a.kernel is not None:
                out[f"align{i}.kernel"] = a.kernel
        for i, fp in enumerate(self.fusions):
            out.update({f"fusion{i}.{k}": v for k, v in fp.named_parameters().items()})
        for i, u in enumerate(self.units):
            out.update({f"units{i}.{k}": v for k, v in u.named_parameters().items()})
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def masks(self, f_t: Tensor, f_s_aligned: Tensor, tap: int = 0) -> MaskSet:
        fused = stca_forward(f_t, f_s_aligned, self.fusions[tap])
        return generate_masks(self.units[tap], fused)

    def objective(self, x: Tensor, labels: np.ndarray, teacher_feats: list, fixed_masks: list | None = None):
        """Build the strategy's loss for a batch.  Returns ``(total, breakdown)``."""
        cfg = self.cfg
        logits, s_feats = self.student.forward(x, taps=cfg.taps)
        task = task_loss(logits, labels)
        if self.strategy is Strategy.NO_KD:
            return total_loss(task, alpha=cfg.alpha, lam=cfg.lam)
        d_c, d_s, div = [], [], []
        for tap in range(cfg.taps):
            f_t = teacher_feats[tap]
            f_s = align(s_feats[tap], self.aligns[tap])
            if self.strategy is Strategy.NO_MASK:
                ones = Tensor(np.ones((f_t.shape[0], 1, *f_t.shape[-2:]), dtype=f_t.dtype))
                d_s.append(masked_feat_loss(f_t, f_s, ones))
                continue
            if self.strategy is Strategy.FIXED_TEACHER_MASK:
                d_s.append(distill_spatial_loss(f_t, f_s, fixed_masks[tap]))
                continue
            if cfg.stop_grad_masks:
                # generator sees a detached student and trains on the diversity term alone
                ms = self.masks(f_t, f_s.detach(), tap)
                weights = MaskSet(ms.channel.detach(), ms.spatial.detach())
            else:
                ms = weights = self.masks(f_t, f_s, tap)
            if self.strategy.uses_channel:
                d_c.append(distill_channel_loss(f_t, f_s, weights.channel))
            if self.strategy.uses_spatial:
                d_s.append(distill_spatial_loss(f_t, f_s, weights.spatial))
            terms = []
            if self.strategy.uses_spatial and cfg.div_sets in (DivSets.SPATIAL, DivSets.BOTH):
                terms.append(diversity_loss(ms.spatial, batched=True))
            if self.strategy.uses_channel and cfg.div_sets in (DivSets.CHANNEL, DivSets.BOTH):
                terms.append(diversity_loss(ms.channel, batched=True))
            if terms:
                div.append(terms[0] if len(terms) == 1 else T.add(terms[0], terms[1]))
        return total_loss(task, _tap_mean(d_c), _tap_mean(d_s), _tap_mean(div), alpha=cfg.alpha, lam=cfg.lam)


def _tap_mean(terms: list) -> Optional[Tensor]:
    if not terms:
        return None
    acc = terms[0]
    for t in terms[1:]:
        acc = T.add(acc, t)
    return T.scale(acc, 1.0 / len(terms)) if len(terms) > 1 else acc


@dataclass
class RunReport:
    name: str
    strategy: str
    seed: int
    config: dict
    epochs: list = field(default_factory=list)
    final_miou: float = float("nan")
    mask_snapshots: dict = field(default_factory=dict)
    mask_overlap: Optional[float] = None
    teacher_checksum: str = ""
    wall_clock: float = 0.0
    inherited: int = 0
    error: Optional[str] = None

    def metrics(self) -> dict:
        """Everything except wall-clock, for bitwise determinism checks."""
        return {
            "epochs": self.epochs,
            "final_miou": self.final_miou,
            "mask_overlap": self.mask_overlap,
            "teacher_checksum": self.teacher_checksum,
            "snapshots": {e: {k: v.tobytes() for k, v in s.items()} for e, s in self.mask_snapshots.items()},
        }

    def jsonl(self) -> str:
        lines = [json.dumps({"name": self.name, **rec}) for rec in self.epochs]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with atomic_open(out_dir / f"{self.name}.jsonl", "w") as fh:
            fh.write(self.jsonl())
        with atomic_open(out_dir / f"{self.name}.summary.csv", "w") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "strategy", "seed", "final_miou", "mask_overlap", "wall_clock", "teacher_checksum"])
            w.writerow([self.name, self.strategy, self.seed, f"{self.final_miou:.6f}",
                        "" if self.mask_overlap is None else f"{self.mask_overlap:.6f}",
                        f"{self.wall_clock:.2f}", self.teacher_checksum])
        with atomic_open(out_dir / f"{self.name}.config.txt", "w") as fh:
            fh.write("".join(f"{k}={v}\n" for k, v in self.config.items()))
        for epoch, snap in self.mask_snapshots.items():
            for m, mask in enumerate(snap["spatial"][0] if "spatial" in snap else []):
                save_pgm(out_dir / f"{self.name}.epoch{epoch}.spatial{m}.pgm", mask)


def loss_log_csv(steps: list[tuple[int, LossBreakdown]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["step", "task", "distill_c", "distill_s", "div", "total"])
    for step, b in steps:
        w.writerow([step, b.task, b.distill_c, b.distill_s, b.div, b.total])
    return buf.getvalue()


def evaluate(net: ConvNet, images: np.ndarray, labels: np.ndarray, k: int) -> float:
    preds = [net.predict(Tensor(images[i:i + EVAL_BATCH])) for i in range(0, len(images), EVAL_BATCH)]
    return miou(np.concatenate(preds), labels, k)


def _lr_at(cfg_lr: float, schedule: LrSchedule, it: int, total: int) -> float:
    if schedule is LrSchedule.POLY:
        return cfg_lr * (1 - it / total) ** 0.9
    return cfg_lr


def _mean_breakdown(items: list[LossBreakdown]) -> dict:
    keys = ("task", "distill_c", "distill_s", "div", "total")
    return {k: float(np.mean([getattr(b, k) for b in items])) for k in keys}


def train_teacher(cfg: DistillConfig, out_dir=None) -> tuple[ConvNet, RunReport]:
    cfg.validate()
    dcfg = cfg.data_config()
    x_tr, y_tr = _split(dcfg, "train", cfg.teacher_n_train)
    x_va, y_va = _split(dcfg, "val", cfg.n_val)
    teacher = build_teacher(cfg.teacher_net())
    opt = SGD(teacher.parameters(), cfg.teacher_lr, cfg.momentum, cfg.weight_decay)
    rng = np.random.default_rng([cfg.teacher_seed, 17])
    report = RunReport("teacher", "teacher", cfg.teacher_seed, cfg.to_dict())
    t0 = time.perf_counter()
    n = len(x_tr)
    steps_per_epoch = -(-n // cfg.batch_size)
    total_steps = max(1, cfg.teacher_epochs * steps_per_epoch)
    step = 0
    step_log = []
    for epoch in range(1, cfg.teacher_epochs + 1):
        perm = rng.permutation(n)
        items = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            with Tape() as tape:
                logits, _ = teacher.forward(Tensor(x_tr[idx]))
                loss, bd = total_loss(task_loss(logits, y_tr[idx]))
            if not np.isfinite(loss.item()):
                raise NumericError(f"teacher loss diverged at step {step}")
            opt.zero_grad()
            tape.backward(loss)
            opt.step(_lr_at(cfg.teacher_lr, cfg.lr_schedule, step, total_steps))
            items.append(bd)
            step_log.append((step, bd))
            step += 1
        val = evaluate(teacher, x_va, y_va, cfg.num_classes)
        report.epochs.append({"epoch": epoch, "val_miou": val, **_mean_breakdown(items)})
        log.info("teacher epoch %d  loss %.4f  val mIoU %.4f", epoch, report.epochs[-1]["task"], val)
    report.final_miou = evaluate(teacher, x_va, y_va, cfg.num_classes)
    report.teacher_checksum = teacher.checksum()
    report.wall_clock = time.perf_counter() - t0
    teacher.set_requires_grad(False)
    if out_dir is not None:
        save_teacher(out_dir, teacher, cfg)
        report.write(out_dir)
        with atomic_open(Path(out_dir) / "teacher.loss.csv", "w") as fh:
            fh.write(loss_log_csv(step_log))
    return teacher, report


def teacher_features(teacher: ConvNet, images: np.ndarray, taps: int) -> list[np.ndarray]:
    outs = [[] for _ in range(taps)]
    for i in range(0, len(images), EVAL_BATCH):
        _, feats = teacher.forward(Tensor(images[i:i + EVAL_BATCH]), taps=taps)
        for t in range(taps):
            outs[t].append(feats[t].data)
    return [np.concatenate(o) for o in outs]


def probe_masks(model: DistillModel, teacher: ConvNet, images: np.ndarray) -> dict[str, np.ndarray]:
    """Masks of tap 0 for a stack of images (no tape)."""
    x = Tensor(images)
    f_t = teacher.forward(x, taps=1)[1][0]
    if model.strategy is Strategy.FIXED_TEACHER_MASK:
        return {"spatial": fixed_teacher_mask(f_t.data)}
    if not model.strategy.uses_fusion:
        return {}
    _, s_feats = model.student.forward(x, taps=1)
    ms = model.masks(f_t, align(s_feats[0], model.aligns[0]))
    return {"spatial": ms.spatial.data.copy(), "channel": ms.channel.data.copy()}


def distill(teacher: ConvNet, cfg: DistillConfig, out_dir=None, name: str | None = None) -> tuple[DistillModel, RunReport]:
    """Train a student against a frozen teacher under ``cfg.strategy``."""
    cfg.validate()
    teacher.set_requires_grad(False)
    # the tap is a read-out choice, not a parameter; follow the run's config
    teacher.feature_tap = tap_index(cfg.teacher_tap, teacher.cfg.depth)
    checksum_before = teacher.checksum()
    dcfg = cfg.data_config()
    x_tr, y_tr = _split(dcfg, "train", cfg.n_train)
    x_va, y_va = _split(dcfg, "val", cfg.n_val)
    name = name or f"{cfg.strategy.value}.{cfg.query_source.value}.seed{cfg.seed}"

    model = DistillModel(cfg, teacher)
    opt = SGD(model.parameters(), cfg.lr, cfg.momentum, cfg.weight_decay)
    feats = teacher_features(teacher, x_tr, cfg.taps) if cfg.strategy is not Strategy.NO_KD else []
    fixed = [fixed_teacher_mask(f) for f in feats] if cfg.strategy is Strategy.FIXED_TEACHER_MASK else []

    report = RunReport(name, cfg.strategy.value, cfg.seed, cfg.to_dict(), inherited=model.inherited)
    probe = x_va[cfg.probe_index:cfg.probe_index + 1]
    overlap_imgs = x_va[:cfg.overlap_images]
    snapshots = set(cfg.snapshot_list())
    rng = np.random.default_rng([cfg.seed, 29])
    n = len(x_tr)
    total_steps = cfg.epochs * -(-n // cfg.batch_size)
    step = 0
    step_log = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        items = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            t_feats = [Tensor(f[idx]) for f in feats]
            f_masks = [Tensor(m[idx]) for m in fixed]
            with Tape() as tape:
                total, bd = model.objective(Tensor(x_tr[idx]), y_tr[idx], t_feats, f_masks)
            if not np.isfinite(bd.total):
                raise NumericError(f"distillation loss diverged at step {step}")
            opt.zero_grad()
            tape.backward(total)
            opt.step(_lr_at(cfg.lr, cfg.lr_schedule, step, total_steps))
            items.append(bd)
            step_log.append((step, bd))
            step += 1
        val = evaluate(model.student, x_va, y_va, cfg.num_classes)
        report.epochs.append({"epoch": epoch, "val_miou": val, **_mean_breakdown(items)})
        if epoch in snapshots:
            report.mask_snapshots[epoch] = probe_masks(model, teacher, probe)
        log.info("%s epoch %d  total %.4f  val mIoU %.4f", name, epoch, report.epochs[-1]["total"], val)
    report.final_miou = report.epochs[-1]["val_miou"]
    if cfg.strategy.uses_spatial:
        masks = probe_masks(model, teacher, overlap_imgs)
        report.mask_overlap = pairwise_dice(masks["spatial"])
    report.teacher_checksum = teacher.checksum()
    if report.teacher_checksum != checksum_before:
        raise RuntimeError("teacher parameters changed during distillation")
    report.wall_clock = time.perf_counter() - t0
    if out_dir is not None:
        save_distill(Path(out_dir) / name, teacher, model, cfg)
        report.write(out_dir)
        with atomic_open(Path(out_dir) / f"{name}.loss.csv", "w") as fh:
            fh.write(loss_log_csv(step_log))
    return model, report


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_teacher(directory, teacher: ConvNet, cfg: DistillConfig) -> None:
    tensors = {f"teacher.{k}": v.data for k, v in teacher.named_parameters().items()}
    save_checkpoint(directory, tensors, {"config.txt": dump_text(cfg)})


def load_teacher(directory) -> tuple[ConvNet, DistillConfig]:
    directory = Path(directory)
    cfg = parse_text((directory / "config.txt").read_text(encoding="utf-8"))
    state = load_checkpoint(directory)
    teacher = build_teacher(cfg.teacher_net())
    teacher.load_state({k[len("teacher."):]: v for k, v in state.items() if k.startswith("teacher.")})
    teacher.set_requires_grad(False)
    return teacher, cfg


def save_distill(directory, teacher: ConvNet, model: DistillModel, cfg: DistillConfig) -> None:
    tensors = {f"teacher.{k}": v.data for k, v in teacher.named_parameters().items()}
    tensors.update({k: v.data for k, v in model.named_parameters().items()})
    save_checkpoint(directory, tensors, {"config.txt": dump_text(cfg)})


def load_distill(directory) -> tuple[ConvNet, DistillModel, DistillConfig]:
    teacher, cfg = load_teacher(directory)
    state = load_checkpoint(directory)
    model = DistillModel(cfg, teacher)
    for name, p in model.named_parameters().items():
        p.data[...] = state[name]
    return teacher, model, cfg


def export_masks(checkpoint, image_seed: int, out_dir) -> list[Path]:
    """Spatial masks as PGM (one per unit) and channel masks as CSV."""
    teacher, model, cfg = load_distill(checkpoint)
    if not model.strategy.uses_fusion:
        raise ValueError(f"strategy {model.strategy.value} has no learnable masks to export")
    sample = generate(image_seed, cfg.data_config())
    masks = probe_masks(model, teacher, sample.image[None])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for m, mask in enumerate(masks["spatial"][0]):
        path = out_dir / f"spatial_mask_{m}.pgm"
        save_pgm(path, mask)
        written.append(path)
    path = out_dir / "channel_masks.csv"
    with atomic_open(path, "w") as fh:
        csv.writer(fh).writerows([[f"{v:.8g}" for v in row] for row in masks["channel"][0]])
    written.append(path)
    return written


def export_attention(checkpoint, image_seed: int, out_dir) -> list[Path]:
    from .tenio import save_ten

    teacher, model, cfg = load_distill(checkpoint)
    if not model.strategy.uses_fusion:
        raise ValueError(f"strategy {model.strategy.value} has no fusion module")
    sample = generate(image_seed, cfg.data_config())
    x = Tensor(sample.image)
    f_t = teacher.forward(x)[1][0]
    f_s = align(model.student.forward(x)[1][0], model.aligns[0])
    fused, a = stca_forward(f_t, f_s, model.fusions[0], return_attention=True)
    out_dir = Path(out_dir)
    paths = [out_dir / "attention.ten", out_dir / "fused.ten"]
    save_ten(paths[0], a.data)
    save_ten(paths[1], fused.data)
    return paths


# ---------------------------------------------------------------------------
# ablation suite
# ---------------------------------------------------------------------------

ABLATION_ROWS = [
    (Strategy.NO_KD, QuerySource.TEACHER),
    (Strategy.NO_MASK, QuerySource.TEACHER),
    (Strategy.FIXED_TEACHER_MASK, QuerySource.TEACHER),
    (Strategy.ACAM_SPATIAL_ONLY, QuerySource.TEACHER),
    (Strategy.ACAM_CHANNEL_ONLY, QuerySource.TEACHER),
    (Strategy.ACAM_FULL, QuerySource.TEACHER),
    (Strategy.ACAM_FULL, QuerySource.STUDENT),
]


@dataclass
class AblationRow:
    strategy: Strategy
    query_source: QuerySource
    reports: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.strategy.value}/{self.query_source.value}"

    def mious(self) -> list[float]:
        return [r.final_miou for r in self.reports if r.error is None]

    def mean(self) -> float:
        vals = self.mious()
        return float(np.mean(vals)) if vals else float("nan")

    def failed(self) -> int:
        return sum(r.error is not None for r in self.reports)


def run_ablation_suite(base_cfg: DistillConfig, seeds=(0, 1, 2, 3, 4), teacher: ConvNet | None = None,
                       rows=ABLATION_ROWS, out_dir=None) -> list[AblationRow]:
    if teacher is None:
        teacher, _ = train_teacher(base_cfg)
    table = []
    for strategy, qs in rows:
        row = AblationRow(strategy, qs)
        for seed in seeds:
            cfg = base_cfg.replace(strategy=strategy, query_source=qs, seed=seed)
            try:
                _, rep = distill(teacher, cfg)
            except Exception as exc:  # suite keeps going; the row records the failure
                log.exception("run %s seed %d failed", row.label, seed)
                rep = RunReport(f"{strategy.value}.{qs.value}.seed{seed}", strategy.value, seed, cfg.to_dict(),
                                error=f"{type(exc).__name__}: {exc}")
            row.reports.append(rep)
        table.append(row)
    if out_dir is not None:
        out_dir = Path(out_dir)
        with atomic_open(out_dir / "ablation.csv", "w") as fh:
            fh.write(ablation_csv(table, seeds))
        for row in table:
            for rep in row.reports:
                if rep.error is None:
                    rep.write(out_dir / "runs")
    return table


def ablation_csv(table: list[AblationRow], seeds) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["strategy", "query_source", *[f"seed{s}" for s in seeds], "mean", "failed"])
    for row in table:
        cells = [("ERR" if r.error else f"{r.final_miou:.6f}") for r in row.reports]
        w.writerow([row.strategy.value, row.query_source.value, *cells, f"{row.mean():.6f}", row.failed()])
    return buf.getvalue()


def format_table(table: list[AblationRow]) -> str:
    lines = [f"{'row':<32}{'mean mIoU':>10}  per-seed"]
    for row in table:
        per = " ".join("ERR" if r.error else f"{r.final_miou:.4f}" for r in row.reports)
        lines.append(f"{row.label:<32}{row.mean():>10.4f}  {per}")
    return "\n".join(lines)


def ordering_checks(table: list[AblationRow]) -> list[tuple[str, bool]]:
    """Directional comparisons between mean final mIoU of the ablation rows."""
    by = {(r.strategy, r.query_source): r.mean() for r in table}
    q = QuerySource.TEACHER
    full = by[(Strategy.ACAM_FULL, q)]
    sp = by[(Strategy.ACAM_SPATIAL_ONLY, q)]
    ch = by[(Strategy.ACAM_CHANNEL_ONLY, q)]
    nomask = by[(Strategy.NO_MASK, q)]
    nokd = by[(Strategy.NO_KD, q)]
    return [
        ("acam_full > max(spatial_only, channel_only)", full > max(sp, ch)),
        ("min(spatial_only, channel_only) > no_mask", min(sp, ch) > nomask),
        ("no_mask >= no_kd", nomask >= nokd),
        ("acam_full - no_kd >= 0.02", full - nokd >= 0.02),
    ]
