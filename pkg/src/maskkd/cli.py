"""Command-line entry point: ``maskkd <command> [--config FILE] [--key value ...]``.

Any ``DistillConfig`` field can be overridden with ``--key value``; the
precedence is command line, then config file, then built-in default.
Failures print one ``E_<CATEGORY>: message`` line to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .config import DistillConfig
from .nets import ConfigError
from .tenio import FormatError, save_label_pgm, save_ten
from .tensor import ContractError, NumericError, ShapeError

EXIT_CODES = {"E_CONFIG": 2, "E_IO": 3, "E_NUMERIC": 4, "E_SHAPE": 5}
GRAD_TOL = 1e-3


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _split_overrides(extra: list[str]) -> dict[str, str]:
    pairs = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {tok}")
            key, value = tok[2:], extra[i + 1]
            i += 2
        pairs[key] = value
    return pairs


def resolve_config(path, overrides: dict[str, str]) -> DistillConfig:
    base = DistillConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError("E_IO", f"cannot read config {path}: {exc.strerror or exc}") from exc
        base = config_mod.parse_text(text)
    return config_mod.parse_pairs(overrides, base).validate()


def _load_teacher_or_train(args, cfg):
    from .harness import load_teacher, train_teacher

    if args.teacher:
        teacher, _ = load_teacher(args.teacher)
        return teacher
    teacher, report = train_teacher(cfg)
    print(f"teacher trained: val mIoU {report.final_miou:.4f}")
    return teacher


def cmd_train_teacher(args, cfg) -> int:
    from .harness import train_teacher

    _, report = train_teacher(cfg, out_dir=args.out)
    print(f"teacher val mIoU {report.final_miou:.4f}  checksum {report.teacher_checksum[:16]}  -> {args.out}")
    return 0


def cmd_distill(args, cfg) -> int:
    from .harness import distill

    teacher = _load_teacher_or_train(args, cfg)
    _, report = distill(teacher, cfg, out_dir=args.out)
    print(f"{report.name}: final val mIoU {report.final_miou:.4f}  checkpoint {Path(args.out) / report.name}")
    return 0


def cmd_ablate(args, cfg) -> int:
    from .harness import format_table, ordering_checks, run_ablation_suite

    seeds = [int(s) for s in args.seeds.split(",")]
    teacher = _load_teacher_or_train(args, cfg)
    table = run_ablation_suite(cfg, seeds=seeds, teacher=teacher, out_dir=args.out)
    print(format_table(table))
    for label, ok in ordering_checks(table):
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
    return 0


def cmd_export_masks(args, cfg) -> int:
    from .harness import export_masks

    for p in export_masks(args.checkpoint, args.image_seed, args.out):
        print(p)
    return 0


def cmd_export_attn(args, cfg) -> int:
    from .harness import export_attention

    for p in export_attention(args.checkpoint, args.image_seed, args.out):
        print(p)
    return 0


def cmd_dump_data(args, cfg) -> int:
    from .synth import generate, sample_seed

    dcfg = cfg.data_config()
    out = Path(args.out)
    for i in range(args.n):
        s = generate(sample_seed(dcfg, args.split, i), dcfg)
        save_ten(out / f"{args.split}_{i:05d}.image.ten", s.image)
        save_label_pgm(out / f"{args.split}_{i:05d}.labels.pgm", s.labels)
    print(f"wrote {args.n} {args.split} samples to {out}")
    return 0


def cmd_gradcheck(args, cfg) -> int:
    from .gradcheck import op_cases, run_case

    if args.full_loss:
        names = ["full_loss"]
    elif args.op == "all":
        names = sorted(op_cases())
    elif args.op:
        names = [args.op]
    else:
        raise ConfigError("gradcheck needs --op NAME, --op all, or --full-loss")
    worst = 0.0
    for name in names:
        try:
            err = max(run_case(name, cfg.seed + t) for t in range(args.trials))
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from exc
        worst = max(worst, err)
        print(f"{name:<20} max relative error {err:.3e}")
    if worst >= GRAD_TOL:
        raise NumericError(f"gradient check failed: max relative error {worst:.3e} >= {GRAD_TOL}")
    return 0


def cmd_dump_config(args, cfg) -> int:
    sys.stdout.write(config_mod.dump_text(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskkd", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
        p.set_defaults(fn=fn)
        return p

    p = add("train-teacher", cmd_train_teacher, "train the teacher and write its checkpoint")
    p.add_argument("--out", default="runs/teacher")
    p = add("distill", cmd_distill, "distill one student under the configured strategy")
    p.add_argument("--out", default="runs/distill")
    p.add_argument("--teacher", help="teacher checkpoint directory (trained from the config if omitted)")
    p = add("ablate", cmd_ablate, "run the seven-row ablation suite")
    p.add_argument("--out", default="runs/ablation")
    p.add_argument("--teacher")
    p.add_argument("--seeds", default="0,1,2,3,4")
    for name, fn in (("export-masks", cmd_export_masks), ("export-attn", cmd_export_attn)):
        p = add(name, fn, f"{name.split('-')[1]} export for one synthetic image")
        p.add_argument("checkpoint")
        p.add_argument("--image-seed", type=int, default=0)
        p.add_argument("--out", required=True)
    p = add("dump-data", cmd_dump_data, "write synthetic samples as .ten images and PGM label maps")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--split", choices=("train", "val"), default="train")
    p = add("gradcheck", cmd_gradcheck, "finite-difference check of backward gradients")
    p.add_argument("--op", help="case name, or 'all'")
    p.add_argument("--full-loss", action="store_true")
    p.add_argument("--trials", type=int, default=1)
    add("dump-config", cmd_dump_config, "print the resolved config")
    return parser


def _categorize(exc: BaseException) -> str:
    if isinstance(exc, CliError):
        return exc.category
    if isinstance(exc, (ConfigError, ContractError)):
        return "E_CONFIG"
    if isinstance(exc, ShapeError):
        return "E_SHAPE"
    if isinstance(exc, (NumericError, FloatingPointError)):
        return "E_NUMERIC"
    if isinstance(exc, (OSError, FormatError, KeyError)):
        return "E_IO"
    if isinstance(exc, ValueError):
        return "E_CONFIG"
    return "E_NUMERIC" if "diverged" in str(exc) else "E_CONFIG"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args.config, _split_overrides(extra))
        if args.dump_config:
            return cmd_dump_config(args, cfg)
        return args.fn(args, cfg)
    except Exception as exc:  # one line per failure, category first
        cat = _categorize(exc)
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"{cat}: {msg}", file=sys.stderr)
        return EXIT_CODES[cat]


if __name__ == "__main__":
    sys.exit(main())
