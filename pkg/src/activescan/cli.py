"""Command line entry point: ``activescan <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig, load_config
from .mission import ADAPTIVE, BASELINE
from . import runs

OUT_ENV = "ACTIVESCAN_OUT"
DEFAULT_OUT_ROOT = "runs"


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _modes(text: str) -> list[str]:
    modes = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in modes if m not in (ADAPTIVE, BASELINE)]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown mode(s): {', '.join(bad)}")
    return modes


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="only print errors")
    common.add_argument("--overwrite", action="store_true", help="replace an existing output directory")

    configured = argparse.ArgumentParser(add_help=False, parents=[common])
    configured.add_argument("--config", type=Path, help="run configuration (YAML); defaults apply if omitted")
    configured.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT_ROOT})")
    configured.add_argument("--seed", type=int, help="override the synthetic field seed")

    parser = argparse.ArgumentParser(prog="activescan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-field", parents=[configured], help="render the field orthophoto and labels")
    sub.add_parser("plan", parents=[configured], help="write the coverage waypoints")

    p = sub.add_parser("fly", parents=[configured], help="fly one mission and log it")
    p.add_argument("--mode", choices=(ADAPTIVE, BASELINE))
    p.add_argument("--nominal-speed", type=float)
    p.add_argument("--save-captures", action="store_true", help="also write every capture as PNG")
    p.add_argument("--eval", action="store_true", help="evaluate the run right after flying")

    p = sub.add_parser("eval", parents=[common], help="score a flown run directory")
    p.add_argument("run_dir", type=Path)

    p = sub.add_parser("compare", parents=[common], help="tabulate evaluated runs over the same world")
    p.add_argument("run_dirs", type=Path, nargs="+")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("sweep", parents=[configured], help="fly speeds x modes x seeds and summarize")
    p.add_argument("--speeds", type=_floats, default=[3.0, 4.0, 5.0, 6.0])
    p.add_argument("--modes", type=_modes, default=[ADAPTIVE, BASELINE])
    p.add_argument("--seeds", type=_ints, default=[0, 1, 2])
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(
        mode=getattr(args, "mode", None),
        nominal_speed=getattr(args, "nominal_speed", None),
        seed=args.seed,
    )


def _out(args, cfg: RunConfig, default_name: str) -> Path:
    if args.out is not None:
        return args.out
    root = os.environ.get(OUT_ENV) or cfg.output_dir or DEFAULT_OUT_ROOT
    return Path(root) / default_name


def _dispatch(args) -> None:
    if args.command == "eval":
        report = runs.evaluate(args.run_dir)
        logging.info("IoU crop %.4f, weed %.4f, objective %.6g", report.iou_crop, report.iou_weed, report.objective)
        return
    if args.command == "compare":
        rows = runs.compare(args.run_dirs, args.out, args.overwrite)
        logging.info("compared %d runs into %s", len(rows), args.out)
        return

    cfg = _config(args)
    if args.command == "gen-field":
        out = _out(args, cfg, "field")
        runs.gen_field(cfg, out, args.overwrite)
    elif args.command == "plan":
        out = _out(args, cfg, "plan")
        p = runs.plan(cfg, out, args.overwrite)
        logging.info("path length %.2f m over %d subcells", p.length, len(p.grid.subcells()))
    elif args.command == "fly":
        seed = cfg.field.seed if cfg.is_synthetic else None
        out = _out(args, cfg, runs.run_name(cfg.mission.mode, cfg.controller.nominal_speed, seed))
        runs.fly(cfg, out, save_captures=args.save_captures, overwrite=args.overwrite)
        if args.eval:
            runs.evaluate(out)
    elif args.command == "sweep":
        if args.jobs < 1:
            raise ValueError("--jobs must be >= 1")
        seeds = args.seeds if cfg.is_synthetic else [None]
        out = _out(args, cfg, "sweep")
        runs.sweep(cfg, out, args.speeds, args.modes, seeds, args.jobs, args.overwrite)
    logging.info("wrote %s", out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        _dispatch(args)
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"activescan {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
