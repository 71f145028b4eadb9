"""Orchestration behind the command line: build, fly, evaluate, compare, sweep.

A run directory holds:

- ``config.yaml``: the resolved configuration that produced it
- ``waypoints.txt``: the coverage path
- ``decisions.csv`` and ``captures.csv``: the per-step logs
- ``summary.json``: flight time, distance, completion and the world hash
- ``speed.png``: the speed trace
- ``eval/``: written by :func:`evaluate`, holding the report, the mosaic,
  the class map and the SSIM artifacts
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .artifacts import (
    ArtifactError,
    atomic_directory,
    read_captures,
    read_decisions,
    read_json,
    save_capture_images,
    save_class_map,
    save_rgb,
    write_captures,
    write_csv,
    write_decisions,
    write_json,
)
from .config import RunConfig, dump_config, load_config
from .evaluation import EvalReport, SSIMResult, evaluate_run
from .mission import ADAPTIVE, MissionLog, mission_polygon, run_mission
from .planner import CoveragePlan, plan_coverage, write_waypoints
from .plots import plot_iou_vs_speed, plot_speed_trace, plot_ssim_histogram, save_ssim_map
from .worldgen import FieldWorld, save_field

log = logging.getLogger(__name__)

COMPARISON_COLUMNS = (
    "run", "world_hash", "nominal_speed", "mode", "iou_crop", "iou_weed", "cost", "objective", "completed",
)
SWEEP_SUMMARY_COLUMNS = (
    "nominal_speed", "mode", "n", "iou_crop_mean", "iou_crop_var", "iou_weed_mean", "iou_weed_var",
    "iou_sum_mean", "iou_sum_var", "cost_mean", "objective_mean",
)


def build_plan(cfg: RunConfig, world: FieldWorld) -> CoveragePlan:
    cam = cfg.camera_model()
    poly = mission_polygon(world, cam, cfg.polygon_shape())
    return plan_coverage(poly, cam, cfg.planner.overlap)


def gen_field(cfg: RunConfig, out: Path, overwrite: bool = False) -> FieldWorld:
    world = cfg.build_world()
    with atomic_directory(out, overwrite) as tmp:
        (tmp / "config.yaml").write_text(dump_config(cfg))
        save_field(world, tmp / "orthophoto.png", tmp / "labels.png")
        save_class_map(world.labels, tmp / "labels_color.png")
        f = world.frame
        write_json(tmp / "field.json", {
            "world_hash": world.content_hash(),
            "origin": list(f.origin_world),
            "gsd": f.gsd,
            "raster_width": f.raster_width,
            "raster_height": f.raster_height,
            "regions": [asdict(r) for r in world.regions],
        })
    return world


def plan(cfg: RunConfig, out: Path, overwrite: bool = False) -> CoveragePlan:
    world = cfg.build_world()
    p = build_plan(cfg, world)
    with atomic_directory(out, overwrite) as tmp:
        (tmp / "config.yaml").write_text(dump_config(cfg))
        write_waypoints(p, tmp / "waypoints.txt")
        write_json(tmp / "plan.json", {
            "path_length": p.length,
            "waypoints": len(p.path),
            "mega_cells": len(p.grid.mega_cells),
            "subcells": len(p.grid.subcells()),
            "subcell_size": p.grid.subcell_size,
            "overlap": p.params.overlap,
            "altitude": p.params.altitude,
        })
    return p


def run_summary(cfg: RunConfig, world_hash: str, mlog: MissionLog) -> dict:
    return {
        "mode": mlog.mode,
        "nominal_speed": mlog.nominal_speed,
        "max_discrepancy": mlog.max_discrepancy,
        "cost": mlog.cost,
        "distance": mlog.distance,
        "path_length": mlog.path_length,
        "completed": mlog.completed,
        "steps": mlog.steps,
        "t_max": cfg.mission.t_max,
        "world_hash": world_hash,
        "config": cfg.to_dict(),
    }


def fly(
    cfg: RunConfig,
    out: Path,
    *,
    world: Optional[FieldWorld] = None,
    save_captures: bool = False,
    overwrite: bool = False,
    plots: bool = True,
) -> MissionLog:
    world = cfg.build_world() if world is None else world
    p = build_plan(cfg, world)
    segmenter = cfg.build_segmenter() if cfg.mission.mode == ADAPTIVE else None
    mlog = run_mission(world, p, cfg.mission_config(keep_images=save_captures), segmenter)
    with atomic_directory(out, overwrite) as tmp:
        (tmp / "config.yaml").write_text(dump_config(cfg))
        write_waypoints(p, tmp / "waypoints.txt")
        write_decisions(mlog, tmp / "decisions.csv")
        write_captures(mlog.captures, tmp / "captures.csv")
        write_json(tmp / "summary.json", run_summary(cfg, world.content_hash(), mlog))
        if plots:
            plot_speed_trace(mlog, tmp / "speed.png")
        if save_captures:
            save_capture_images(mlog.captures, tmp / "captures")
    log.info("%s: %s run, %d steps, C=%.0f s, completed=%s", out, mlog.mode, mlog.steps, mlog.cost, mlog.completed)
    return mlog


def load_log(run_dir: Path) -> MissionLog:
    summary = read_json(run_dir / "summary.json")
    return MissionLog(
        mode=summary["mode"],
        captures=read_captures(run_dir / "captures.csv"),
        decisions=read_decisions(run_dir / "decisions.csv"),
        cost=summary["cost"],
        distance=summary["distance"],
        completed=summary["completed"],
        path_length=summary["path_length"],
        nominal_speed=summary["nominal_speed"],
        max_discrepancy=summary["max_discrepancy"],
    )


def evaluate(run_dir: Path, *, world: Optional[FieldWorld] = None, images: bool = True) -> EvalReport:
    run_dir = Path(run_dir)
    if not (run_dir / "summary.json").exists():
        raise ArtifactError(f"{run_dir} is not a run directory (no summary.json)")
    cfg = load_config(run_dir / "config.yaml")
    summary = read_json(run_dir / "summary.json")
    world = cfg.build_world() if world is None else world
    world_hash = world.content_hash()
    if world_hash != summary["world_hash"]:
        raise ArtifactError(f"{run_dir}: world does not match the one the run was flown over")
    mlog = load_log(run_dir)
    p = build_plan(cfg, world)
    report = evaluate_run(
        world, mlog, cfg.build_segmenter(), cfg.eval.alpha,
        camera=cfg.camera_model(), t_max=cfg.mission.t_max, grid=p.grid, with_ssim=cfg.eval.ssim,
    )
    with atomic_directory(run_dir / "eval", overwrite=True) as tmp:
        data = report.to_dict()
        data.update(world_hash=world_hash, nominal_speed=mlog.nominal_speed, alpha=cfg.eval.alpha)
        write_json(tmp / "report.json", data)
        if report.ssim is not None:
            edges = SSIMResult.bin_edges()
            write_csv(tmp / "ssim_histogram.csv", ("bin_lo", "bin_hi", "fraction"),
                      zip(edges[:-1], edges[1:], report.ssim.histogram))
        if images:
            save_rgb(report.mosaic.image, tmp / "mosaic.png")
            save_class_map(report.class_map, tmp / "class_map.png")
            if report.ssim is not None:
                save_ssim_map(report.ssim.map, tmp / "ssim.png")
                plot_ssim_histogram(report.ssim.histogram, SSIMResult.bin_edges(), tmp / "ssim_hist.png")
    return report


def _report_row(run_dir: Path) -> dict:
    report_path = run_dir / "eval" / "report.json"
    if not report_path.exists():
        evaluate(run_dir)
    r = read_json(report_path)
    return {
        "run": run_dir.name,
        "world_hash": r["world_hash"],
        "nominal_speed": r["nominal_speed"],
        "mode": r["mode"],
        "iou_crop": r["iou_crop"],
        "iou_weed": r["iou_weed"],
        "cost": r["cost"],
        "objective": r["objective"],
        "completed": r["completed"],
    }


def compare(run_dirs: Sequence[Path], out: Path, overwrite: bool = False) -> list[dict]:
    """Side-by-side table of evaluated runs; all runs must share one world."""
    if len(run_dirs) < 2:
        raise ArtifactError("compare needs at least two run directories")
    rows = [_report_row(Path(d)) for d in run_dirs]
    hashes = {r["world_hash"] for r in rows}
    if len(hashes) != 1:
        names = ", ".join(f"{r['run']}={r['world_hash'][:12]}" for r in rows)
        raise ArtifactError(f"runs were flown over different worlds: {names}")
    rows.sort(key=lambda r: (r["nominal_speed"], r["mode"], r["run"]))
    with atomic_directory(out, overwrite) as tmp:
        write_csv(tmp / "comparison.csv", COMPARISON_COLUMNS, ([r[c] for c in COMPARISON_COLUMNS] for r in rows))
        best = max(rows, key=lambda r: r["objective"])
        write_json(tmp / "comparison.json", {
            "world_hash": hashes.pop(),
            "runs": [r["run"] for r in rows],
            "best_objective": {"run": best["run"], "objective": best["objective"]},
        })
    return rows


@dataclass(frozen=True)
class SweepTask:
    config: RunConfig
    out: Path
    overwrite: bool


def run_name(mode: str, nominal_speed: float, seed: Optional[int]) -> str:
    name = f"{mode}_s{nominal_speed:g}"
    return name if seed is None else f"{name}_seed{seed}"


def _sweep_one(task: SweepTask) -> dict:
    world = task.config.build_world()
    fly(task.config, task.out, world=world, overwrite=task.overwrite)
    report = evaluate(task.out, world=world, images=False)
    return {
        "run": task.out.name,
        "nominal_speed": task.config.controller.nominal_speed,
        "mode": task.config.mission.mode,
        "seed": task.config.field.seed if task.config.is_synthetic else -1,
        "iou_crop": report.iou_crop,
        "iou_weed": report.iou_weed,
        "cost": report.cost,
        "objective": report.objective,
        "completed": report.completed,
    }


def summarize_sweep(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample variance across seeds for each (nominal speed, mode)."""
    out = []
    for key in sorted({(r["nominal_speed"], r["mode"]) for r in rows}):
        sub = [r for r in rows if (r["nominal_speed"], r["mode"]) == key]
        ddof = 1 if len(sub) > 1 else 0
        crop = np.array([r["iou_crop"] for r in sub])
        weed = np.array([r["iou_weed"] for r in sub])
        out.append({
            "nominal_speed": key[0],
            "mode": key[1],
            "n": len(sub),
            "iou_crop_mean": float(crop.mean()),
            "iou_crop_var": float(crop.var(ddof=ddof)),
            "iou_weed_mean": float(weed.mean()),
            "iou_weed_var": float(weed.var(ddof=ddof)),
            "iou_sum_mean": float((crop + weed).mean()),
            "iou_sum_var": float((crop + weed).var(ddof=ddof)),
            "cost_mean": float(np.mean([r["cost"] for r in sub])),
            "objective_mean": float(np.mean([r["objective"] for r in sub])),
        })
    return out


def sweep(
    cfg: RunConfig,
    root: Path,
    speeds: Sequence[float],
    modes: Sequence[str],
    seeds: Sequence[Optional[int]],
    jobs: int = 1,
    overwrite: bool = False,
) -> list[dict]:
    root = Path(root)
    tasks = []
    for s in speeds:
        for mode in modes:
            for seed in seeds:
                c = cfg.with_overrides(mode=mode, nominal_speed=s, seed=seed)
                tasks.append(SweepTask(c, root / run_name(mode, s, seed), overwrite))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    summary = summarize_sweep(rows)
    run_cols = ("run", "nominal_speed", "mode", "seed", "iou_crop", "iou_weed", "cost", "objective", "completed")
    for name, cols, table in (("sweep_runs.csv", run_cols, rows), ("sweep_summary.csv", SWEEP_SUMMARY_COLUMNS, summary)):
        tmp = root / f".{name}.tmp"
        write_csv(tmp, cols, ([r[c] for c in cols] for r in table))
        os.replace(tmp, root / name)
    plot_iou_vs_speed(summary, root / "iou_vs_speed.png")
    return rows
