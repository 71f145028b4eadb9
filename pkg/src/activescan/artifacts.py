"""Run-directory persistence: atomic directories, CSV/JSON logs, PNG rasters.

Floats are written with ``repr`` so that every value round-trips exactly and
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import contextlib
import csv
import json
import math
import os
import shutil
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np
from PIL import Image

from .controller import ControllerDecision
from .mission import MissionLog
from .sensor import Capture

DECISION_COLUMNS = ("i", "t", "x", "y", "s_prev", "cr", "cl", "g1", "g2", "w1", "w2", "G", "u", "s_i")
CAPTURE_COLUMNS = ("index", "t", "x", "y", "heading_x", "heading_y", "speed", "kernel")

# background black, crop green, weed yellow
CLASS_PALETTE = ((0, 0, 0), (0, 200, 0), (255, 230, 0))


class ArtifactError(ValueError):
    pass


@contextlib.contextmanager
def atomic_directory(target: Path | str, overwrite: bool = False) -> Iterator[Path]:
    """Yield a scratch directory that is renamed to ``target`` on success.

    On any exception the scratch directory is removed and ``target`` is left
    untouched.
    """
    target = Path(target)
    if target.exists() and not overwrite:
        raise ArtifactError(f"{target} already exists")
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.parent / f".{target.name}.tmp-{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if target.exists():
        shutil.rmtree(target)
    os.rename(tmp, target)


def fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else repr(v)
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path | str) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path | str, obj: Any) -> None:
    """Pretty JSON with sorted keys; non-finite floats become null."""
    Path(path).write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n")


def read_json(path: Path | str) -> Any:
    return json.loads(Path(path).read_text())


def decision_rows(log: MissionLog) -> list[tuple]:
    rows = []
    for cap, d in zip(log.captures, log.decisions):
        rows.append((
            cap.index, cap.t, cap.pose[0], cap.pose[1], cap.speed_at_capture,
            d.cr, d.cl, d.g1, d.g2, d.w1, d.w2, d.G, d.u, d.speed,
        ))
    return rows


def write_decisions(log: MissionLog, path: Path | str) -> None:
    write_csv(path, DECISION_COLUMNS, decision_rows(log))


def read_decisions(path: Path | str) -> list[ControllerDecision]:
    out = []
    for r in read_csv(path):
        vals = [float(r[c]) for c in ("cr", "cl", "g1", "g2", "w1", "w2", "G", "u", "s_i")]
        out.append(ControllerDecision(*vals))
    return out


def write_captures(captures: Sequence[Capture], path: Path | str) -> None:
    write_csv(path, CAPTURE_COLUMNS, (
        (c.index, c.t, c.pose[0], c.pose[1], c.heading[0], c.heading[1], c.speed_at_capture, c.kernel)
        for c in captures
    ))


def read_captures(path: Path | str) -> list[Capture]:
    """Capture metadata from a manifest; pixels are left for re-rendering."""
    out = []
    for r in read_csv(path):
        out.append(Capture(
            index=int(r["index"]),
            t=float(r["t"]),
            pose=(float(r["x"]), float(r["y"])),
            heading=(float(r["heading_x"]), float(r["heading_y"])),
            speed_at_capture=float(r["speed"]),
            kernel=int(r["kernel"]),
        ))
    return out


def save_rgb(image: np.ndarray, path: Path | str) -> None:
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8), "RGB").save(path)


def save_class_map(class_map: np.ndarray, path: Path | str) -> None:
    """Paletted PNG with the class palette; pixel values are class ids."""
    im = Image.fromarray(np.ascontiguousarray(class_map, dtype=np.uint8), "P")
    im.putpalette([c for rgb in CLASS_PALETTE for c in rgb])
    im.save(path)


def save_capture_images(captures: Sequence[Capture], directory: Path | str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for c in captures:
        if c.image is None:
            raise ArtifactError(f"capture {c.index} holds no pixels")
        save_rgb(c.image, directory / f"{c.index:05d}.png")
