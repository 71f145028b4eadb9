"""Golden fixtures with a drift guard.

Three tables are generated from the default configuration:

- ``controller_golden.csv``: g1, g2, w1, w2 and G for reference (cr, cl) cases
- ``stc_paths.csv``: waypoints of the coverage path on five reference grids
- ``blur_curves.csv``: cr, cl and G of a fixed test card against blur length

``regenerate_fixtures(directory)`` compares freshly computed tables with the
committed ones and raises :class:`FixtureDriftError` naming every case that
changed; ``write=True`` rewrites them instead.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Optional

import numpy as np

from .controller import ControllerConfig, coverage_ratio, confidence_level, gain
from .perception import PrototypeSegmenter
from .planner import GridMap, build_mst, stc_path
from .sensor import apply_motion_blur
from .worldgen import FieldSpec, generate_field

FIXTURE_VERSION = "v1"
BLUR_KERNELS = (1, 3, 5, 7, 9, 11)

# (name, cr, cl, provenance)
GOLDEN_CASES: tuple[tuple[str, float, float, str], ...] = (
    ("bare_certain", 0.0, 1.0, "snapshot 1 limit: nothing in view, full certainty"),
    ("snapshot1_sparse_confident", 0.05, 0.95, "snapshot 1: few crops, clear image"),
    ("snapshot2_sparse_insecure", 0.05, 0.40, "snapshot 2: little vegetation, insecure prediction"),
    ("snapshot3_dense_certain", 0.45, 0.98, "snapshot 3: much vegetation, very confident"),
    ("snapshot4_dense_blurred", 0.35, 0.80, "snapshot 4: full of vegetation, less confident"),
    ("case_low_vegetation", 0.08, 0.92, "operational case: concrete estimate, low vegetation"),
    ("case_high_vegetation", 0.40, 0.85, "operational case: concrete estimate, high vegetation"),
    ("case_blurred_dense", 0.30, 0.60, "operational case: motion blur, dense"),
    ("case_blurred_sparse", 0.10, 0.55, "operational case: motion blur, sparse"),
    ("case_overconfident", 0.50, 0.99, "operational case: overly confident estimator"),
    ("g1_zero_breakpoint", 0.15, 0.75, "both translation functions at their zero"),
    ("confidence_floor", 0.20, 1.0 / 3.0, "lowest reachable confidence of a 3-way argmax"),
)

# name -> mega cells (column, row)
REFERENCE_GRIDS: dict[str, frozenset] = {
    "single": frozenset({(0, 0)}),
    "rect_3x2": frozenset((i, j) for i in range(3) for j in range(2)),
    "l_shape": frozenset({(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)}),
    "u_shape": frozenset({(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (2, 2)}),
    "plus": frozenset({(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)}),
}
REFERENCE_SUBCELL = 1.0


class FixtureDriftError(AssertionError):
    pass


def _f9(x: float) -> str:
    return f"{x:.9f}"


def controller_table(config: Optional[ControllerConfig] = None) -> list[list[str]]:
    config = config or ControllerConfig()
    rows = [["name", "cr", "cl", "g1", "g2", "w1", "w2", "G", "provenance"]]
    for name, cr, cl, prov in GOLDEN_CASES:
        d = gain(cr, cl, config)
        rows.append([name, _f9(cr), _f9(cl), _f9(d.g1), _f9(d.g2), _f9(d.w1), _f9(d.w2), _f9(d.G), prov])
    return rows


def stc_table() -> list[list[str]]:
    rows = [["grid", "seq", "x", "y"]]
    for name, cells in REFERENCE_GRIDS.items():
        grid = GridMap(cells, (0.0, 0.0), REFERENCE_SUBCELL)
        path = stc_path(grid, build_mst(grid), overlap=0.0, altitude=10.0, dt=1.0).path
        for i, (x, y) in enumerate(path.points):
            rows.append([name, str(i), _f9(x), _f9(y)])
    return rows


def blur_test_card() -> np.ndarray:
    """A 640x480 vegetated image: dense crop rows with weeds, many soil boundaries."""
    spec = FieldSpec(width_m=12.8, height_m=9.6, plant_radius_m=0.12, weed_density=1.0, seed=7)
    return np.array(generate_field(spec).orthophoto)


def blur_table() -> list[list[str]]:
    card = blur_test_card()
    seg = PrototypeSegmenter()
    rows = [["heading", "k", "cr", "cl", "G"]]
    for label, heading in (("vertical", (0.0, 1.0)), ("horizontal", (1.0, 0.0))):
        for k in BLUR_KERNELS:
            r = seg(apply_motion_blur(card, k, heading))
            cr, cl = coverage_ratio(r), confidence_level(r)
            rows.append([label, str(k), _f9(cr), _f9(cl), _f9(gain(cr, cl).G)])
    return rows


TABLES = {
    "controller_golden.csv": controller_table,
    "stc_paths.csv": stc_table,
    "blur_curves.csv": blur_table,
}


def _render(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _diff(name: str, old: str, new: str) -> list[str]:
    old_rows = old.splitlines()
    new_rows = new.splitlines()
    out = []
    for i in range(max(len(old_rows), len(new_rows))):
        a = old_rows[i] if i < len(old_rows) else "<missing>"
        b = new_rows[i] if i < len(new_rows) else "<missing>"
        if a != b:
            case = next(csv.reader([b if b != "<missing>" else a]))[0]
            out.append(f"{name}:{i + 1} [{case}] committed={a!r} computed={b!r}")
    return out


def regenerate_fixtures(directory: Path | str, write: bool = False) -> list[Path]:
    """Check (or with ``write``, rewrite) the fixture tables in ``directory``."""
    directory = Path(directory)
    paths = []
    problems = []
    for name, build in TABLES.items():
        path = directory / name
        text = _render(build())
        paths.append(path)
        if write:
            directory.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        elif not path.exists():
            problems.append(f"{name}: missing (run with write=True to create it)")
        else:
            problems.extend(_diff(name, path.read_text(), text))
    if problems:
        raise FixtureDriftError("fixtures drifted:\n" + "\n".join(problems))
    return paths
