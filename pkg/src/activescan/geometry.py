"""Planar field frame, polygons and polylines.

World coordinates are meters in a local planar frame. The raster frame maps
pixel ``(col, row)`` to the world rectangle
``[ox + col*gsd, ox + (col+1)*gsd) x [oy + row*gsd, oy + (row+1)*gsd)``, so
rows grow with world ``y``. Think of world ``y`` as "southing": the raster is
displayed with row 0 on top, which puts increasing ``y`` downward on screen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.geometry import box

Point = tuple[float, float]

# Absorbs float noise such as 0.3 / 0.1 = 2.9999999999999996 before flooring.
_SNAP = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (degenerate polygon, bad sizes)."""


class OutOfRangeError(GeometryError):
    """A coordinate or arc length falls outside the valid range."""


@dataclass(frozen=True)
class FieldFrame:
    origin_world: Point
    gsd: float
    raster_width: int
    raster_height: int

    def __post_init__(self) -> None:
        if not self.gsd > 0:
            raise GeometryError(f"gsd must be > 0, got {self.gsd}")
        if self.raster_width <= 0 or self.raster_height <= 0:
            raise GeometryError(
                f"raster dims must be > 0, got {self.raster_width}x{self.raster_height}"
            )

    @property
    def width_m(self) -> float:
        return self.raster_width * self.gsd

    @property
    def height_m(self) -> float:
        return self.raster_height * self.gsd

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the world extent."""
        ox, oy = self.origin_world
        return ox, oy, ox + self.width_m, oy + self.height_m

    def extent_polygon(self) -> "Polygon":
        x0, y0, x1, y1 = self.bounds
        return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


def world_to_raster(p: Sequence[float], frame: FieldFrame) -> tuple[int, int]:
    """Map a world point to the ``(col, row)`` of the pixel containing it."""
    ox, oy = frame.origin_world
    out = []
    for axis, value, origin, size in (
        ("x", p[0], ox, frame.raster_width),
        ("y", p[1], oy, frame.raster_height),
    ):
        idx = math.floor((value - origin) / frame.gsd + _SNAP)
        if not 0 <= idx < size:
            lo, hi = origin, origin + size * frame.gsd
            raise OutOfRangeError(f"{axis}={value!r} outside world extent [{lo}, {hi})")
        out.append(idx)
    return out[0], out[1]


def raster_to_world(col: int, row: int, frame: FieldFrame) -> Point:
    """Center of pixel ``(col, row)`` in world coordinates."""
    if not (0 <= col < frame.raster_width and 0 <= row < frame.raster_height):
        raise OutOfRangeError(f"pixel ({col}, {row}) outside raster")
    ox, oy = frame.origin_world
    return ox + (col + 0.5) * frame.gsd, oy + (row + 0.5) * frame.gsd


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[Point, ...]
    _shape: _ShapelyPolygon = field(init=False, repr=False, compare=False)

    def __init__(self, vertices: Iterable[Sequence[float]]):
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        shape = _ShapelyPolygon(verts)
        if not shape.is_valid or shape.area <= 0:
            raise GeometryError(
                f"polygon is degenerate or self-intersecting: {shapely.is_valid_reason(shape)}"
            )
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_shape", shape)

    @property
    def shape(self) -> _ShapelyPolygon:
        return self._shape

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self._shape.bounds

    @property
    def area(self) -> float:
        return self._shape.area

    def intersection(self, other: "Polygon") -> "Polygon":
        inter = self._shape.intersection(other.shape)
        if inter.is_empty or inter.geom_type != "Polygon":
            raise GeometryError("polygon intersection is empty or not a single polygon")
        return Polygon(list(inter.exterior.coords))


def polygon_contains_cell(poly: Polygon, cell_center: Sequence[float], cell_size: float) -> bool:
    """True iff the square cell lies inside ``poly`` (boundary counts as inside).

    Full-rectangle coverage implies all four corners are inside, and unlike a
    corner-only test it stays monotone when a concave notch intrudes between
    two corners.
    """
    if not cell_size > 0:
        raise GeometryError(f"cell_size must be > 0, got {cell_size}")
    half = cell_size / 2.0
    cx, cy = cell_center
    return bool(poly.shape.covers(box(cx - half, cy - half, cx + half, cy + half)))


class Polyline:
    """Ordered world points with cumulative arc length."""

    def __init__(self, points: Iterable[Sequence[float]]):
        pts = np.asarray(list(points), dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise GeometryError("polyline needs >= 2 two-dimensional points")
        self.points = pts
        seg = np.diff(pts, axis=0)
        self.segment_lengths = np.hypot(seg[:, 0], seg[:, 1])
        self.cumulative = np.concatenate(([0.0], np.cumsum(self.segment_lengths)))
        self.total_length = float(self.cumulative[-1])

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"Polyline(n={len(self.points)}, length={self.total_length:.3f})"

    @property
    def is_closed(self) -> bool:
        return bool(np.array_equal(self.points[0], self.points[-1]))

    def distance_to(self, p: Sequence[float]) -> float:
        """Smallest Euclidean distance from ``p`` to any segment."""
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        denom = np.where(denom == 0, 1.0, denom)
        t = np.clip(np.einsum("ij,ij->i", np.asarray(p) - a, ab) / denom, 0.0, 1.0)
        proj = a + ab * t[:, None]
        return float(np.min(np.hypot(*(proj - np.asarray(p)).T)))


def arc_position(line: Polyline, d: float) -> tuple[Point, Point]:
    """Point and unit heading at arc length ``d`` along ``line``.

    At a joint between segments the outgoing segment's heading is returned;
    at the very end the last segment's heading is used. Zero-length segments
    are skipped when choosing a heading.
    """
    L = line.total_length
    if not 0.0 <= d <= L:
        raise OutOfRangeError(f"arc length {d} outside [0, {L}]")
    nonzero = np.flatnonzero(line.segment_lengths > 0)
    if len(nonzero) == 0:
        raise GeometryError("polyline has zero length")
    # first segment whose end lies strictly beyond d
    seg = int(np.searchsorted(line.cumulative[1:], d, side="right"))
    if seg >= len(line.segment_lengths):
        seg = int(nonzero[-1])
    elif line.segment_lengths[seg] == 0:
        later = nonzero[nonzero >= seg]
        seg = int(later[0]) if len(later) else int(nonzero[-1])
    a = line.points[seg]
    b = line.points[seg + 1]
    length = line.segment_lengths[seg]
    heading = (b - a) / length
    t = min(max((d - line.cumulative[seg]) / length, 0.0), 1.0)
    p = a + (b - a) * t
    return (float(p[0]), float(p[1])), (float(heading[0]), float(heading[1]))
