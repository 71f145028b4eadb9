"""Spanning-Tree Coverage planning over a polygonal field.

The field is cut into square mega-cells of twice the lane spacing. A spanning
tree over the mega-cells is grown breadth-first from the start cell, and the
coverage route circles the tree at half-cell (subcell) resolution.

Indices: mega-cell ``(i, j)`` has column ``i`` (world +x) and row ``j``
(world +y, i.e. raster rows). Subcell ``(a, b)`` with ``a // 2 == i`` and
``b // 2 == j`` belongs to mega-cell ``(i, j)``. Ordering is row-major,
``(j, i)``, which is what "lowest index" means throughout.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .geometry import GeometryError, Polygon, Polyline, polygon_contains_cell
from .sensor import CameraModel

Cell = tuple[int, int]
Edge = tuple[Cell, Cell]

# right, down, left, up in (di, dj); "down" is +row.
NEIGHBOR_ORDER: tuple[Cell, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class PlanningError(ValueError):
    pass


def _row_major(c: Cell) -> tuple[int, int]:
    return c[1], c[0]


@dataclass(frozen=True)
class GridMap:
    mega_cells: frozenset[Cell]
    origin: tuple[float, float]
    subcell_size: float

    @property
    def mega_cell_size(self) -> float:
        return 2.0 * self.subcell_size

    def sorted_cells(self) -> list[Cell]:
        return sorted(self.mega_cells, key=_row_major)

    def mega_center(self, c: Cell) -> tuple[float, float]:
        s = self.mega_cell_size
        return self.origin[0] + (c[0] + 0.5) * s, self.origin[1] + (c[1] + 0.5) * s

    def subcells(self) -> list[Cell]:
        out = []
        for i, j in self.mega_cells:
            out.extend(((2 * i, 2 * j), (2 * i + 1, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1)))
        return sorted(out, key=_row_major)

    def subcell_center(self, s: Cell) -> tuple[float, float]:
        z = self.subcell_size
        return self.origin[0] + (s[0] + 0.5) * z, self.origin[1] + (s[1] + 0.5) * z

    def default_start(self) -> Cell:
        i, j = self.sorted_cells()[0]
        return 2 * i, 2 * j


@dataclass(frozen=True)
class PlanParams:
    overlap: float
    altitude: float
    dt: float
    start: Cell


@dataclass(frozen=True)
class CoveragePlan:
    path: Polyline = field(compare=False)
    grid: GridMap
    params: PlanParams
    subcell_route: tuple[Cell, ...]

    @property
    def length(self) -> float:
        return self.path.total_length


def lane_spacing(cam: CameraModel, overlap: float) -> float:
    if not 0.0 <= overlap < 1.0:
        raise PlanningError(f"overlap must lie in [0, 1), got {overlap}")
    return cam.footprint_width * (1.0 - overlap)


def discretize(poly: Polygon, cam: CameraModel, overlap: float) -> GridMap:
    """Grid of mega-cells fully inside ``poly``, anchored at its bounding-box minimum."""
    sub = lane_spacing(cam, overlap)
    mega = 2.0 * sub
    x0, y0, x1, y1 = poly.bounds
    ni = int((x1 - x0) / mega + 1e-9)
    nj = int((y1 - y0) / mega + 1e-9)
    cells = set()
    for j in range(nj):
        for i in range(ni):
            center = (x0 + (i + 0.5) * mega, y0 + (j + 0.5) * mega)
            if polygon_contains_cell(poly, center, mega):
                cells.add((i, j))
    if not cells:
        raise PlanningError(
            f"polygon (bounds {x1 - x0:.2f} x {y1 - y0:.2f} m) cannot hold one "
            f"{mega:.2f} m mega-cell"
        )
    return GridMap(frozenset(cells), (x0, y0), sub)


def _components(cells: Iterable[Cell]) -> list[list[Cell]]:
    remaining = set(cells)
    comps = []
    for seed in sorted(remaining, key=_row_major):
        if seed not in remaining:
            continue
        comp, queue = [], deque([seed])
        remaining.discard(seed)
        while queue:
            c = queue.popleft()
            comp.append(c)
            for di, dj in NEIGHBOR_ORDER:
                n = (c[0] + di, c[1] + dj)
                if n in remaining:
                    remaining.discard(n)
                    queue.append(n)
        comps.append(sorted(comp, key=_row_major))
    return comps


def build_mst(grid: GridMap, start: Optional[Cell] = None) -> list[Edge]:
    """Spanning tree of the 4-connected mega-cell graph.

    With unit weights every spanning tree is minimal; this one is grown
    breadth-first from ``start`` (default: lowest-index mega-cell), expanding
    neighbors in the order right, down, left, up. Edges are ``(parent, child)``
    in discovery order.
    """
    cells = grid.mega_cells
    comps = _components(cells)
    if len(comps) > 1:
        listing = "; ".join(f"{len(c)} cells from {c[0]}" for c in comps)
        raise PlanningError(f"mega-cell grid is disconnected into {len(comps)} components: {listing}")
    root = grid.sorted_cells()[0] if start is None else start
    if root not in cells:
        raise PlanningError(f"start mega-cell {root} is not in the grid")
    edges: list[Edge] = []
    seen = {root}
    queue = deque([root])
    while queue:
        c = queue.popleft()
        for di, dj in NEIGHBOR_ORDER:
            n = (c[0] + di, c[1] + dj)
            if n in cells and n not in seen:
                seen.add(n)
                edges.append((c, n))
                queue.append(n)
    return edges


def _subcell_graph(grid: GridMap, tree: Iterable[Edge]) -> dict[Cell, set[Cell]]:
    """Degree-2 subcell graph whose single cycle circles the tree.

    Each mega-cell starts as a 4-cycle over its subcells. A tree edge between
    neighbors cuts the internal link it crosses on each side and replaces it
    with two links running parallel to the edge into the neighbor.
    """
    adj: dict[Cell, set[Cell]] = {}

    def link(a: Cell, b: Cell) -> None:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    def unlink(a: Cell, b: Cell) -> None:
        adj[a].discard(b)
        adj[b].discard(a)

    for i, j in grid.mega_cells:
        tl, tr = (2 * i, 2 * j), (2 * i + 1, 2 * j)
        bl, br = (2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1)
        link(tl, tr)
        link(tr, br)
        link(br, bl)
        link(bl, tl)

    for a, b in tree:
        (ia, ja), (ib, jb) = a, b
        if abs(ia - ib) + abs(ja - jb) != 1:
            raise PlanningError(f"tree edge {a}-{b} does not join 4-neighbors")
        if ja == jb:
            left, right = (a, b) if ia < ib else (b, a)
            i, j = left
            # horizontal edge separates subcell rows 2j and 2j+1 at columns 2i+1, 2i+2
            unlink((2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1))
            unlink((2 * i + 2, 2 * j), (2 * i + 2, 2 * j + 1))
            link((2 * i + 1, 2 * j), (2 * i + 2, 2 * j))
            link((2 * i + 1, 2 * j + 1), (2 * i + 2, 2 * j + 1))
        else:
            top, bottom = (a, b) if ja < jb else (b, a)
            i, j = top
            unlink((2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1))
            unlink((2 * i, 2 * j + 2), (2 * i + 1, 2 * j + 2))
            link((2 * i, 2 * j + 1), (2 * i, 2 * j + 2))
            link((2 * i + 1, 2 * j + 1), (2 * i + 1, 2 * j + 2))
    return adj


def _signed_area(route: list[Cell]) -> float:
    s = 0.0
    for (x0, y0), (x1, y1) in zip(route, route[1:] + route[:1]):
        s += x0 * y1 - x1 * y0
    return s / 2.0


def stc_path(
    grid: GridMap,
    tree: Iterable[Edge],
    start: Optional[Cell] = None,
    *,
    overlap: float = 0.0,
    altitude: float = 0.0,
    dt: float = 1.0,
) -> CoveragePlan:
    """Closed route through every subcell center, circling the tree clockwise.

    "Clockwise" is as seen on the raster display (row 0 on top); in world
    coordinates with +y as rows this is a positive shoelace area.
    """
    tree = list(tree)
    if len(tree) != len(grid.mega_cells) - 1:
        raise PlanningError(
            f"tree has {len(tree)} edges, a spanning tree needs {len(grid.mega_cells) - 1}"
        )
    start = grid.default_start() if start is None else tuple(start)
    if (start[0] // 2, start[1] // 2) not in grid.mega_cells:
        raise GeometryError(f"start subcell {start} lies outside the grid")

    adj = _subcell_graph(grid, tree)
    bad = [c for c, n in adj.items() if len(n) != 2]
    if bad:
        raise PlanningError(f"tree does not span the grid; irregular subcells {sorted(bad)[:5]}")

    route = [start]
    prev, cur = start, min(adj[start], key=_row_major)
    while cur != start:
        route.append(cur)
        (a, b) = adj[cur]
        prev, cur = cur, (b if a == prev else a)
    if len(route) != len(adj):
        raise PlanningError("tree does not span the grid; circumnavigation left subcells unvisited")
    if _signed_area(route) < 0:
        route = [route[0]] + route[:0:-1]

    points = [grid.subcell_center(s) for s in route]
    points.append(points[0])
    return CoveragePlan(
        path=Polyline(points),
        grid=grid,
        params=PlanParams(overlap, altitude, dt, start),
        subcell_route=tuple(route),
    )


def plan_coverage(poly: Polygon, cam: CameraModel, overlap: float) -> CoveragePlan:
    """Discretize, grow the tree and circle it, all with default choices."""
    grid = discretize(poly, cam, overlap)
    tree = build_mst(grid)
    return stc_path(grid, tree, overlap=overlap, altitude=cam.altitude, dt=cam.dt)


def write_waypoints(plan: CoveragePlan, path: Path | str) -> None:
    g = plan.grid
    p = plan.params
    lines = [
        f"# subcell_size={g.subcell_size:.6f} mega_cell_size={g.mega_cell_size:.6f} "
        f"origin={g.origin[0]:.6f},{g.origin[1]:.6f} mega_cells={len(g.mega_cells)}",
        f"# overlap={p.overlap} altitude={p.altitude} dt={p.dt} start={p.start[0]},{p.start[1]} "
        f"length={plan.length:.6f}",
    ]
    lines += [f"{x:.6f} {y:.6f}" for x, y in plan.path.points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_waypoints(path: Path | str) -> Polyline:
    pts = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y = line.split()
        pts.append((float(x), float(y)))
    return Polyline(pts)
