import csv
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from activescan.fixtures import REFERENCE_GRIDS, REFERENCE_SUBCELL
from activescan.geometry import GeometryError, Polygon
from activescan.planner import (
    GridMap,
    PlanningError,
    build_mst,
    discretize,
    lane_spacing,
    plan_coverage,
    read_waypoints,
    stc_path,
    write_waypoints,
)
from activescan.sensor import CameraModel

from helpers import random_block_set, rectilinear_polygon

FIXTURES = Path(__file__).parent / "fixtures" / "v1"


def square(side, origin=(0.0, 0.0)):
    x, y = origin
    return Polygon([(x, y), (x + side, y), (x + side, y + side), (x, y + side)])


def grid_of(cells, sub=1.0):
    return GridMap(frozenset(cells), (0.0, 0.0), sub)


def rect_cells(ni, nj):
    return {(i, j) for i in range(ni) for j in range(nj)}


def plan_on(cells, sub=1.0):
    g = grid_of(cells, sub)
    return stc_path(g, build_mst(g))


def signed_area(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


class TestDiscretize:
    def test_twenty_meter_square(self, camera):
        g = discretize(square(20.0), camera, 0.7)
        # 640 px * 0.02 m = 12.8 m footprint; 12.8 * 0.3 = 3.84 m lanes; 7.68 m mega-cells
        assert g.subcell_size == pytest.approx(3.84)
        assert g.mega_cell_size == pytest.approx(7.68)
        assert sorted(g.mega_cells) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_zero_overlap_uses_footprint(self, camera):
        assert lane_spacing(camera, 0.0) == pytest.approx(camera.footprint_width)

    @pytest.mark.parametrize("o", [-0.1, 1.0])
    def test_overlap_range(self, camera, o):
        with pytest.raises(PlanningError):
            lane_spacing(camera, o)

    def test_too_small_polygon(self, camera):
        with pytest.raises(PlanningError, match="mega-cell"):
            discretize(square(7.0), camera, 0.7)

    def test_cells_pass_inclusion(self, camera):
        poly = Polygon([(0, 0), (40, 0), (40, 10), (12, 10), (12, 40), (0, 40)])
        g = discretize(poly, camera, 0.7)
        for c in g.mega_cells:
            x, y = g.mega_center(c)
            h = g.mega_cell_size / 2
            assert poly.shape.covers(Polygon([(x - h, y - h), (x + h, y - h), (x + h, y + h), (x - h, y + h)]).shape)


class TestMST:
    def test_single_cell(self):
        assert build_mst(grid_of({(0, 0)})) == []

    def test_pair(self):
        assert build_mst(grid_of({(0, 0), (1, 0)})) == [((0, 0), (1, 0))]

    def test_two_by_two_preference(self):
        # the 4-cycle has four spanning trees; growing from (0,0) right then down,
        # then down from (1,0), leaves out the (0,1)-(1,1) edge
        assert build_mst(grid_of(rect_cells(2, 2))) == [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (1, 1))]

    def test_disconnected_lists_components(self):
        with pytest.raises(PlanningError, match="2 components"):
            build_mst(grid_of({(0, 0), (2, 0)}))

    @pytest.mark.parametrize("seed", range(5))
    def test_spanning(self, seed):
        cells = random_block_set(seed)
        edges = build_mst(grid_of(cells))
        assert len(edges) == len(cells) - 1
        assert {c for e in edges for c in e} | {min(cells, key=lambda c: (c[1], c[0]))} == cells


class TestSTC:
    def test_two_by_two(self):
        p = plan_on(rect_cells(2, 2))
        assert p.path.is_closed
        assert len(set(map(tuple, p.path.points[:-1]))) == 16
        assert p.length == pytest.approx(16.0)

    def test_single_mega_cell_loop(self):
        p = plan_on({(0, 0)}, sub=2.5)
        assert len(p.subcell_route) == 4
        assert p.length == pytest.approx(4 * 2.5)

    def test_l_shape(self):
        p = plan_on({(0, 0), (1, 0), (0, 1)})
        assert sorted(p.subcell_route) == sorted(grid_of({(0, 0), (1, 0), (0, 1)}).subcells())
        assert len(p.subcell_route) == len(set(p.subcell_route)) == 12

    @pytest.mark.parametrize("ni, nj", [(1, 1), (3, 2), (2, 5), (4, 4), (7, 3)])
    def test_full_rectangles_exactly_once(self, ni, nj):
        p = plan_on(rect_cells(ni, nj), sub=1.5)
        n = 4 * ni * nj
        assert len(p.subcell_route) == len(set(p.subcell_route)) == n
        assert p.length == pytest.approx(n * 1.5)

    @pytest.mark.parametrize("seed", range(10))
    def test_arbitrary_grid_complete_and_clockwise(self, seed):
        cells = random_block_set(seed, n_blocks=15)
        p = plan_on(cells)
        counts = {}
        for s in p.subcell_route:
            counts[s] = counts.get(s, 0) + 1
        assert set(counts) == set(grid_of(cells).subcells())
        assert max(counts.values()) <= 2
        assert p.path.is_closed
        # positive shoelace area in world axes with rows along +y: clockwise on screen
        assert signed_area(p.path.points) > 0

    def test_unit_steps(self):
        p = plan_on(random_block_set(3, n_blocks=10))
        steps = np.abs(np.diff(p.path.points, axis=0)).sum(axis=1)
        assert np.allclose(steps, 1.0)

    def test_start_outside_grid(self):
        g = grid_of({(0, 0)})
        with pytest.raises(GeometryError):
            stc_path(g, [], start=(5, 5))

    def test_start_respected(self):
        g = grid_of(rect_cells(2, 1))
        p = stc_path(g, build_mst(g), start=(3, 1))
        assert p.subcell_route[0] == (3, 1)
        assert tuple(p.path.points[0]) == pytest.approx(g.subcell_center((3, 1)))

    def test_non_spanning_tree_rejected(self):
        g = grid_of(rect_cells(3, 1))
        with pytest.raises(PlanningError):
            stc_path(g, [((0, 0), (1, 0))])

    def test_deterministic(self, camera):
        poly = Polygon([(0, 0), (50, 0), (50, 20), (20, 20), (20, 45), (0, 45)])
        a = plan_coverage(poly, camera, 0.7)
        b = plan_coverage(poly, camera, 0.7)
        assert np.array_equal(a.path.points, b.path.points)

    def test_reference_grids_match_fixture(self):
        with open(FIXTURES / "stc_paths.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        for name, cells in REFERENCE_GRIDS.items():
            expected = np.array([(float(r["x"]), float(r["y"])) for r in rows if r["grid"] == name])
            got = plan_on(cells, REFERENCE_SUBCELL).path.points
            np.testing.assert_allclose(got, expected, atol=1e-9, err_msg=name)

    def test_polygon_planning_time_scales(self, camera):
        def timed(side):
            poly = square(side)
            t0 = time.perf_counter()
            for _ in range(3):
                plan_coverage(poly, camera, 0.7)
            return (time.perf_counter() - t0) / 3

        small, large = timed(80.0), timed(80.0 * np.sqrt(10))
        assert large < 20 * small + 0.05

    @given(st.integers(0, 10_000))
    def test_random_polygons_fully_covered(self, seed):
        cam = CameraModel()
        unit = 2 * lane_spacing(cam, 0.7)
        poly = rectilinear_polygon(random_block_set(seed, n_blocks=8, span=5), unit, origin=(3.0, -2.0))
        p = plan_coverage(poly, cam, 0.7)
        assert set(p.subcell_route) == set(p.grid.subcells())


class TestWaypointFile:
    def test_round_trip(self, tmp_path, camera):
        p = plan_coverage(square(30.0), camera, 0.7)
        path = tmp_path / "wp.txt"
        write_waypoints(p, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# subcell_size=")
        assert lines[2].count(".") == 2 and len(lines[2].split()[0].split(".")[1]) == 6
        back = read_waypoints(path)
        np.testing.assert_allclose(back.points, p.path.points, atol=5e-7)
