import logging
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activescan.controller import ControllerConfig
from activescan.geometry import Polygon, Polyline
from activescan.mission import (
    ADAPTIVE,
    BASELINE,
    MissionConfig,
    MissionError,
    mission_polygon,
    run_adaptive,
    run_baseline,
    run_mission,
)
from activescan.perception import SegmentationResult
from activescan.planner import plan_coverage
from activescan.sensor import CameraModel


def constant_segmenter(label, prob=1.0):
    def seg(image):
        scores = np.full(image.shape[:2] + (3,), (1.0 - prob) / 2)
        scores[..., label] = prob
        return SegmentationResult.from_scores(scores)

    return seg


@pytest.fixture(scope="module")
def plan(small_world, camera):
    return plan_coverage(mission_polygon(small_world, camera), camera, 0.7)


@pytest.fixture(scope="module")
def shuttle_plan(plan):
    """A 400 m path: 25 passes along one 16 m lane."""
    pts = [(7.0, 5.0) if i % 2 == 0 else (23.0, 5.0) for i in range(26)]
    return replace(plan, path=Polyline(pts))


class TestStubbedFlights:
    def test_all_background_flies_top_speed(self, small_world, plan):
        log = run_adaptive(small_world, plan, MissionConfig(), constant_segmenter(0))
        assert all(d.G == 1.0 for d in log.decisions)
        # first step covers s_1 = 5 already
        assert log.cost == math.ceil(plan.length / 5.0) * 1.0
        assert log.completed

    def test_all_crop_certain_speeds_up(self, small_world, plan):
        log = run_adaptive(small_world, plan, MissionConfig(), constant_segmenter(1, 1.0))
        # cr = 1 gives g1 = -1, cl = 1 gives w1 = 0 and g2 = +1
        assert all(d.G == pytest.approx(1.0) for d in log.decisions)

    def test_all_crop_unsure_slows_down(self, small_world, plan):
        log = run_adaptive(small_world, plan, MissionConfig(), constant_segmenter(1, 0.5))
        # w1 = 0.75, g1 = -1, g2 = -0.6, so G = -0.9
        assert log.decisions[0].G == pytest.approx(-0.9)
        assert log.speeds()[0] == pytest.approx(3.1)
        assert np.all(log.speeds()[1:] == 3.0)

    def test_baseline_step_count(self, small_world, shuttle_plan):
        log = run_baseline(small_world, shuttle_plan, MissionConfig(mode=BASELINE))
        assert shuttle_plan.length == pytest.approx(400.0)
        assert log.steps == 100 and log.cost == 100.0 and log.completed
        assert np.all(log.speeds_at_capture() == 4.0)

    def test_time_budget_stops_early(self, small_world, plan):
        log = run_baseline(small_world, plan, MissionConfig(mode=BASELINE, t_max=1.0))
        assert log.steps == 1 and not log.completed and log.cost == 1.0


@pytest.fixture(scope="module")
def adaptive_log(small_world, plan, segmenter):
    return run_adaptive(small_world, plan, MissionConfig(keep_images=True), segmenter)


class TestBudgetAndTimeBounds:
    @settings(max_examples=15)
    @given(st.floats(1.0, 80.0))
    def test_budget_respected(self, small_world, plan, t_max):
        log = run_baseline(small_world, plan, MissionConfig(mode=BASELINE, t_max=t_max))
        assert log.cost <= t_max + 1.0
        assert np.all(log.speeds() == 4.0)

    @pytest.mark.parametrize("label, prob", [(0, 1.0), (1, 0.5), (1, 0.7), (2, 0.9)])
    def test_adaptive_time_within_band_bounds(self, small_world, plan, label, prob):
        log = run_adaptive(small_world, plan, MissionConfig(), constant_segmenter(label, prob))
        L, dt = plan.length, 1.0
        assert log.completed
        assert L / 5.0 - dt <= log.cost <= L / 3.0 + dt

    def test_adaptive_time_bound_on_real_segmenter(self, adaptive_log, plan):
        assert adaptive_log.completed
        assert plan.length / 5.0 - 1.0 <= adaptive_log.cost <= plan.length / 3.0 + 1.0


class TestFlightContract:
    def test_speed_band(self, adaptive_log):
        s = np.concatenate([[4.0], adaptive_log.speeds()])
        assert np.all((s >= 3.0) & (s <= 5.0))
        assert np.all(np.abs(np.diff(s)) <= 1.0 + 1e-12)

    def test_speed_at_capture_is_previous_output(self, adaptive_log):
        at = adaptive_log.speeds_at_capture()
        assert at[0] == 4.0
        np.testing.assert_array_equal(at[1:], adaptive_log.speeds()[:-1])

    def test_poses_on_path(self, adaptive_log, plan):
        assert max(plan.path.distance_to(c.pose) for c in adaptive_log.captures) < 1e-9

    def test_kernel_follows_speed(self, adaptive_log):
        law = MissionConfig().blur_law
        assert all(c.kernel == law(c.speed_at_capture) for c in adaptive_log.captures)

    def test_times_are_uniform(self, adaptive_log):
        t = np.array([c.t for c in adaptive_log.captures])
        np.testing.assert_array_equal(t, np.arange(len(t)) * 1.0)

    def test_deterministic(self, adaptive_log, small_world, plan, segmenter):
        again = run_adaptive(small_world, plan, MissionConfig(keep_images=True), segmenter)
        assert again.decisions == adaptive_log.decisions
        assert all(np.array_equal(a.image, b.image) for a, b in zip(again.captures, adaptive_log.captures))


class TestValidation:
    def test_gsd_mismatch(self, small_world, plan):
        cfg = MissionConfig(camera=CameraModel(gsd=0.03), mode=BASELINE)
        with pytest.raises(MissionError, match="gsd"):
            run_baseline(small_world, plan, cfg)

    def test_plan_outside_extent(self, small_world, plan):
        bad = replace(plan, path=Polyline([(1.0, 1.0), (10.0, 1.0)]))
        with pytest.raises(MissionError, match="imageable"):
            run_baseline(small_world, bad, MissionConfig(mode=BASELINE))

    @pytest.mark.parametrize("kw", [{"t_max": 0.0}, {"mode": "fast"}])
    def test_config(self, kw):
        with pytest.raises(MissionError):
            MissionConfig(**kw)

    def test_adaptive_needs_segmenter(self, small_world, plan):
        with pytest.raises(MissionError):
            run_mission(small_world, plan, MissionConfig(mode=ADAPTIVE))

    def test_gap_warning(self, small_world, plan, caplog):
        cfg = MissionConfig(controller=ControllerConfig(nominal_speed=10.0), mode=BASELINE)
        with caplog.at_level(logging.WARNING, logger="activescan.mission"):
            run_baseline(small_world, plan, cfg)
        assert "along-track gaps" in caplog.text

    def test_mission_polygon_clips_user_polygon(self, small_world, camera):
        user = Polygon(((0, 0), (15, 0), (15, 24), (0, 24)))
        assert mission_polygon(small_world, camera, user).bounds == pytest.approx((6.4, 4.8, 15.0, 19.2))
