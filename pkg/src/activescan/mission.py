"""Closed-loop coverage flight: capture, assess, adapt, advance.

Speed is piecewise constant over each ``dt`` interval and turns are
instantaneous. The image taken at step ``i`` is blurred according to the
speed flown during the interval that ended there (``s_{i-1}``); the
controller's output ``s_i`` then carries the vehicle to the next capture.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .controller import AdaptiveController, ControllerConfig, ControllerDecision
from .geometry import GeometryError, OutOfRangeError, Polygon, arc_position
from .perception import SegmentationResult
from .planner import CoveragePlan
from .sensor import BlurLaw, CameraModel, Capture, apply_motion_blur, capture, footprint_slices
from .worldgen import FieldWorld

log = logging.getLogger(__name__)

ADAPTIVE = "adaptive"
BASELINE = "baseline"


class MissionError(ValueError):
    pass


@dataclass(frozen=True)
class MissionConfig:
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    t_max: float = 3600.0
    mode: str = ADAPTIVE
    blur_law: BlurLaw = field(default_factory=BlurLaw)
    keep_images: bool = False

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise MissionError(f"t_max must be > 0, got {self.t_max}")
        if self.mode not in (ADAPTIVE, BASELINE):
            raise MissionError(f"mode must be {ADAPTIVE!r} or {BASELINE!r}, got {self.mode!r}")

    @property
    def dt(self) -> float:
        return self.camera.dt

    def along_track_gap_possible(self) -> bool:
        top = self.controller.speed_band[1] if self.mode == ADAPTIVE else self.controller.nominal_speed
        return self.dt * top > self.camera.footprint_height


@dataclass
class MissionLog:
    mode: str
    captures: list[Capture]
    decisions: list[ControllerDecision]
    cost: float
    distance: float
    completed: bool
    path_length: float
    nominal_speed: float
    max_discrepancy: float

    @property
    def steps(self) -> int:
        return len(self.captures)

    def speeds(self) -> np.ndarray:
        """Applied speed ``s_i`` after each step."""
        return np.array([d.speed for d in self.decisions])

    def speeds_at_capture(self) -> np.ndarray:
        return np.array([c.speed_at_capture for c in self.captures])


def shrink_extent(world: FieldWorld, cam: CameraModel) -> Polygon:
    """World extent inset by half a footprint, so every pose can be imaged."""
    x0, y0, x1, y1 = world.frame.bounds
    hw, hh = cam.footprint_width / 2, cam.footprint_height / 2
    if x1 - x0 <= 2 * hw or y1 - y0 <= 2 * hh:
        raise GeometryError("field is smaller than one camera footprint")
    return Polygon(((x0 + hw, y0 + hh), (x1 - hw, y0 + hh), (x1 - hw, y1 - hh), (x0 + hw, y1 - hh)))


def mission_polygon(world: FieldWorld, cam: CameraModel, polygon: Optional[Polygon] = None) -> Polygon:
    inset = shrink_extent(world, cam)
    return inset if polygon is None else polygon.intersection(inset)


def check_plan(world: FieldWorld, plan: CoveragePlan, cam: CameraModel) -> None:
    # the path is straight between vertices and the inset extent is a rectangle,
    # so checking vertices covers every pose on the path
    for p in plan.path.points:
        try:
            footprint_slices(world.frame, cam, p)
        except OutOfRangeError as exc:
            raise MissionError(f"plan leaves the imageable extent: {exc}") from None


def render_capture(world: FieldWorld, cam: CameraModel, pose, heading, k: int) -> np.ndarray:
    return apply_motion_blur(capture(world, cam, pose, heading), k, heading)


def _fly(
    world: FieldWorld,
    plan: CoveragePlan,
    config: MissionConfig,
    step_speed: Callable[[np.ndarray], tuple[float, ControllerDecision]],
) -> MissionLog:
    cam = config.camera
    if not math.isclose(cam.gsd, world.frame.gsd):
        raise MissionError(f"camera gsd {cam.gsd} differs from field gsd {world.frame.gsd}")
    check_plan(world, plan, cam)
    if config.along_track_gap_possible():
        log.warning(
            "dt * top speed exceeds the footprint height (%.2f m); along-track gaps are possible",
            cam.footprint_height,
        )
    L = plan.path.total_length
    dt = config.dt
    speed = config.controller.nominal_speed
    d = 0.0
    i = 0
    captures: list[Capture] = []
    decisions: list[ControllerDecision] = []
    completed = False
    while True:
        pose, heading = arc_position(plan.path, min(d, L))
        k = config.blur_law(speed)
        image = render_capture(world, cam, pose, heading, k)
        new_speed, decision = step_speed(image)
        captures.append(Capture(
            i, i * dt, pose, heading, speed, k, image if config.keep_images else None
        ))
        decisions.append(decision)
        speed = new_speed
        d += speed * dt
        i += 1
        if d >= L:
            completed = True
            break
        if i * dt >= config.t_max - 1e-9:
            break
    return MissionLog(
        mode=config.mode,
        captures=captures,
        decisions=decisions,
        cost=i * dt,
        distance=min(d, L),
        completed=completed,
        path_length=L,
        nominal_speed=config.controller.nominal_speed,
        max_discrepancy=config.controller.max_discrepancy,
    )


def run_adaptive(
    world: FieldWorld,
    plan: CoveragePlan,
    config: MissionConfig,
    segmenter: Callable[[np.ndarray], SegmentationResult],
) -> MissionLog:
    if config.mode != ADAPTIVE:
        config = replace(config, mode=ADAPTIVE)
    ctrl = AdaptiveController(config.controller)

    def step(image: np.ndarray) -> tuple[float, ControllerDecision]:
        decision = ctrl.step(segmenter(image))
        return decision.speed, decision

    return _fly(world, plan, config, step)


def run_baseline(world: FieldWorld, plan: CoveragePlan, config: MissionConfig) -> MissionLog:
    if config.mode != BASELINE:
        config = replace(config, mode=BASELINE)
    s = config.controller.nominal_speed
    nan = math.nan
    fixed = ControllerDecision(nan, nan, nan, nan, nan, nan, nan, s, s)
    return _fly(world, plan, config, lambda image: (s, fixed))


def run_mission(world, plan, config: MissionConfig, segmenter=None) -> MissionLog:
    if config.mode == ADAPTIVE:
        if segmenter is None:
            raise MissionError("adaptive mode needs a segmenter")
        return run_adaptive(world, plan, config, segmenter)
    return run_baseline(world, plan, config)

