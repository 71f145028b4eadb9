"""Speed adaptation from segmentation output.

Per image: the coverage ratio ``cr`` (vegetation fraction) and the confidence
level ``cl`` (mean max-probability over vegetation pixels) feed two
piecewise-linear translation functions ``g1(cr)`` and ``g2(cl)``. A parabolic
weight ``w1(cl)`` blends them into a gain ``G`` in [-1, 1], and the next speed
is ``clip(s_prev + G*q, s_nom - q, s_nom + q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .perception import SegmentationResult
from .worldgen import BACKGROUND

Knots = tuple[tuple[float, float], ...]

G1_KNOTS: Knots = ((0.0, 1.0), (0.15, 0.0), (0.40, -1.0), (1.0, -1.0))
G2_KNOTS: Knots = ((0.0, -1.0), (1.0 / 3.0, -1.0), (0.75, 0.0), (1.0, 1.0))


class ControllerConfigError(ValueError):
    pass


def _check_knots(name: str, knots: Sequence[Sequence[float]]) -> Knots:
    knots = tuple((float(x), float(v)) for x, v in knots)
    if len(knots) < 2:
        raise ControllerConfigError(f"{name} needs at least two knots")
    xs = [x for x, _ in knots]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ControllerConfigError(f"{name} knot abscissae must be strictly increasing: {xs}")
    if any(not -1.0 <= v <= 1.0 for _, v in knots):
        raise ControllerConfigError(f"{name} knot values must lie in [-1, 1]")
    return knots


@dataclass(frozen=True)
class ControllerConfig:
    nominal_speed: float = 4.0
    max_discrepancy: float = 1.0
    g1_knots: Knots = G1_KNOTS
    g2_knots: Knots = G2_KNOTS
    w1_roots: tuple[float, float] = (1.0 / 3.0, 1.0)
    w1_peak: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not self.max_discrepancy > 0:
            raise ControllerConfigError("max_discrepancy q must be > 0")
        if not self.nominal_speed - self.max_discrepancy > 0:
            raise ControllerConfigError("nominal_speed - q must be > 0")
        object.__setattr__(self, "g1_knots", _check_knots("g1", self.g1_knots))
        object.__setattr__(self, "g2_knots", _check_knots("g2", self.g2_knots))
        r1, r2 = self.w1_roots
        if not r1 < self.w1_peak < r2:
            raise ControllerConfigError(f"need r1 < peak < r2, got {r1}, {self.w1_peak}, {r2}")

    @property
    def speed_band(self) -> tuple[float, float]:
        return self.nominal_speed - self.max_discrepancy, self.nominal_speed + self.max_discrepancy


@dataclass
class ControllerState:
    previous_speed: float
    step: int = 0

    @classmethod
    def initial(cls, config: ControllerConfig) -> "ControllerState":
        return cls(previous_speed=config.nominal_speed)


@dataclass(frozen=True)
class ControllerDecision:
    cr: float
    cl: float
    g1: float
    g2: float
    w1: float
    w2: float
    G: float
    u: float = float("nan")
    speed: float = float("nan")


def coverage_ratio(result: SegmentationResult) -> float:
    counts = result.counts
    return float((counts[1] + counts[2]) / counts.sum())


def confidence_level(result: SegmentationResult) -> float:
    """Mean max-probability over crop and weed pixels; 1.0 when there are none."""
    veg = result.class_map != BACKGROUND
    n = int(np.count_nonzero(veg))
    if n == 0:
        return 1.0
    return float(np.sum(result.prob_map[veg], dtype=np.float64) / n)


def _interp(x: float, knots: Knots, name: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} argument {x} outside [0, 1]")
    xs, vs = zip(*knots)
    return float(np.interp(x, xs, vs))


def g1(cr: float, config: ControllerConfig = ControllerConfig()) -> float:
    return _interp(cr, config.g1_knots, "g1")


def g2(cl: float, config: ControllerConfig = ControllerConfig()) -> float:
    return _interp(cl, config.g2_knots, "g2")


def weights(cl: float, config: ControllerConfig = ControllerConfig()) -> tuple[float, float]:
    r1, r2 = config.w1_roots
    m = config.w1_peak
    w1 = (cl - r1) * (r2 - cl) / ((m - r1) * (r2 - m))
    w1 = min(max(w1, 0.0), 1.0)
    return w1, 1.0 - w1


def gain(cr: float, cl: float, config: ControllerConfig = ControllerConfig()) -> ControllerDecision:
    a = g1(cr, config)
    b = g2(cl, config)
    w1, w2 = weights(cl, config)
    G = w1 * a + w2 * b
    return ControllerDecision(cr, cl, a, b, w1, w2, min(max(G, -1.0), 1.0))


def update_speed(state: ControllerState, G: float, config: ControllerConfig) -> tuple[float, float]:
    """Advance ``state`` by one step; returns ``(u, s_i)``."""
    lo, hi = config.speed_band
    u = state.previous_speed + G * config.max_discrepancy
    s = min(max(u, lo), hi)
    state.previous_speed = s
    state.step += 1
    return u, s


class AdaptiveController:
    """Stateful wrapper: segmentation result in, decision with new speed out."""

    def __init__(self, config: ControllerConfig):
        self.config = config
        self.state = ControllerState.initial(config)

    @property
    def speed(self) -> float:
        return self.state.previous_speed

    def step(self, result: SegmentationResult) -> ControllerDecision:
        d = gain(coverage_ratio(result), confidence_level(result), self.config)
        u, s = update_speed(self.state, d.G, self.config)
        return ControllerDecision(d.cr, d.cl, d.g1, d.g2, d.w1, d.w2, d.G, u, s)
