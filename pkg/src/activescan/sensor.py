"""Simulated nadir camera: footprint crops and speed-dependent motion blur."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from .geometry import FieldFrame, OutOfRangeError, world_to_raster


@dataclass(frozen=True)
class CameraModel:
    """Nadir camera sampling the world raster 1:1.

    The footprint follows from the image size and the field's ground sampling
    distance; ``altitude`` and ``gimbal_pitch`` are carried for bookkeeping.
    """

    image_width: int = 640
    image_height: int = 480
    gsd: float = 0.02
    altitude: float = 10.0
    gimbal_pitch: float = -90.0
    dt: float = 1.0

    def __post_init__(self) -> None:
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dims must be positive")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.gsd > 0:
            raise ValueError(f"gsd must be > 0, got {self.gsd}")
        if self.gimbal_pitch != -90.0:
            raise ValueError("only a nadir gimbal (-90 deg) is supported")

    @property
    def footprint_width(self) -> float:
        return self.image_width * self.gsd

    @property
    def footprint_height(self) -> float:
        return self.image_height * self.gsd


@dataclass
class Capture:
    index: int
    t: float
    pose: tuple[float, float]
    heading: tuple[float, float]
    speed_at_capture: float
    kernel: int
    image: Optional[np.ndarray] = None


def footprint_slices(
    frame: FieldFrame, cam: CameraModel, pose: Sequence[float]
) -> tuple[slice, slice]:
    """Row/column slices of the raster imaged from ``pose``.

    The footprint is centered on the pixel containing the pose; for even image
    sizes that pixel is the first one past the geometric middle.
    """
    col, row = world_to_raster(pose, frame)
    r0 = row - cam.image_height // 2
    c0 = col - cam.image_width // 2
    r1 = r0 + cam.image_height
    c1 = c0 + cam.image_width
    if r0 < 0 or c0 < 0 or r1 > frame.raster_height or c1 > frame.raster_width:
        raise OutOfRangeError(
            f"footprint rows [{r0}, {r1}) cols [{c0}, {c1}) exceeds raster "
            f"{frame.raster_height}x{frame.raster_width} at pose {tuple(pose)}"
        )
    return slice(r0, r1), slice(c0, c1)


def capture(field, cam: CameraModel, pose: Sequence[float], heading=None) -> np.ndarray:
    """Axis-aligned crop of the orthophoto centered at ``pose`` (a copy)."""
    rows, cols = footprint_slices(field.frame, cam, pose)
    return field.orthophoto[rows, cols].copy()


@dataclass(frozen=True)
class BlurLaw:
    """Speed to kernel-length mapping ``k = 2*floor((s - threshold)/step) + 1``.

    Speeds at or below ``threshold`` give ``k = 1`` (no blur).
    """

    threshold: float = 2.0
    step: float = 1.0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("blur law step must be > 0")

    def __call__(self, speed: float) -> int:
        if speed < 0:
            raise ValueError(f"speed must be >= 0, got {speed}")
        excess = max(0.0, (speed - self.threshold) / self.step)
        return max(1, 2 * math.floor(excess + 1e-9) + 1)


DEFAULT_BLUR_LAW = BlurLaw()


def blur_kernel_length(speed: float, law: BlurLaw = DEFAULT_BLUR_LAW) -> int:
    return law(speed)


def blur_axis(heading: Sequence[float]) -> int:
    """Image axis the blur runs along: 0 for north/south travel, 1 for east/west."""
    hx, hy = float(heading[0]), float(heading[1])
    if abs(hx) > 1e-6 and abs(hy) > 1e-6:
        raise ValueError(f"heading {tuple(heading)} is not axis-aligned")
    if hx == 0 and hy == 0:
        raise ValueError("heading must be nonzero")
    return 1 if abs(hx) > abs(hy) else 0


def apply_motion_blur(image: np.ndarray, k: int, heading: Sequence[float]) -> np.ndarray:
    """Convolve ``image`` with a length-``k`` box kernel along the travel axis.

    Borders replicate the edge pixel. Integer images are rounded back to
    their dtype; ``k == 1`` returns an unchanged copy.
    """
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ValueError(f"kernel length must be a positive odd integer, got {k}")
    axis = blur_axis(heading)
    if k == 1:
        return image.copy()
    out = uniform_filter1d(image.astype(np.float32), size=int(k), axis=axis, mode="nearest")
    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        out = np.clip(np.rint(out), info.min, info.max)
    return out.astype(image.dtype)
