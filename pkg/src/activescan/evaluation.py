"""Post-flight scoring of the reconstructed orthomosaic."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import FieldFrame
from .mission import MissionLog, render_capture
from .perception import SegmentationResult
from .planner import GridMap
from .sensor import CameraModel, Capture, footprint_slices
from .worldgen import BACKGROUND, CROP, WEED, FieldWorld, Region

SSIM_BINS = 32
SSIM_K1, SSIM_K2 = 0.01, 0.03
SSIM_SIGMA = 1.5
# gaussian_filter's radius is int(truncate * sigma + 0.5); 3.5 * 1.5 gives 5, an 11-tap window
SSIM_TRUNCATE = 3.5


class EvaluationError(ValueError):
    pass


@dataclass(eq=False)
class Mosaic:
    image: np.ndarray
    observed_mask: np.ndarray
    source_index: np.ndarray  # -1 where unobserved

    @property
    def coverage(self) -> float:
        return float(self.observed_mask.mean())


def reconstruct_mosaic(
    captures: Sequence[Capture],
    frame: FieldFrame,
    world: Optional[FieldWorld] = None,
    camera: Optional[CameraModel] = None,
) -> Mosaic:
    """Paste captures at their footprints; later captures overwrite earlier ones.

    Captures logged without pixels are re-rendered from ``world`` (the
    simulation is deterministic, so this reproduces the flown images).
    """
    if not captures:
        raise EvaluationError("cannot build a mosaic from zero captures")
    h, w = frame.raster_height, frame.raster_width
    image = np.zeros((h, w, 3), dtype=np.uint8)
    source = np.full((h, w), -1, dtype=np.int32)
    for cap in captures:
        img = cap.image
        if img is None:
            if world is None or camera is None:
                raise EvaluationError(f"capture {cap.index} has no pixels and no world to render from")
            img = render_capture(world, camera, cap.pose, cap.heading, cap.kernel)
        cam = CameraModel(image_width=img.shape[1], image_height=img.shape[0], gsd=frame.gsd)
        rows, cols = footprint_slices(frame, cam, cap.pose)
        image[rows, cols] = img
        source[rows, cols] = cap.index
    return Mosaic(image, source >= 0, source)


def iou(pred: np.ndarray, gt: np.ndarray, class_id: int) -> float:
    """Intersection over union for one class; 1.0 if the class is absent from both."""
    if pred.shape != gt.shape:
        raise EvaluationError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    p = pred == class_id
    g = gt == class_id
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(p & g) / union)


def luma(image: np.ndarray) -> np.ndarray:
    """ITU-R BT.601 luma as float64."""
    rgb = np.asarray(image, dtype=np.float64)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


@dataclass(eq=False)
class SSIMResult:
    map: np.ndarray
    mean: float
    histogram: np.ndarray  # fraction of pixels per bin over [0, 1]

    @staticmethod
    def bin_edges() -> np.ndarray:
        return np.linspace(0.0, 1.0, SSIM_BINS + 1)

    def mass_above(self, threshold: float, mask: Optional[np.ndarray] = None) -> float:
        values = self.map if mask is None else self.map[mask]
        return float(np.mean(values > threshold)) if values.size else float("nan")


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float = 255.0) -> SSIMResult:
    """Gaussian-window SSIM (sigma 1.5, 11 taps) between two images.

    Color inputs are reduced to luma first. The per-pixel map uses reflected
    borders; the histogram clips negative values into the lowest bin.
    """
    if a.shape != b.shape:
        raise EvaluationError(f"SSIM inputs differ in shape: {a.shape} vs {b.shape}")
    x = luma(a) if a.ndim == 3 else np.asarray(a, dtype=np.float64)
    y = luma(b) if b.ndim == 3 else np.asarray(b, dtype=np.float64)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    def blur(z: np.ndarray) -> np.ndarray:
        return gaussian_filter(z, SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")

    mx, my = blur(x), blur(y)
    vx = blur(x * x) - mx * mx
    vy = blur(y * y) - my * my
    cxy = blur(x * y) - mx * my
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    hist, _ = np.histogram(np.clip(s, 0.0, 1.0), bins=SSIM_BINS, range=(0.0, 1.0))
    return SSIMResult(s, float(s.mean()), hist / s.size)


def objective(iou_crop: float, iou_weed: float, cost: float, alpha: float) -> float:
    """Representation quality per weighted flight time."""
    if not cost > 0:
        raise EvaluationError(f"flight time must be > 0, got {cost}")
    if not alpha > 0:
        raise EvaluationError(f"alpha must be > 0, got {alpha}")
    return (iou_crop + iou_weed) / (alpha * cost)


def segment_tiled(
    image: np.ndarray,
    segmenter: Callable[[np.ndarray], SegmentationResult],
    tile: tuple[int, int],
    observed: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Class map of a large raster, segmented in camera-sized tiles.

    Edge tiles are zero-padded to full size and cropped back. Unobserved
    pixels are forced to background.
    """
    th, tw = tile
    h, w = image.shape[:2]
    out = np.zeros((h, w), dtype=np.uint8)
    for r0 in range(0, h, th):
        for c0 in range(0, w, tw):
            block = image[r0:r0 + th, c0:c0 + tw]
            bh, bw = block.shape[:2]
            if (bh, bw) != (th, tw):
                padded = np.zeros((th, tw, 3), dtype=image.dtype)
                padded[:bh, :bw] = block
                block = padded
            out[r0:r0 + bh, c0:c0 + bw] = segmenter(block).class_map[:bh, :bw]
    if observed is not None:
        out[~observed] = BACKGROUND
    return out


def _region_slices(frame: FieldFrame, region: Region) -> tuple[slice, slice]:
    ox, oy = frame.origin_world
    g = frame.gsd
    c0 = max(0, round((region.x0 - ox) / g))
    c1 = min(frame.raster_width, round((region.x1 - ox) / g))
    r0 = max(0, round((region.y0 - oy) / g))
    r1 = min(frame.raster_height, round((region.y1 - oy) / g))
    return slice(r0, r1), slice(c0, c1)


def region_mask(frame: FieldFrame, region: Region) -> np.ndarray:
    m = np.zeros((frame.raster_height, frame.raster_width), dtype=bool)
    m[_region_slices(frame, region)] = True
    return m


def grid_mask(frame: FieldFrame, grid: GridMap) -> np.ndarray:
    """Raster mask of the planned subcells (pixels whose centers fall inside)."""
    m = np.zeros((frame.raster_height, frame.raster_width), dtype=bool)
    for i, j in grid.mega_cells:
        x0 = grid.origin[0] + i * grid.mega_cell_size
        y0 = grid.origin[1] + j * grid.mega_cell_size
        reg = Region("cell", x0, y0, x0 + grid.mega_cell_size, y0 + grid.mega_cell_size)
        m[_region_slices(frame, reg)] = True
    return m


def region_mean_speeds(log: MissionLog, regions: Iterable[Region]) -> dict[str, float]:
    """Mean speed flown into captures whose pose lies in each region."""
    out = {}
    for reg in regions:
        speeds = [c.speed_at_capture for c in log.captures if reg.contains(*c.pose)]
        out[reg.name] = float(np.mean(speeds)) if speeds else float("nan")
    return out


@dataclass(eq=False)
class EvalReport:
    iou_crop: float
    iou_weed: float
    cost: float
    objective: float
    within_budget: bool
    coverage: float
    ssim_mean: Optional[float]
    ssim_histogram: Optional[list[float]]
    region_speeds: dict[str, float]
    region_ssim: dict[str, float]
    completed: bool
    mode: str
    planned_coverage: Optional[float] = None
    mosaic: Optional[Mosaic] = field(default=None, repr=False)
    class_map: Optional[np.ndarray] = field(default=None, repr=False)
    ssim: Optional[SSIMResult] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "iou_crop": self.iou_crop,
            "iou_weed": self.iou_weed,
            "cost": self.cost,
            "objective": self.objective,
            "within_budget": self.within_budget,
            "completed": self.completed,
            "coverage": self.coverage,
            "planned_coverage": self.planned_coverage,
            "ssim_mean": self.ssim_mean,
            "ssim_histogram": self.ssim_histogram,
            "region_speeds": self.region_speeds,
            "region_ssim": self.region_ssim,
        }


def evaluate_run(
    world: FieldWorld,
    log: MissionLog,
    segmenter: Callable[[np.ndarray], SegmentationResult],
    alpha: float,
    *,
    camera: CameraModel,
    t_max: float = float("inf"),
    grid: Optional[GridMap] = None,
    regions: Optional[Sequence[Region]] = None,
    with_ssim: bool = True,
) -> EvalReport:
    regions = tuple(world.regions if regions is None else regions)
    mosaic = reconstruct_mosaic(log.captures, world.frame, world, camera)
    classes = segment_tiled(
        mosaic.image, segmenter, (camera.image_height, camera.image_width), mosaic.observed_mask
    )
    ic = iou(classes, world.labels, CROP)
    iw = iou(classes, world.labels, WEED)
    ssim = None
    region_ssim = {}
    if with_ssim:
        ssim = ssim_map(mosaic.image, world.orthophoto)
        region_ssim = {r.name: float(ssim.map[_region_slices(world.frame, r)].mean()) for r in regions}
    planned = None
    if grid is not None:
        gm = grid_mask(world.frame, grid)
        planned = float(mosaic.observed_mask[gm].mean())
    return EvalReport(
        iou_crop=ic,
        iou_weed=iw,
        cost=log.cost,
        objective=objective(ic, iw, log.cost, alpha),
        within_budget=log.cost <= t_max,
        coverage=mosaic.coverage,
        ssim_mean=None if ssim is None else ssim.mean,
        ssim_histogram=None if ssim is None else ssim.histogram.tolist(),
        region_speeds=region_mean_speeds(log, regions),
        region_ssim=region_ssim,
        completed=log.completed,
        mode=log.mode,
        planned_coverage=planned,
        mosaic=mosaic,
        class_map=classes,
        ssim=ssim,
    )
