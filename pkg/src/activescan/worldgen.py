"""Synthetic crop fields and loading of real orthophoto/label pairs.

Label values: 0 background (soil), 1 crop, 2 weed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter, zoom

from .geometry import FieldFrame

BACKGROUND, CROP, WEED = 0, 1, 2
CLASS_NAMES = ("background", "crop", "weed")


class FieldSpecError(ValueError):
    pass


class FieldLoadError(ValueError):
    """Base class for orthophoto/label ingestion failures."""


class FieldReadError(FieldLoadError):
    pass


class DimensionMismatchError(FieldLoadError):
    pass


class LabelValueError(FieldLoadError):
    pass


@dataclass(frozen=True)
class Region:
    """Named axis-aligned rectangle ``[x0, x1) x [y0, y1)`` in field meters."""

    name: str
    x0: float
    y0: float
    x1: float
    y1: float
    crop_rows: bool = True
    weed_density: float = 0.0

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class ColorModel:
    soil: tuple[int, int, int] = (120, 90, 60)
    crop: tuple[int, int, int] = (40, 140, 50)
    weed: tuple[int, int, int] = (150, 160, 40)
    noise_sigma: float = 12.0

    def mean(self, label: int) -> tuple[int, int, int]:
        return (self.soil, self.crop, self.weed)[label]


@dataclass(frozen=True)
class FieldSpec:
    """Recipe for a synthetic field.

    Crops are discs on rows parallel to x, spaced ``row_spacing_m`` apart, with
    plants every ``plant_spacing_m`` along a row. ``plant_jitter`` scales both
    the positional jitter (fraction of the plant spacing) and the radius
    spread. Without ``regions`` the whole field is one region carrying crop
    rows and ``weed_density`` blobs per square meter.
    """

    width_m: float = 80.0
    height_m: float = 60.0
    gsd: float = 0.02
    row_spacing_m: float = 0.5
    plant_spacing_m: float = 0.25
    plant_radius_m: float = 0.08
    plant_jitter: float = 0.2
    weed_density: float = 0.5
    weed_radius_m: float = 0.1
    soil_texture: float = 0.0
    colors: ColorModel = field(default_factory=ColorModel)
    regions: tuple[Region, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("width_m", "height_m", "gsd", "row_spacing_m", "plant_spacing_m",
                     "plant_radius_m", "weed_radius_m"):
            if not getattr(self, name) > 0:
                raise FieldSpecError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 <= self.plant_jitter < 1:
            raise FieldSpecError(f"plant_jitter must lie in [0, 1), got {self.plant_jitter}")
        if self.weed_density < 0:
            raise FieldSpecError("weed_density must be >= 0")
        if self.soil_texture < 0 or self.colors.noise_sigma < 0:
            raise FieldSpecError("soil_texture and noise_sigma must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise FieldSpecError("seed must be a 64-bit unsigned integer")
        names = set()
        for r in self.regions:
            if r.name in names:
                raise FieldSpecError(f"duplicate region name {r.name!r}")
            names.add(r.name)
            if not (0 <= r.x0 < r.x1 <= self.width_m and 0 <= r.y0 < r.y1 <= self.height_m):
                raise FieldSpecError(f"region {r.name!r} does not lie within the field")
            if r.weed_density < 0:
                raise FieldSpecError(f"region {r.name!r} has negative weed density")

    @property
    def raster_shape(self) -> tuple[int, int]:
        return round(self.height_m / self.gsd), round(self.width_m / self.gsd)

    def effective_regions(self) -> tuple[Region, ...]:
        if self.regions:
            return self.regions
        return (Region("field", 0.0, 0.0, self.width_m, self.height_m, True, self.weed_density),)


@dataclass(frozen=True, eq=False)
class FieldWorld:
    frame: FieldFrame
    orthophoto: np.ndarray
    labels: np.ndarray
    regions: tuple[Region, ...] = ()

    def __post_init__(self) -> None:
        h, w = self.frame.raster_height, self.frame.raster_width
        if self.orthophoto.shape != (h, w, 3) or self.orthophoto.dtype != np.uint8:
            raise DimensionMismatchError(
                f"orthophoto must be uint8 {(h, w, 3)}, got {self.orthophoto.dtype} {self.orthophoto.shape}"
            )
        if self.labels.shape != (h, w):
            raise DimensionMismatchError(f"labels must be {(h, w)}, got {self.labels.shape}")
        self.orthophoto.flags.writeable = False
        self.labels.flags.writeable = False

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.frame.origin_world, self.frame.gsd, self.orthophoto.shape)).encode())
        h.update(self.orthophoto.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()


def _stamp_disc(mask: np.ndarray, cx: float, cy: float, radius: float) -> None:
    """Set pixels whose centers lie within ``radius`` of (cx, cy); pixel units."""
    h, w = mask.shape
    r0, r1 = max(0, math.floor(cy - radius)), min(h, math.ceil(cy + radius) + 1)
    c0, c1 = max(0, math.floor(cx - radius)), min(w, math.ceil(cx + radius) + 1)
    if r0 >= r1 or c0 >= c1:
        return
    yy = np.arange(r0, r1)[:, None] + 0.5 - cy
    xx = np.arange(c0, c1)[None, :] + 0.5 - cx
    mask[r0:r1, c0:c1] |= (xx * xx + yy * yy) <= radius * radius


def plant_positions(spec: FieldSpec, rng: np.random.Generator) -> list[tuple[float, float, float]]:
    """Crop disc (x, y, radius) in meters, drawn rows top-to-bottom, plants left-to-right.

    Every lattice site consumes its random draws even when it falls outside a
    crop region, so editing one region does not reshuffle the others.
    """
    regions = [r for r in spec.effective_regions() if r.crop_rows]
    n_rows = int(spec.height_m / spec.row_spacing_m + 1e-9)
    n_plants = int(spec.width_m / spec.plant_spacing_m + 1e-9)
    out = []
    j = spec.plant_jitter
    for row in range(n_rows):
        y_row = (row + 0.5) * spec.row_spacing_m
        draws = rng.uniform(-1.0, 1.0, size=(n_plants, 3))
        for k in range(n_plants):
            x = (k + 0.5) * spec.plant_spacing_m + draws[k, 0] * j * spec.plant_spacing_m / 2
            y = y_row + draws[k, 1] * j * spec.plant_spacing_m / 2
            r = spec.plant_radius_m * (1.0 + j * draws[k, 2])
            if any(reg.contains(x, y) for reg in regions):
                out.append((x, y, r))
    return out


def weed_blobs(spec: FieldSpec, rng: np.random.Generator) -> list[list[tuple[float, float, float]]]:
    """Weed blobs as lists of (x, y, radius) lobes, regions in declaration order."""
    blobs = []
    for reg in spec.effective_regions():
        n = rng.poisson(reg.weed_density * reg.area)
        centers = rng.uniform((reg.x0, reg.y0), (reg.x1, reg.y1), size=(n, 2))
        for cx, cy in centers:
            n_lobes = int(rng.integers(3, 6))
            ang = rng.uniform(0, 2 * np.pi, n_lobes)
            dist = rng.uniform(0.0, 0.6, n_lobes) * spec.weed_radius_m
            rad = rng.uniform(0.4, 0.8, n_lobes) * spec.weed_radius_m
            blobs.append([
                (cx + d * math.cos(a), cy + d * math.sin(a), r) for a, d, r in zip(ang, dist, rad)
            ])
    return blobs


def _soil_texture(shape, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """Smooth multiplicative brightness field around 1.0."""
    if amplitude == 0:
        return np.ones(shape, dtype=np.float32)
    coarse = rng.normal(size=(shape[0] // 25 + 2, shape[1] // 25 + 2))
    coarse = gaussian_filter(coarse, 1.0)
    coarse /= coarse.std() or 1.0
    fine = zoom(coarse, 25, order=1)[: shape[0], : shape[1]]
    return (1.0 + amplitude * fine).astype(np.float32)


def generate_field(spec: FieldSpec) -> FieldWorld:
    """Render the orthophoto and label rasters for ``spec``.

    Draw order is fixed (crop rows, then weed regions in declaration order,
    then soil texture and pixel noise), so the output is a pure function of
    ``spec``, seed included.
    """
    h, w = spec.raster_shape
    rng = np.random.default_rng(spec.seed)
    px = 1.0 / spec.gsd

    labels = np.zeros((h, w), dtype=np.uint8)
    crop = np.zeros((h, w), dtype=bool)
    for x, y, r in plant_positions(spec, rng):
        _stamp_disc(crop, x * px, y * px, r * px)
    labels[crop] = CROP

    weed = np.zeros((h, w), dtype=bool)
    for blob in weed_blobs(spec, rng):
        for x, y, r in blob:
            _stamp_disc(weed, x * px, y * px, r * px)
    labels[weed] = WEED

    means = np.array([spec.colors.soil, spec.colors.crop, spec.colors.weed], dtype=np.float32)
    img = means[labels]
    tex = _soil_texture((h, w), spec.soil_texture, rng)
    soil = labels == BACKGROUND
    img[soil] *= tex[soil][:, None]
    if spec.colors.noise_sigma > 0:
        # one row block at a time keeps peak memory near the final image size
        for r0 in range(0, h, 500):
            img[r0:r0 + 500] += rng.normal(0.0, spec.colors.noise_sigma, size=img[r0:r0 + 500].shape).astype(np.float32)
    ortho = np.clip(np.rint(img), 0, 255).astype(np.uint8)

    frame = FieldFrame((0.0, 0.0), spec.gsd, w, h)
    return FieldWorld(frame, ortho, labels, spec.regions)


def load_field(
    orthophoto_path: Path | str,
    labels_path: Path | str,
    gsd: float,
    origin: tuple[float, float] = (0.0, 0.0),
    regions: tuple[Region, ...] = (),
) -> FieldWorld:
    try:
        with Image.open(orthophoto_path) as im:
            ortho = np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (OSError, ValueError) as exc:
        raise FieldReadError(f"cannot read orthophoto {orthophoto_path}: {exc}") from exc
    try:
        with Image.open(labels_path) as im:
            if im.mode not in ("L", "P", "I", "I;16"):
                raise FieldReadError(f"labels {labels_path} must be single-channel, got mode {im.mode}")
            labels = np.asarray(im).astype(np.int64)
    except (OSError, ValueError) as exc:
        raise FieldReadError(f"cannot read labels {labels_path}: {exc}") from exc
    if ortho.shape[:2] != labels.shape:
        raise DimensionMismatchError(
            f"orthophoto {ortho.shape[:2]} and labels {labels.shape} differ in size"
        )
    bad = np.setdiff1d(np.unique(labels), [BACKGROUND, CROP, WEED])
    if bad.size:
        raise LabelValueError(f"labels contain values outside {{0, 1, 2}}: {bad.tolist()}")
    frame = FieldFrame(origin, gsd, ortho.shape[1], ortho.shape[0])
    return FieldWorld(frame, ortho, labels.astype(np.uint8), regions)


def save_field(world: FieldWorld, orthophoto_path: Path | str, labels_path: Path | str) -> None:
    Image.fromarray(np.ascontiguousarray(world.orthophoto), "RGB").save(orthophoto_path)
    Image.fromarray(np.ascontiguousarray(world.labels), "L").save(labels_path)


def region_vegetation(world: FieldWorld, region: Region) -> float:
    """Ground-truth vegetation fraction inside ``region``."""
    f = world.frame
    c0, c1 = round(region.x0 / f.gsd), round(region.x1 / f.gsd)
    r0, r1 = round(region.y0 / f.gsd), round(region.y1 / f.gsd)
    return float(np.mean(world.labels[r0:r1, c0:c1] != BACKGROUND))


def find_region(regions: tuple[Region, ...], name: str) -> Optional[Region]:
    for r in regions:
        if r.name == name:
            return r
    return None
