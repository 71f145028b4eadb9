"""Pixel-wise segmentation behind a pluggable interface.

A segmenter maps an RGB image to a :class:`SegmentationResult` with channels
ordered (background, crop, weed). The reference model scores each pixel by a
Gaussian kernel around per-class prototypes in (hue, excess-green) feature
space and normalizes the scores with a tempered softmax.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .worldgen import ColorModel

N_CLASSES = 3
SUM_TOL = 1e-6


class SegmentationError(ValueError):
    """A segmenter produced output that violates the result contract."""


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    scores: np.ndarray
    class_map: np.ndarray
    prob_map: np.ndarray

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "SegmentationResult":
        """Validate a score map and derive class and confidence maps.

        ``np.argmax`` returns the first maximum, so ties go to the lower class.
        """
        scores = np.asarray(scores)
        validate_scores(scores)
        return cls(scores, np.argmax(scores, axis=-1).astype(np.uint8), scores.max(axis=-1))

    @property
    def counts(self) -> np.ndarray:
        """Pixel counts per class (background, crop, weed)."""
        return np.bincount(self.class_map.ravel(), minlength=N_CLASSES)[:N_CLASSES]


def validate_scores(scores: np.ndarray) -> None:
    if scores.ndim != 3 or scores.shape[0] == 0 or scores.shape[1] == 0:
        raise SegmentationError(f"score map must be HxWx{N_CLASSES} and nonempty, got {scores.shape}")
    if scores.shape[2] != N_CLASSES:
        raise SegmentationError(f"score map has {scores.shape[2]} channels, expected {N_CLASSES}")
    if not np.all(np.isfinite(scores)):
        raise SegmentationError("score map contains non-finite values")
    if scores.min() < 0 or scores.max() > 1:
        raise SegmentationError("scores must lie in [0, 1]")
    err = np.abs(scores.sum(axis=-1, dtype=np.float64) - 1.0).max()
    if err > SUM_TOL:
        raise SegmentationError(f"per-pixel channel sums deviate from 1 by up to {err:.3g}")


def validate_result(result: SegmentationResult, shape: tuple[int, int] | None = None) -> SegmentationResult:
    """Check a result returned by an arbitrary segmenter; returns it unchanged."""
    validate_scores(result.scores)
    hw = result.scores.shape[:2]
    if shape is not None and hw != tuple(shape):
        raise SegmentationError(f"result is {hw}, image is {tuple(shape)}")
    if result.class_map.shape != hw or result.prob_map.shape != hw:
        raise SegmentationError("class/prob maps do not match the score map size")
    if result.class_map.size and result.class_map.max() >= N_CLASSES:
        raise SegmentationError(f"class map contains ids >= {N_CLASSES}")
    if not np.array_equal(result.class_map, np.argmax(result.scores, axis=-1)):
        raise SegmentationError("class map is not the argmax of the scores")
    if not np.allclose(result.prob_map, result.scores.max(axis=-1), atol=SUM_TOL):
        raise SegmentationError("prob map is not the max of the scores")
    return result


class Segmenter(Protocol):
    def __call__(self, image: np.ndarray) -> SegmentationResult: ...


def rgb_features(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """HSV hue in degrees and excess green ``2g - r - b`` on [0, 1] channels."""
    rgb = np.asarray(image, dtype=np.float32) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.where(
        mx == r,
        np.mod((g - b) / safe, 6.0),
        np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    hue = np.where(delta > 0, hue * 60.0, 0.0)
    return hue.astype(np.float32), (2 * g - r - b).astype(np.float32)


@dataclass(frozen=True)
class Prototype:
    hue: float
    exg: float


def prototypes_from_colors(colors: ColorModel = ColorModel()) -> tuple[Prototype, Prototype, Prototype]:
    protos = []
    for rgb in (colors.soil, colors.crop, colors.weed):
        h, e = rgb_features(np.array([[rgb]], dtype=np.uint8))
        protos.append(Prototype(float(h[0, 0]), float(e[0, 0])))
    return tuple(protos)


@dataclass(frozen=True)
class SegmenterConfig:
    """Prototype classifier settings.

    ``hue_scale`` converts hue degrees to feature units so that hue and excess
    green enter the distance on comparable scales. The defaults come from
    ``scripts/calibrate_perception.py``.
    """

    prototypes: tuple[Prototype, Prototype, Prototype] = field(default_factory=prototypes_from_colors)
    sigma: float = 0.125
    temperature: float = 0.12
    hue_scale: float = 150.0

    def __post_init__(self) -> None:
        if len(self.prototypes) != N_CLASSES:
            raise ValueError(f"need exactly {N_CLASSES} prototypes")
        if not (self.sigma > 0 and self.temperature > 0 and self.hue_scale > 0):
            raise ValueError("sigma, temperature and hue_scale must be > 0")


class PrototypeSegmenter:
    """Reference segmenter: Gaussian prototype scores, tempered softmax."""

    def __init__(self, config: SegmenterConfig | None = None):
        self.config = config or SegmenterConfig()
        c = self.config
        self._hue = np.array([p.hue for p in c.prototypes], dtype=np.float32)
        self._exg = np.array([p.exg for p in c.prototypes], dtype=np.float32)

    def scores(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] == 0 or image.shape[1] == 0:
            raise SegmentationError(f"expected a nonempty HxWx3 image, got shape {image.shape}")
        c = self.config
        hue, exg = rgb_features(image)
        dh = np.abs(hue[..., None] - self._hue)
        dh = np.minimum(dh, 360.0 - dh) / c.hue_scale
        de = exg[..., None] - self._exg
        kern = np.exp(-(dh * dh + de * de) / (2.0 * c.sigma**2))
        logits = kern.astype(np.float64) / c.temperature
        logits -= logits.max(axis=-1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=-1, keepdims=True)

    def __call__(self, image: np.ndarray) -> SegmentationResult:
        return SegmentationResult.from_scores(self.scores(image))


class CheckedSegmenter:
    """Wraps any segmenter and validates every result it returns."""

    def __init__(self, inner: Callable[[np.ndarray], SegmentationResult]):
        self.inner = inner

    def __call__(self, image: np.ndarray) -> SegmentationResult:
        result = self.inner(image)
        if not isinstance(result, SegmentationResult):
            raise SegmentationError(f"segmenter returned {type(result).__name__}, not SegmentationResult")
        return validate_result(result, image.shape[:2])


class SubprocessSegmenter:
    """Runs an external model per image.

    ``command`` is a shell-style template with ``{input}`` and ``{output}``
    placeholders. The input is an ``HxWx3`` uint8 ``.npy``; the command must
    write an ``HxWx3`` float score map as ``.npy`` to the output path.
    """

    def __init__(self, command: str, timeout: float = 60.0):
        if "{input}" not in command or "{output}" not in command:
            raise ValueError("command must contain {input} and {output} placeholders")
        self.command = command
        self.timeout = timeout

    def __call__(self, image: np.ndarray) -> SegmentationResult:
        with tempfile.TemporaryDirectory() as tmp:
            src = os.path.join(tmp, "image.npy")
            dst = os.path.join(tmp, "scores.npy")
            np.save(src, np.asarray(image, dtype=np.uint8))
            argv = [a.format(input=src, output=dst) for a in shlex.split(self.command)]
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            if proc.returncode != 0:
                raise SegmentationError(
                    f"external segmenter exited {proc.returncode}: {proc.stderr.strip()[:200]}"
                )
            if not Path(dst).exists():
                raise SegmentationError("external segmenter wrote no score map")
            scores = np.load(dst)
        if scores.shape[:2] != image.shape[:2]:
            raise SegmentationError(f"score map {scores.shape} does not match image {image.shape}")
        return SegmentationResult.from_scores(scores)


_REGISTRY: dict[str, Callable[..., Callable[[np.ndarray], SegmentationResult]]] = {
    "prototype": lambda **kw: PrototypeSegmenter(SegmenterConfig(**kw) if kw else None),
    "subprocess": lambda **kw: SubprocessSegmenter(**kw),
}


def register_segmenter(name: str, factory: Callable[..., Callable[[np.ndarray], SegmentationResult]]) -> None:
    _REGISTRY[name] = factory


def make_segmenter(name: str = "prototype", **options) -> CheckedSegmenter:
    """Build a registered segmenter, wrapped so its output is always validated."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown segmenter {name!r}; known: {sorted(_REGISTRY)}") from None
    return CheckedSegmenter(factory(**options))
