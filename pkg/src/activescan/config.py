"""Run configuration: one YAML file describing field, plan, camera, controller,
mission, segmenter and evaluation settings.

Loading is strict: unknown keys are rejected with their dotted path, and
every section is re-validated by the component that owns it. ``to_dict``
yields the fully resolved configuration, which is what run directories
store as their snapshot.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .controller import ControllerConfig
from .geometry import Polygon
from .mission import ADAPTIVE, BASELINE, MissionConfig
from .perception import make_segmenter
from .sensor import BlurLaw, CameraModel
from .worldgen import ColorModel, FieldSpec, FieldWorld, Region, generate_field, load_field


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FieldImport:
    """An existing orthophoto/label pair instead of a synthetic field."""

    orthophoto: str
    labels: str
    gsd: float
    origin: tuple[float, float] = (0.0, 0.0)
    regions: tuple[Region, ...] = ()


@dataclass(frozen=True)
class PlannerSection:
    overlap: float = 0.7
    altitude: float = 10.0

    def __post_init__(self) -> None:
        if not 0 <= self.overlap < 1:
            raise ValueError(f"overlap must lie in [0, 1), got {self.overlap}")
        if not self.altitude > 0:
            raise ValueError(f"altitude must be > 0, got {self.altitude}")


@dataclass(frozen=True)
class CameraSection:
    image_width: int = 640
    image_height: int = 480
    gimbal_pitch: float = -90.0


@dataclass(frozen=True)
class MissionSection:
    t_max: float = 3600.0
    mode: str = ADAPTIVE
    dt: float = 1.0


@dataclass(frozen=True)
class SegmenterSection:
    name: str = "prototype"
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EvalSection:
    alpha: float = 0.001
    ssim: bool = True

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class RunConfig:
    field: Union[FieldSpec, FieldImport] = dataclasses.field(default_factory=FieldSpec)
    polygon: Optional[tuple[tuple[float, float], ...]] = None
    planner: PlannerSection = dataclasses.field(default_factory=PlannerSection)
    camera: CameraSection = dataclasses.field(default_factory=CameraSection)
    controller: ControllerConfig = dataclasses.field(default_factory=ControllerConfig)
    mission: MissionSection = dataclasses.field(default_factory=MissionSection)
    segmenter: SegmenterSection = dataclasses.field(default_factory=SegmenterSection)
    eval: EvalSection = dataclasses.field(default_factory=EvalSection)
    blur_law: BlurLaw = dataclasses.field(default_factory=BlurLaw)
    output_dir: Optional[str] = None

    @property
    def gsd(self) -> float:
        return self.field.gsd

    @property
    def is_synthetic(self) -> bool:
        return isinstance(self.field, FieldSpec)

    def camera_model(self) -> CameraModel:
        return CameraModel(
            image_width=self.camera.image_width,
            image_height=self.camera.image_height,
            gsd=self.gsd,
            altitude=self.planner.altitude,
            gimbal_pitch=self.camera.gimbal_pitch,
            dt=self.mission.dt,
        )

    def mission_config(self, keep_images: bool = False) -> MissionConfig:
        return MissionConfig(
            controller=self.controller,
            camera=self.camera_model(),
            t_max=self.mission.t_max,
            mode=self.mission.mode,
            blur_law=self.blur_law,
            keep_images=keep_images,
        )

    def polygon_shape(self) -> Optional[Polygon]:
        return None if self.polygon is None else Polygon(self.polygon)

    def build_world(self) -> FieldWorld:
        if isinstance(self.field, FieldSpec):
            return generate_field(self.field)
        f = self.field
        return load_field(f.orthophoto, f.labels, f.gsd, f.origin, f.regions)

    def build_segmenter(self):
        return make_segmenter(self.segmenter.name, **self.segmenter.options)

    def with_overrides(
        self,
        mode: Optional[str] = None,
        nominal_speed: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> "RunConfig":
        cfg = self
        try:
            if mode is not None:
                cfg = dataclasses.replace(cfg, mission=dataclasses.replace(cfg.mission, mode=mode))
            if nominal_speed is not None:
                ctrl = dataclasses.replace(cfg.controller, nominal_speed=float(nominal_speed))
                cfg = dataclasses.replace(cfg, controller=ctrl)
            if seed is not None:
                if not isinstance(cfg.field, FieldSpec):
                    raise ConfigError("--seed applies only to synthetic fields")
                cfg = dataclasses.replace(cfg, field=dataclasses.replace(cfg.field, seed=int(seed)))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"invalid override: {exc}") from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Cross-section checks that no single component can make."""
        if self.mission.mode not in (ADAPTIVE, BASELINE):
            raise ConfigError(f"mission.mode: must be {ADAPTIVE!r} or {BASELINE!r}, got {self.mission.mode!r}")
        try:
            self.mission_config()
            self.polygon_shape()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        out = _plain(dataclasses.asdict(self))
        out["field"] = {("synthetic" if self.is_synthetic else "import"): out["field"]}
        return out


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tuples(obj: Any) -> Any:
    if isinstance(obj, (list, tuple)):
        return tuple(_tuples(v) for v in obj)
    return obj


def _build(cls, data: Any, where: str, convert: Optional[dict] = None):
    """Instantiate a flat dataclass from a mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if convert and key in convert:
            value = convert[key](value, f"{where}.{key}")
        elif isinstance(value, list):
            value = _tuples(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _regions(value: Any, where: str) -> tuple[Region, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list of regions")
    return tuple(_build(Region, r, f"{where}[{i}]") for i, r in enumerate(value))


def _colors(value: Any, where: str) -> ColorModel:
    return _build(ColorModel, value, where)


def _field(value: Any, where: str) -> Union[FieldSpec, FieldImport]:
    if value is None:
        return FieldSpec()
    if not isinstance(value, dict) or len(value) != 1 or next(iter(value)) not in ("synthetic", "import"):
        raise ConfigError(f"{where}: expected exactly one of 'synthetic' or 'import'")
    kind, body = next(iter(value.items()))
    if kind == "synthetic":
        return _build(FieldSpec, body, f"{where}.synthetic", {"regions": _regions, "colors": _colors})
    return _build(FieldImport, body, f"{where}.import", {"regions": _regions})


def _polygon(value: Any, where: str) -> Optional[tuple[tuple[float, float], ...]]:
    if value is None:
        return None
    try:
        pts = tuple((float(x), float(y)) for x, y in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a list of [x, y] vertices") from None
    if not all(math.isfinite(c) for p in pts for c in p):
        raise ConfigError(f"{where}: vertices must be finite")
    return pts


def _segmenter(value: Any, where: str) -> SegmenterSection:
    sec = _build(SegmenterSection, value, where)
    if not isinstance(sec.options, dict):
        raise ConfigError(f"{where}.options: expected a mapping")
    return sec


def config_from_dict(data: Any) -> RunConfig:
    if data is None:
        data = {}
    section = lambda cls: (lambda v, w: _build(cls, v, w))  # noqa: E731
    cfg = _build(
        RunConfig,
        data,
        "config",
        {
            "field": _field,
            "polygon": _polygon,
            "planner": section(PlannerSection),
            "camera": section(CameraSection),
            "controller": section(ControllerConfig),
            "mission": section(MissionSection),
            "segmenter": _segmenter,
            "eval": section(EvalSection),
            "blur_law": section(BlurLaw),
        },
    )
    cfg.validate()
    try:
        cfg.build_segmenter()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config.segmenter: {exc}") from None
    return cfg


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {str(exc).splitlines()[0]}") from None
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None, width=100)
