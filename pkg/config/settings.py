"""Validated run configurations.

Every subcommand is driven by one frozen pydantic model. Values are resolved
with the precedence command-line flag > JSON config file > documented default
(``config.constants``), then validated before any work starts.
"""

import json
import os
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.constants import (
    DEFAULT_ANNOTATION_EVERY,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLUTTER_POINTS,
    DEFAULT_COVERAGE,
    DEFAULT_CROP_MARGIN,
    DEFAULT_DEVICES,
    DEFAULT_EMBED_DIM,
    DEFAULT_FUSION_SWEEPS,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_HPR_GAMMA,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_POINTS,
    DEFAULT_MAX_RANGE,
    DEFAULT_MAX_RATIO,
    DEFAULT_MIN_POINTS,
    DEFAULT_MIN_VISIBILITY,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_PROVIDER_PERTURBATION,
    DEFAULT_SHELL_MAX_FACTOR,
    DEFAULT_SHELL_MIN_FACTOR,
    DEFAULT_SURFACE_SAMPLES,
    DEFAULT_SWEEP_INTERVAL,
    DEFAULT_TEMPERATURE,
    DEFAULT_TOTAL_EPOCHS,
    DEFAULT_WARMUP_EPOCHS,
    DEFAULT_WEIGHT_DECAY,
    FEATURE_MIN_POINTS,
    TAXONOMY,
    THREADS_ENV_VAR,
)
from utils.errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


class _RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def _check_range(pair: Tuple[float, float], name: str) -> None:
    low, high = pair
    if not 0.0 <= low <= high:
        raise ValueError(f"{name} must satisfy 0 <= min <= max, got {pair}")


def _check_classes(classes: Tuple[str, ...]) -> None:
    unknown = sorted(set(classes) - set(TAXONOMY))
    if unknown:
        raise ValueError(f"unknown classes {unknown}; known: {list(TAXONOMY)}")
    if len(set(classes)) != len(classes):
        raise ValueError("class list contains duplicates")


class SceneConfig(_RunConfig):
    """Synthetic driving scene."""

    seed: int = 0
    num_objects: int = Field(8, ge=0)
    num_sweeps: int = Field(41, ge=1)
    sweep_interval: float = Field(DEFAULT_SWEEP_INTERVAL, gt=0.0)
    annotation_every: int = Field(DEFAULT_ANNOTATION_EVERY, ge=1)
    noise_sigma: float = Field(DEFAULT_NOISE_SIGMA, ge=0.0)
    range_dropout: bool = True
    surface_samples: int = Field(DEFAULT_SURFACE_SAMPLES, ge=1)
    clutter_points: int = Field(DEFAULT_CLUTTER_POINTS, ge=0)
    max_range: float = Field(DEFAULT_MAX_RANGE, gt=0.0)
    spawn_range: Tuple[float, float] = (8.0, 30.0)
    speed_range: Tuple[float, float] = (1.0, 10.0)
    yaw_rate_max: float = Field(0.0, ge=0.0)
    ego_speed: float = 5.0
    ego_yaw_rate: float = 0.0
    num_cameras: int = Field(6, ge=0)
    image_width: int = Field(800, gt=0)
    image_height: int = Field(450, gt=0)
    horizontal_fov_deg: float = Field(70.0, gt=0.0, lt=180.0)
    classes: Tuple[str, ...] = TAXONOMY
    size_jitter: float = Field(0.1, ge=0.0, lt=1.0)
    min_visibility: float = Field(DEFAULT_MIN_VISIBILITY, ge=0.0, le=1.0)
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "SceneConfig":
        _check_range(self.spawn_range, "spawn_range")
        _check_range(self.speed_range, "speed_range")
        _check_classes(self.classes)
        if not self.classes:
            raise ValueError("classes must not be empty")
        return self


class CadConfig(_RunConfig):
    """Synthetic-domain (CAD-like) triplet library."""

    seed: int = 0
    objects_per_class: int = Field(40, ge=1)
    points: int = Field(1024, ge=4)
    classes: Tuple[str, ...] = TAXONOMY
    size_jitter: float = Field(0.15, ge=0.0, lt=1.0)
    views_per_object: int = Field(1, ge=1)
    random_yaw: bool = False
    up_axis: Literal["y", "z"] = "y"
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "CadConfig":
        _check_classes(self.classes)
        if not self.classes:
            raise ValueError("classes must not be empty")
        return self


class TripletConfig(_RunConfig):
    """Outdoor triplet generation from a scene."""

    scene: Optional[str] = None
    captions: Optional[str] = None
    sweeps: int = Field(DEFAULT_FUSION_SWEEPS, ge=1)
    min_points: int = Field(DEFAULT_MIN_POINTS, ge=0)
    visibility: float = Field(DEFAULT_MIN_VISIBILITY, ge=0.0, le=1.0)
    crop_margin: float = Field(DEFAULT_CROP_MARGIN, ge=0.0)
    max_offset: Optional[float] = Field(None, ge=0.0)
    compensate_motion: bool = True
    range_filter: bool = False
    detection_ranges: Optional[Dict[str, float]] = None
    class_map: Dict[str, str] = Field(default_factory=dict)
    store_pixels: bool = False
    dataset_name: str = "outdoor"
    threads: Optional[int] = Field(None, ge=1)
    out: Optional[str] = None


class OcclusionConfig(_RunConfig):
    """Viewpoint-aware occlusion augmentation."""

    input: Optional[str] = None
    seed: int = 0
    gamma: float = Field(DEFAULT_HPR_GAMMA, ge=1.0)
    shell_min_factor: float = Field(DEFAULT_SHELL_MIN_FACTOR, gt=0.0)
    shell_max_factor: float = Field(DEFAULT_SHELL_MAX_FACTOR, gt=0.0)
    r_min: Optional[float] = Field(None, gt=0.0)
    r_max: Optional[float] = Field(None, gt=0.0)
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "OcclusionConfig":
        if self.shell_min_factor > self.shell_max_factor:
            raise ValueError("shell_min_factor must not exceed shell_max_factor")
        if (self.r_min is None) != (self.r_max is None):
            raise ValueError("r_min and r_max must be given together")
        if self.r_min is not None and self.r_min > self.r_max:
            raise ValueError("r_min must not exceed r_max")
        return self


class ProviderSettings(_RunConfig):
    """Frozen image/text embedding provider."""

    path: Optional[str] = None
    seed: int = 0
    perturbation: float = Field(DEFAULT_PROVIDER_PERTURBATION, ge=0.0)
    classes: Tuple[str, ...] = TAXONOMY


class ScheduleSettings(_RunConfig):
    """Arguments of the ``schedule`` subcommand."""

    warmup_epochs: int = Field(DEFAULT_WARMUP_EPOCHS, ge=0)
    total_epochs: int = Field(DEFAULT_TOTAL_EPOCHS, ge=1)
    max_ratio: float = Field(DEFAULT_MAX_RATIO, ge=0.0, le=1.0)
    coverage: float = Field(DEFAULT_COVERAGE, gt=0.0, lt=1.0)
    synthetic_size: int = Field(1, ge=1)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    devices: int = Field(DEFAULT_DEVICES, ge=1)
    out: Optional[str] = None
    plot: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "ScheduleSettings":
        if self.warmup_epochs > self.total_epochs:
            raise ValueError("warmup_epochs must not exceed total_epochs")
        return self


TrainingMode = Literal["curriculum", "static", "two-step", "synthetic-only"]


class TrainConfig(_RunConfig):
    """Contrastive training run."""

    synthetic: Optional[str] = None
    outdoor: Optional[str] = None
    mode: TrainingMode = "curriculum"
    seed: int = 0
    warmup_epochs: int = Field(DEFAULT_WARMUP_EPOCHS, ge=0)
    total_epochs: int = Field(DEFAULT_TOTAL_EPOCHS, ge=1)
    max_ratio: float = Field(DEFAULT_MAX_RATIO, ge=0.0, le=1.0)
    coverage: float = Field(DEFAULT_COVERAGE, gt=0.0, lt=1.0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    devices: int = Field(DEFAULT_DEVICES, ge=1)
    static_ratio: Optional[float] = Field(None, ge=0.0, le=1.0)
    switch_epoch: Optional[int] = Field(None, ge=0)
    temperature: float = Field(DEFAULT_TEMPERATURE, gt=0.0)
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0.0)
    weight_decay: float = Field(DEFAULT_WEIGHT_DECAY, ge=0.0)
    hidden_dim: int = Field(DEFAULT_HIDDEN_DIM, ge=1)
    embed_dim: int = Field(DEFAULT_EMBED_DIM, ge=2)
    max_points: int = Field(DEFAULT_MAX_POINTS, ge=1)
    eval_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    exclude_classes: Tuple[str, ...] = ()
    occlusion: bool = False
    occlusion_gamma: float = Field(DEFAULT_HPR_GAMMA, ge=1.0)
    provider: ProviderSettings = Field(default_factory=ProviderSettings)
    progress: bool = False
    params_out: Optional[str] = None
    metrics_out: Optional[str] = None
    plot: Optional[str] = None
    threads: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if self.warmup_epochs > self.total_epochs:
            raise ValueError("warmup_epochs must not exceed total_epochs")
        if self.switch_epoch is not None and self.switch_epoch > self.total_epochs:
            raise ValueError("switch_epoch must not exceed total_epochs")
        return self


class EvalConfig(_RunConfig):
    """Zero-shot evaluation run."""

    dataset: Optional[str] = None
    params: Optional[str] = None
    prompts: Optional[str] = None
    prompt_set: Literal["single", "full"] = "single"
    topk: Tuple[int, ...] = (1, 5)
    mode: Literal["object", "class", "both"] = "both"
    holdout: Tuple[str, ...] = ()
    min_points: int = Field(FEATURE_MIN_POINTS, ge=0)
    provider: ProviderSettings = Field(default_factory=ProviderSettings)
    retrieve: Optional[str] = None
    top: int = Field(5, ge=1)
    features_out: Optional[str] = None
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "EvalConfig":
        if not self.topk or any(k < 1 for k in self.topk):
            raise ValueError("topk values must be >= 1")
        return self


def load_config_file(path: Optional[str], section: Optional[str] = None) -> Dict[str, Any]:
    """Read a JSON config file; a top-level ``section`` object is used when present.

    Raises:
        OSError: the file cannot be read.
        ConfigError: the file is not a JSON object.
    """
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        try:
            values = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    if section is not None and isinstance(values.get(section), dict):
        return dict(values[section])
    return values


def resolve_config(
    model: Type[ModelT],
    file_values: Optional[Mapping[str, Any]] = None,
    flag_values: Optional[Mapping[str, Any]] = None,
) -> ModelT:
    """Merge defaults, file values and flags, then validate.

    Flags set to ``None`` count as "not given" and fall through to the file
    value or the model default.

    Raises:
        ConfigError: validation failed; the message lists offending fields.
    """
    merged: Dict[str, Any] = dict(file_values or {})
    for key, value in (flag_values or {}).items():
        if value is not None:
            merged[key] = value
    try:
        return model(**merged)
    except ValidationError as exc:
        fields = sorted({".".join(str(part) for part in err["loc"]) or "<root>" for err in exc.errors()})
        details = "; ".join(err["msg"] for err in exc.errors())
        raise ConfigError(f"invalid {model.__name__}: {details}", fields) from exc


def default_threads(threads: Optional[int] = None) -> int:
    """Worker-pool size: explicit value, else ``MIXALIGN_THREADS``, else 1."""
    if threads is not None:
        return max(1, int(threads))
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}", [THREADS_ENV_VAR]) from exc
