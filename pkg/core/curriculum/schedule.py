"""Two-phase curriculum schedule and coupon-collector epoch sizing.

Epochs are indexed from 0. Epochs strictly before ``warmup_epochs`` train on
synthetic data only; afterwards the outdoor share of each batch ramps
linearly to ``max_ratio`` at ``total_epochs``.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_COVERAGE,
    DEFAULT_DEVICES,
    DEFAULT_MAX_RATIO,
    DEFAULT_TOTAL_EPOCHS,
    DEFAULT_WARMUP_EPOCHS,
    ITERATION_SNAP_TOLERANCE,
)
from utils.errors import InvalidInputError


class CurriculumSchedule(BaseModel):
    """
    Schedule parameters.

    Attributes:
        warmup_epochs: W_e, pure-synthetic epochs.
        total_epochs: T_e, epoch at which the ratio reaches ``max_ratio``.
        max_ratio: r_max, final outdoor fraction per batch.
        coverage: psi, expected fraction of the synthetic set seen per epoch.
        batch_size: B, per-device batch size.
        devices: Number of (emulated) devices.
        synthetic_size: N, number of synthetic training samples.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    warmup_epochs: int = Field(DEFAULT_WARMUP_EPOCHS, ge=0)
    total_epochs: int = Field(DEFAULT_TOTAL_EPOCHS, ge=1)
    max_ratio: float = Field(DEFAULT_MAX_RATIO, ge=0.0, le=1.0)
    coverage: float = Field(DEFAULT_COVERAGE, gt=0.0, lt=1.0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    devices: int = Field(DEFAULT_DEVICES, ge=1)
    synthetic_size: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_epochs(self) -> "CurriculumSchedule":
        if self.warmup_epochs > self.total_epochs:
            raise ValueError("warmup_epochs must not exceed total_epochs")
        return self


def mixing_ratio(epoch: int, schedule: CurriculumSchedule) -> float:
    """
    Outdoor fraction r(e) for epoch ``e``.

    ``0`` before the warm-up ends, then ``r_max * (e - W_e) / (T_e - W_e)`` in
    double precision, with ``r(T_e) = r_max`` exactly.

    Raises:
        InvalidInputError: ``e < 0`` or ``e > T_e``.
    """
    if epoch < 0 or epoch > schedule.total_epochs:
        raise InvalidInputError(f"epoch {epoch} outside [0, {schedule.total_epochs}]")
    if epoch < schedule.warmup_epochs:
        return 0.0
    if epoch == schedule.total_epochs:
        return float(schedule.max_ratio)
    ramp = schedule.total_epochs - schedule.warmup_epochs
    return schedule.max_ratio * (epoch - schedule.warmup_epochs) / ramp


def iterations_per_epoch(schedule: CurriculumSchedule) -> int:
    """
    Iterations that cover a fraction psi of the synthetic set in expectation.

    ``ceil(N * ln(1 / (1 - psi)) / (devices * B))``, drawing with replacement.
    Values within a relative 1e-9 of an integer snap to it, so exact
    boundary inputs are not pushed up by rounding noise.
    """
    draws = schedule.synthetic_size * -math.log1p(-schedule.coverage)
    value = draws / (schedule.devices * schedule.batch_size)
    nearest = round(value)
    if abs(value - nearest) <= ITERATION_SNAP_TOLERANCE * max(1.0, value):
        return max(1, int(nearest))
    return max(1, math.ceil(value))


def outdoor_count(ratio: float, batch_size: int) -> int:
    """Outdoor samples per device batch: ``floor(r * B + 0.5)`` (half-up)."""
    if not 0.0 <= ratio <= 1.0:
        raise InvalidInputError(f"ratio must lie in [0, 1], got {ratio!r}")
    return min(batch_size, int(math.floor(ratio * batch_size + 0.5)))
