"""Data-mixing policies: how much of each batch comes from the outdoor domain."""

from abc import ABC, abstractmethod
from typing import Optional

from core.curriculum.schedule import CurriculumSchedule, mixing_ratio
from utils.errors import InvalidInputError


class MixingPolicy(ABC):
    """
    Abstract base class for per-epoch outdoor ratios.

    Implementations map an epoch index to the outdoor fraction of every batch
    in that epoch; the ratio is constant within an epoch.
    """

    name: str = "abstract"

    @abstractmethod
    def ratio(self, epoch: int) -> float:
        """Outdoor fraction in [0, 1] for ``epoch``."""

    def __str__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class CurriculumMixing(MixingPolicy):
    """Warm-up on synthetic data, then a linear ramp to ``max_ratio``."""

    name = "curriculum"

    def __init__(self, schedule: CurriculumSchedule):
        self.schedule = schedule

    def ratio(self, epoch: int) -> float:
        return mixing_ratio(epoch, self.schedule)


class StaticMixing(MixingPolicy):
    """The same outdoor fraction from the first epoch on."""

    name = "static"

    def __init__(self, ratio: float):
        if not 0.0 <= ratio <= 1.0:
            raise InvalidInputError(f"static ratio must lie in [0, 1], got {ratio!r}")
        self._ratio = float(ratio)

    def ratio(self, epoch: int) -> float:
        if epoch < 0:
            raise InvalidInputError(f"epoch must be non-negative, got {epoch}")
        return self._ratio


class TwoStepMixing(MixingPolicy):
    """Synthetic only before ``switch_epoch``, outdoor only from it on."""

    name = "two-step"

    def __init__(self, switch_epoch: int):
        if switch_epoch < 0:
            raise InvalidInputError("switch epoch must be non-negative")
        self.switch_epoch = int(switch_epoch)

    def ratio(self, epoch: int) -> float:
        if epoch < 0:
            raise InvalidInputError(f"epoch must be non-negative, got {epoch}")
        return 0.0 if epoch < self.switch_epoch else 1.0


class SyntheticOnly(MixingPolicy):
    """Baseline that never samples outdoor data."""

    name = "synthetic-only"

    def ratio(self, epoch: int) -> float:
        if epoch < 0:
            raise InvalidInputError(f"epoch must be non-negative, got {epoch}")
        return 0.0


def make_policy(
    mode: str,
    schedule: CurriculumSchedule,
    static_ratio: Optional[float] = None,
    switch_epoch: Optional[int] = None,
) -> MixingPolicy:
    """
    Policy for a training mode.

    ``static`` defaults to ``max_ratio``; ``two-step`` switches at
    ``total_epochs // 2`` unless told otherwise.
    """
    if mode == "curriculum":
        return CurriculumMixing(schedule)
    if mode == "static":
        return StaticMixing(schedule.max_ratio if static_ratio is None else static_ratio)
    if mode == "two-step":
        return TwoStepMixing(schedule.total_epochs // 2 if switch_epoch is None else switch_epoch)
    if mode == "synthetic-only":
        return SyntheticOnly()
    raise InvalidInputError(f"unknown mixing mode {mode!r}")
