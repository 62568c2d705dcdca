"""Deterministic mixed-domain batch sampling.

Each (device, epoch, iteration) draws from its own keyed stream of the master
seed, so a batch depends only on those indices and never on worker order.
Both domains are sampled uniformly with replacement; class labels are never
read.
"""

from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from core.curriculum.mixing import MixingPolicy
from core.curriculum.schedule import CurriculumSchedule, iterations_per_epoch, outdoor_count
from core.triplets.triplet import Domain
from utils.errors import ConfigError
from utils.rng import make_rng


@dataclass(frozen=True, eq=False)
class SampledBatch:
    """Indices into the synthetic and outdoor training sets for one device batch."""

    epoch: int
    iteration: int
    device: int
    ratio: float
    synthetic: np.ndarray
    outdoor: np.ndarray

    @property
    def size(self) -> int:
        return len(self.synthetic) + len(self.outdoor)

    def tagged(self) -> List[Tuple[Domain, int]]:
        """Synthetic entries first, then outdoor, each with its domain tag."""
        return [(Domain.SYNTHETIC, int(i)) for i in self.synthetic] + [(Domain.OUTDOOR, int(i)) for i in self.outdoor]


def sample_batch(
    epoch: int,
    iteration: int,
    seed: int,
    synthetic_size: int,
    outdoor_size: int,
    policy: MixingPolicy,
    batch_size: int,
    device: int = 0,
) -> SampledBatch:
    """
    Draw one device batch: ``k = floor(r(e) * B + 0.5)`` outdoor, ``B - k`` synthetic.

    Raises:
        ConfigError: a domain with a non-zero share has no samples.
    """
    ratio = policy.ratio(epoch)
    k = outdoor_count(ratio, batch_size)
    if k > 0 and outdoor_size <= 0:
        raise ConfigError(f"epoch {epoch} needs {k} outdoor samples but the outdoor set is empty", ["outdoor"])
    if batch_size - k > 0 and synthetic_size <= 0:
        raise ConfigError(f"epoch {epoch} needs synthetic samples but the synthetic set is empty", ["synthetic"])
    rng = make_rng(seed, "batch", device, epoch, iteration)
    synthetic = rng.integers(0, max(synthetic_size, 1), size=batch_size - k)
    outdoor = rng.integers(0, max(outdoor_size, 1), size=k)
    return SampledBatch(epoch, iteration, device, ratio, synthetic, outdoor)


class CurriculumSampler:
    """
    Batch stream for a schedule, policy and pair of dataset sizes.

    Args:
        schedule: Batch size, device count and synthetic-set size.
        policy: Per-epoch outdoor ratio.
        outdoor_size: Number of outdoor training samples.
        seed: Master seed.
    """

    def __init__(self, schedule: CurriculumSchedule, policy: MixingPolicy, outdoor_size: int, seed: int):
        self.schedule = schedule
        self.policy = policy
        self.outdoor_size = outdoor_size
        self.seed = seed
        self.iterations = iterations_per_epoch(schedule)

    def batches(self, epoch: int, device: int = 0) -> Iterator[SampledBatch]:
        for iteration in range(self.iterations):
            yield self.batch(epoch, iteration, device)

    def batch(self, epoch: int, iteration: int, device: int = 0) -> SampledBatch:
        return sample_batch(
            epoch, iteration, self.seed,
            self.schedule.synthetic_size, self.outdoor_size,
            self.policy, self.schedule.batch_size, device,
        )

    def __repr__(self) -> str:
        return f"CurriculumSampler(policy={self.policy}, iterations={self.iterations})"
