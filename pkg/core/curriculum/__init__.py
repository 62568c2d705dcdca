"""Curriculum data mixing between the synthetic and outdoor domains."""

from core.curriculum.mixing import (
    CurriculumMixing,
    MixingPolicy,
    StaticMixing,
    SyntheticOnly,
    TwoStepMixing,
    make_policy,
)
from core.curriculum.sampler import CurriculumSampler, SampledBatch, sample_batch
from core.curriculum.schedule import CurriculumSchedule, iterations_per_epoch, mixing_ratio, outdoor_count

__all__ = [
    "CurriculumMixing",
    "CurriculumSampler",
    "CurriculumSchedule",
    "MixingPolicy",
    "SampledBatch",
    "StaticMixing",
    "SyntheticOnly",
    "TwoStepMixing",
    "iterations_per_epoch",
    "make_policy",
    "mixing_ratio",
    "outdoor_count",
    "sample_batch",
]
