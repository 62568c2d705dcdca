"""Mixing-strategy comparisons over several seeds.

``compare_modes`` trains the same data under every mixing mode;
``sweep_max_ratio`` varies the final outdoor ratio of the curriculum and
reports the rank correlation between ratio and synthetic-split accuracy.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from config.settings import TrainConfig
from core.learning.contrastive_learner import EpochMetrics, train
from core.learning.providers import EmbeddingProvider
from core.triplets.triplet import Triplet
from utils.logger import get_logger

logger = get_logger(__name__)

MODES = ("curriculum", "static", "two-step", "synthetic-only")


@dataclass(frozen=True)
class AblationRow:
    study: str
    setting: str
    seed: int
    final_synthetic_top1: float
    final_outdoor_top1: float
    peak_synthetic_top1: float

    def as_row(self) -> Dict[str, str]:
        return {
            "study": self.study,
            "setting": self.setting,
            "seed": str(self.seed),
            "final_synthetic_top1": repr(self.final_synthetic_top1),
            "final_outdoor_top1": repr(self.final_outdoor_top1),
            "peak_synthetic_top1": repr(self.peak_synthetic_top1),
        }


def _summarise(study: str, setting: str, seed: int, history: Sequence[EpochMetrics]) -> AblationRow:
    last = history[-1]
    synthetic = [m.synthetic_object_top1 for m in history if not math.isnan(m.synthetic_object_top1)]
    return AblationRow(
        study, setting, seed,
        last.synthetic_object_top1, last.outdoor_object_top1,
        max(synthetic) if synthetic else float("nan"),
    )


def compare_modes(
    base: TrainConfig,
    synthetic: Sequence[Triplet],
    outdoor: Sequence[Triplet],
    seeds: Sequence[int],
    modes: Sequence[str] = MODES,
    provider: Optional[EmbeddingProvider] = None,
) -> List[AblationRow]:
    """One training run per (mode, seed); rows ordered by mode then seed."""
    rows: List[AblationRow] = []
    for mode in modes:
        for seed in seeds:
            config = base.model_copy(update={"mode": mode, "seed": seed})
            learner = train(config, synthetic, outdoor, provider)
            rows.append(_summarise("modes", mode, seed, learner.history))
            logger.info("ablation run finished", extra={"fields": rows[-1].as_row()})
    return rows


def sweep_max_ratio(
    base: TrainConfig,
    synthetic: Sequence[Triplet],
    outdoor: Sequence[Triplet],
    ratios: Sequence[float],
    seeds: Sequence[int],
    provider: Optional[EmbeddingProvider] = None,
) -> List[AblationRow]:
    """Curriculum runs for every (r_max, seed)."""
    rows: List[AblationRow] = []
    for ratio in ratios:
        for seed in seeds:
            config = base.model_copy(update={"mode": "curriculum", "max_ratio": float(ratio), "seed": seed})
            learner = train(config, synthetic, outdoor, provider)
            rows.append(_summarise("ratio", repr(float(ratio)), seed, learner.history))
            logger.info("ablation run finished", extra={"fields": rows[-1].as_row()})
    return rows


def ratio_correlation(rows: Sequence[AblationRow]) -> float:
    """Spearman coefficient between r_max and the seed-averaged final synthetic accuracy."""
    by_ratio: Dict[float, List[float]] = {}
    for row in rows:
        by_ratio.setdefault(float(row.setting), []).append(row.final_synthetic_top1)
    ratios = sorted(by_ratio)
    if len(ratios) < 2:
        return float("nan")
    means = [float(np.nanmean(by_ratio[r])) for r in ratios]
    coefficient = spearmanr(ratios, means).statistic
    return float(coefficient)


def mode_means(rows: Sequence[AblationRow]) -> Dict[str, Dict[str, float]]:
    """Seed-averaged final and peak accuracies per setting."""
    grouped: Dict[str, List[AblationRow]] = {}
    for row in rows:
        grouped.setdefault(row.setting, []).append(row)
    return {
        setting: {
            "final_synthetic_top1": float(np.nanmean([r.final_synthetic_top1 for r in group])),
            "final_outdoor_top1": float(np.nanmean([r.final_outdoor_top1 for r in group])),
            "peak_synthetic_top1": float(np.nanmean([r.peak_synthetic_top1 for r in group])),
        }
        for setting, group in grouped.items()
    }
