"""Zero-shot evaluation of a trained encoder over a triplet dataset."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from core.evaluation.features import unique_clouds
from core.evaluation.metrics import accuracy, per_class_accuracy
from core.evaluation.prototypes import build_prototypes, rank_classes
from core.learning.encoder import ToyPointEncoder, encode_clouds
from core.learning.providers import EmbeddingProvider
from core.triplets.triplet import Domain, Triplet
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class EvalRow:
    split: str
    metric: str
    k: int
    value: float

    def as_row(self) -> Dict[str, object]:
        return {"split": self.split, "metric": self.metric, "k": self.k, "value": repr(self.value)}


def evaluate_triplets(
    triplets: Sequence[Triplet],
    encoder: ToyPointEncoder,
    provider: EmbeddingProvider,
    templates: Sequence[str],
    topk: Sequence[int] = (1, 5),
    mode: str = "both",
    min_points: int = 0,
    holdout: Sequence[str] = (),
    classes: Optional[Sequence[str]] = None,
) -> List[EvalRow]:
    """
    Object-wise and/or class-wise top-k per domain split, plus per-class top-1.

    Candidate classes default to every label in the dataset. With ``holdout``
    the scored instances are limited to those classes while the candidates
    stay the full list; those rows carry a ``-holdout`` split suffix.
    """
    clouds = unique_clouds(triplets, min_points)
    candidates = tuple(sorted(set(classes or [t.label for t in clouds])))
    rows: List[EvalRow] = []
    if not clouds or not candidates:
        logger.info("nothing to evaluate", extra={"fields": {"triplets": len(triplets)}})
        return rows
    prototypes = build_prototypes(candidates, templates, provider)
    metrics = ["object", "class"] if mode == "both" else [mode]
    held = set(holdout)
    for domain in (Domain.SYNTHETIC, Domain.OUTDOOR):
        members = [t for t in clouds if t.domain is domain and (not held or t.label in held)]
        if not members:
            continue
        split = domain.value + ("-holdout" if held else "")
        labels = [t.label for t in members]
        ranked = rank_classes(encode_clouds(encoder, [t.points for t in members]), prototypes)
        for k in topk:
            for metric in metrics:
                rows.append(EvalRow(split, metric, k, accuracy(ranked, labels, k, metric)))
        for label, value in per_class_accuracy(ranked, labels, 1).items():
            rows.append(EvalRow(split, f"class:{label}", 1, value))
        logger.info("split evaluated", extra={"fields": {"split": split, "objects": len(members)}})
    return rows
