"""Per-instance feature export and text-to-shape retrieval."""

import csv
import os
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from config.constants import FEATURE_MIN_POINTS
from core.learning.encoder import ToyPointEncoder, encode_clouds
from core.learning.providers import EmbeddingProvider
from core.triplets.triplet import Triplet
from utils.errors import InvalidInputError
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """One row per distinct (instance, reference time) cloud."""

    instance_ids: Tuple[str, ...]
    reference_times: Tuple[float, ...]
    labels: Tuple[str, ...]
    domains: Tuple[str, ...]
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.instance_ids)


def unique_clouds(triplets: Sequence[Triplet], min_points: int = 0) -> List[Triplet]:
    """
    First triplet of every (instance, reference time) with more than ``min_points`` points.

    Triplets of one fused cloud share their points, so each object is counted once.
    """
    seen = set()
    kept: List[Triplet] = []
    sparse = 0
    for triplet in triplets:
        key = (triplet.instance_id, triplet.reference_time)
        if key in seen:
            continue
        seen.add(key)
        if len(triplet.points) <= min_points:
            sparse += 1
            continue
        kept.append(triplet)
    if sparse:
        logger.info("clouds below the point threshold skipped", extra={"fields": {"count": sparse, "min_points": min_points}})
    return kept


def export_features(
    triplets: Sequence[Triplet], encoder: ToyPointEncoder, min_points: int = FEATURE_MIN_POINTS
) -> FeatureTable:
    """Embed every distinct cloud with more than ``min_points`` points."""
    clouds = unique_clouds(triplets, min_points)
    return FeatureTable(
        tuple(t.instance_id for t in clouds),
        tuple(t.reference_time for t in clouds),
        tuple(t.label for t in clouds),
        tuple(t.domain.value for t in clouds),
        encode_clouds(encoder, [t.points for t in clouds]),
    )


def write_features_csv(table: FeatureTable, path: str, dim: int, config_hash: str = "") -> None:
    """CSV with ``instance_id, reference_time, label, domain, config_hash, f0..f{d-1}``; floats in repr form."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["instance_id", "reference_time", "label", "domain", "config_hash"] + [f"f{i}" for i in range(dim)])
        for i in range(len(table)):
            writer.writerow(
                [table.instance_ids[i], repr(table.reference_times[i]), table.labels[i], table.domains[i], config_hash]
                + [repr(float(v)) for v in table.vectors[i]]
            )


def retrieve(prompt: str, table: FeatureTable, provider: EmbeddingProvider, top: int = 5) -> List[Tuple[str, str, float]]:
    """
    Objects most similar to a text prompt.

    Returns:
        Up to ``top`` (instance_id, label, cosine) rows, best first, ties by id.
    """
    if top < 1:
        raise InvalidInputError(f"top must be >= 1, got {top}")
    if len(table) == 0:
        return []
    query = provider.embed_text(prompt)
    scores = table.vectors @ query
    ranked = sorted(range(len(table)), key=lambda i: (-scores[i], table.instance_ids[i], table.reference_times[i]))
    return [(table.instance_ids[i], table.labels[i], float(scores[i])) for i in ranked[:top]]
