"""Pair fused clouds with their captioned crops."""

from typing import Callable, List, Mapping, Optional, Sequence

import numpy as np

from core.fusion.sweep_fusion import FusedObjectCloud
from core.projection.camera_projection import CropCandidate, CropKey
from core.triplets.triplet import Domain, Triplet
from utils.logger import get_logger

logger = get_logger(__name__)

PixelSource = Callable[[CropCandidate], np.ndarray]


def crop_image_ref(category: str, crop: CropCandidate) -> str:
    instance_id, camera_index, t_us = crop.key
    return f"texture:{category}|crop:{instance_id}:cam{camera_index}:{t_us}"


def assemble_triplets(
    cloud: FusedObjectCloud,
    crops: Sequence[CropCandidate],
    captions: Mapping[CropKey, str],
    label: Optional[str] = None,
    pixel_source: Optional[PixelSource] = None,
) -> List[Triplet]:
    """
    One outdoor triplet per crop that has a caption.

    The same t0 cloud pairs with every captioned crop of the instance; crops
    without a caption are skipped and counted in the log.
    """
    triplets: List[Triplet] = []
    skipped = 0
    for crop in crops:
        caption = captions.get(crop.key)
        if caption is None:
            skipped += 1
            continue
        triplets.append(Triplet(
            instance_id=cloud.instance_id,
            reference_time=cloud.reference_time,
            points=cloud.points,
            image_ref=crop_image_ref(cloud.category, crop),
            caption=caption,
            domain=Domain.OUTDOOR,
            label=label if label is not None else cloud.category,
            crop=crop,
            pixels=pixel_source(crop) if pixel_source is not None else None,
        ))
    if skipped:
        logger.warning(
            "crops without caption skipped",
            extra={"fields": {"instance": cloud.instance_id, "t0": cloud.reference_time, "count": skipped}},
        )
    return triplets
