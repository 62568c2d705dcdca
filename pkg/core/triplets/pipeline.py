"""Outdoor triplet generation: fuse, filter, crop, caption."""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.constants import DEFAULT_DETECTION_RANGES
from config.settings import TripletConfig
from core.fusion.sweep_fusion import filter_min_points, fuse_scene
from core.projection.camera_projection import CropKey, crops_for_instance
from core.triplets.adapter import SceneAdapter
from core.triplets.assembler import assemble_triplets, crop_image_ref
from core.triplets.triplet import Triplet
from environment.crop_renderer import render_crop_stub
from environment.scene import Scene
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class PipelineStats:
    """Counts of what the pipeline kept and dropped."""

    candidates: int = 0
    out_of_range: int = 0
    sparse: int = 0
    clouds: int = 0
    triplets: int = 0
    per_class: Dict[str, int] = field(default_factory=dict)

    def merge(self, other: "PipelineStats") -> None:
        self.candidates += other.candidates
        self.out_of_range += other.out_of_range
        self.sparse += other.sparse
        self.clouds += other.clouds
        self.triplets += other.triplets
        for label, count in other.per_class.items():
            self.per_class[label] = self.per_class.get(label, 0) + count

    def as_dict(self) -> dict:
        return {
            "candidates": self.candidates,
            "out_of_range": self.out_of_range,
            "sparse": self.sparse,
            "clouds": self.clouds,
            "triplets": self.triplets,
            "per_class": dict(sorted(self.per_class.items())),
        }


def _within_range(scene: Scene, instance_id: str, t0: float, ranges: Mapping[str, float], label: str) -> bool:
    limit = ranges.get(label)
    if limit is None:
        return True
    center = scene.annotation_at(instance_id, t0).center
    ego = scene.ego_pose_at(t0).translation
    return float(np.linalg.norm(center[:2] - ego[:2])) <= limit


def generate_triplets(
    scene: Scene,
    captions: Mapping[CropKey, str],
    config: TripletConfig,
    threads: int = 1,
) -> Tuple[List[Triplet], PipelineStats]:
    """
    Build outdoor triplets for every annotated keyframe of a scene.

    Args:
        scene: Source scene.
        captions: Caption per crop key.
        config: Fusion, filtering and crop settings.
        threads: Worker-pool size for fusion; results do not depend on it.

    Returns:
        (triplets ordered by instance, t0, crop time, camera; statistics).
    """
    stats = PipelineStats()
    ranges = dict(config.detection_ranges or DEFAULT_DETECTION_RANGES) if config.range_filter else {}

    jobs = []
    for instance_id in scene.instance_ids:
        label = config.class_map.get(scene.category(instance_id), scene.category(instance_id))
        for t0 in scene.annotated_times(instance_id):
            stats.candidates += 1
            if ranges and not _within_range(scene, instance_id, t0, ranges, label):
                stats.out_of_range += 1
                continue
            jobs.append((instance_id, t0))

    clouds = fuse_scene(scene, jobs, config.sweeps, config.crop_margin, config.compensate_motion, threads)
    triplets: List[Triplet] = []
    for cloud in clouds:
        if not filter_min_points(cloud, config.min_points):
            stats.sparse += 1
            continue
        stats.clouds += 1
        label = config.class_map.get(cloud.category, cloud.category)
        crops = crops_for_instance(scene, cloud.instance_id, config.visibility, cloud.reference_time, config.max_offset)
        pixel_source = None
        if config.store_pixels:
            def pixel_source(crop, _scene=scene):
                return render_crop_stub(_scene, crop.instance_id, crop.camera_index, crop.timestamp, config.visibility)
        built = assemble_triplets(cloud, crops, captions, label, pixel_source)
        stats.per_class[label] = stats.per_class.get(label, 0) + len(built)
        triplets.extend(built)
    stats.triplets = len(triplets)
    logger.info("triplets generated", extra={"fields": stats.as_dict()})
    return triplets, stats


def namespace_triplets(triplets: Sequence[Triplet], token: str) -> List[Triplet]:
    """
    Prefix instance ids (and the crop references built from them) with ``<token>/``.

    Simulated and logged scenes number their instances per scene, so ids only
    become unique across a dataset once the scene is part of them.
    """
    renamed: List[Triplet] = []
    for triplet in triplets:
        crop = triplet.crop
        image_ref = triplet.image_ref
        if crop is not None:
            crop = replace(crop, instance_id=f"{token}/{crop.instance_id}")
            image_ref = crop_image_ref(triplet.image_class or triplet.label, crop)
        renamed.append(replace(triplet, instance_id=f"{token}/{triplet.instance_id}", crop=crop, image_ref=image_ref))
    return renamed


def generate_from_adapter(
    adapter: SceneAdapter, config: TripletConfig, threads: int = 1
) -> Tuple[List[Triplet], PipelineStats]:
    """
    Run ``generate_triplets`` over every scene of an adapter, in adapter order.

    Instance ids come out as ``<scene token>/<instance id>``; a token seen
    before gets ``~<position>`` appended so two scenes never share an id.
    """
    triplets: List[Triplet] = []
    totals = PipelineStats()
    used = set()
    for position, (scene_id, scene, captions) in enumerate(adapter):
        token = adapter.scene_token(scene_id)
        if token in used:
            token = f"{token}~{position}"
        used.add(token)
        built, stats = generate_triplets(scene, captions, config, threads)
        logger.info("scene processed", extra={"fields": {"scene": scene_id, "token": token, "triplets": len(built)}})
        triplets.extend(namespace_triplets(built, token))
        totals.merge(stats)
    return triplets, totals
