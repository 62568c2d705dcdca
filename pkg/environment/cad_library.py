"""Synthetic-domain triplets from clean, complete object models.

Each object is a template of a taxonomy class with jittered size, sampled over
its full surface and normalized into the unit sphere, as CAD benchmark clouds
are. Models are stored y-up with the front along +z, the convention of mesh
libraries, unless the config asks for the z-up driving frame. The image
reference names one of a fixed set of rendered views.
"""

from typing import List

import numpy as np

from config.constants import CAD_RENDER_VIEWS
from config.settings import CadConfig
from core.geometry import quaternion as quat
from core.triplets.captions import display_name
from core.triplets.triplet import Domain, Triplet
from environment.templates import make_class_template
from utils.errors import InvalidInputError
from utils.logger import get_logger
from utils.rng import make_rng

logger = get_logger(__name__)

CAD_CAPTION_TEMPLATES = (
    "a 3D model of a {}",
    "a rendering of a {}",
    "a clean CAD model of a {}",
    "a {} rendered in white",
)


def normalize_to_unit_sphere(points: np.ndarray) -> np.ndarray:
    """Centre on the bounding-box centre and scale the farthest point to radius 1."""
    pts = np.asarray(points, dtype=np.float64)
    centred = pts - 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    radius = float(np.max(np.linalg.norm(centred, axis=1)))
    return centred / radius if radius > 0.0 else centred


def to_authoring_frame(points: np.ndarray, up_axis: str) -> np.ndarray:
    """
    Re-express object-frame points (x forward, z up) in a model authoring frame.

    ``"y"`` is the y-up convention of mesh libraries: forward goes to +z, left
    to +x and up to +y, a proper rotation. ``"z"`` keeps the driving frame.
    """
    pts = np.asarray(points, dtype=np.float64)
    if up_axis == "z":
        return pts
    if up_axis == "y":
        return pts[:, [1, 2, 0]]
    raise InvalidInputError(f"unknown up axis {up_axis!r}")


def generate_synthetic_triplets(config: CadConfig) -> List[Triplet]:
    """
    Build ``objects_per_class`` models per class, ``views_per_object`` triplets each.

    Returns:
        Triplets ordered by class (config order) then object index; identical
        for identical configs.
    """
    triplets: List[Triplet] = []
    for category in config.classes:
        for index in range(config.objects_per_class):
            instance_id = f"cad_{category}_{index:04d}"
            rng = make_rng(config.seed, "cad", category, index)
            scale = 1.0 + rng.uniform(-config.size_jitter, config.size_jitter)
            template = make_class_template(category, scale)
            points, _ = template.sample_surface(config.points, rng)
            if config.random_yaw:
                points = points @ quat.to_matrix(quat.from_yaw(rng.uniform(-np.pi, np.pi))).T
            points = to_authoring_frame(points, config.up_axis)
            points = normalize_to_unit_sphere(points)
            views = rng.choice(CAD_RENDER_VIEWS, size=min(config.views_per_object, CAD_RENDER_VIEWS), replace=False)
            for view in sorted(int(v) for v in views):
                template_index = int(rng.integers(len(CAD_CAPTION_TEMPLATES)))
                triplets.append(Triplet(
                    instance_id=instance_id,
                    reference_time=0.0,
                    points=points,
                    image_ref=f"texture:{category}|render:{instance_id}:view{view:02d}",
                    caption=CAD_CAPTION_TEMPLATES[template_index].format(display_name(category)),
                    domain=Domain.SYNTHETIC,
                    label=category,
                ))
    logger.info(
        "synthetic library generated",
        extra={"fields": {"triplets": len(triplets), "classes": len(config.classes), "seed": config.seed}},
    )
    return triplets
