"""Caption sidecar files.

Captions come from an external captioner as one UTF-8 text file per crop,
named ``{instance_id}__cam{camera}__{t_us}.txt`` where ``t_us`` is the crop
timestamp in integer microseconds. The simulator writes template captions in
the same layout.
"""

import os
import re
from typing import Dict, Optional

from config.constants import DEFAULT_MIN_VISIBILITY
from core.projection.camera_projection import CropKey, crops_for_instance
from environment.scene import Scene
from utils.logger import get_logger
from utils.rng import make_rng

logger = get_logger(__name__)

CAPTION_TEMPLATES = (
    "a point cloud of a {}",
    "a {} on the road",
    "a photo of a {} seen from the street",
    "a {} next to the ego vehicle",
)
_NAME = re.compile(r"^(?P<instance>.+)__cam(?P<camera>\d+)__(?P<t>-?\d+)\.txt$")


def display_name(category: str) -> str:
    return category.replace("_", " ")


def caption_filename(key: CropKey) -> str:
    instance_id, camera_index, t_us = key
    return f"{instance_id}__cam{camera_index}__{t_us}.txt"


def parse_caption_filename(name: str) -> Optional[CropKey]:
    match = _NAME.match(name)
    if match is None:
        return None
    return match.group("instance"), int(match.group("camera")), int(match.group("t"))


def template_caption(category: str, key: CropKey, seed: int = 0) -> str:
    rng = make_rng(seed, "caption", *key)
    template = CAPTION_TEMPLATES[int(rng.integers(len(CAPTION_TEMPLATES)))]
    return template.format(display_name(category))


def load_captions(directory: Optional[str]) -> Dict[CropKey, str]:
    """Read every caption file in ``directory``; a missing directory yields no captions."""
    captions: Dict[CropKey, str] = {}
    if directory is None or not os.path.isdir(directory):
        return captions
    ignored = 0
    for name in sorted(os.listdir(directory)):
        key = parse_caption_filename(name)
        if key is None:
            ignored += 1
            continue
        with open(os.path.join(directory, name), "r", encoding="utf-8") as handle:
            text = handle.read().rstrip("\n")
        if not text.strip():
            ignored += 1
            continue
        captions[key] = text
    if ignored:
        logger.warning("caption files ignored", extra={"fields": {"directory": directory, "count": ignored}})
    return captions


def write_template_captions(scene: Scene, directory: str, min_visibility: float = DEFAULT_MIN_VISIBILITY) -> int:
    """Write a template caption for every valid crop of every instance; returns the count."""
    os.makedirs(directory, exist_ok=True)
    written = 0
    for instance_id in scene.instance_ids:
        category = scene.category(instance_id)
        for crop in crops_for_instance(scene, instance_id, min_visibility):
            path = os.path.join(directory, caption_filename(crop.key))
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(template_caption(category, crop.key, scene.seed) + "\n")
            written += 1
    logger.info("captions written", extra={"fields": {"directory": directory, "count": written}})
    return written
