"""The point-image-text training atom."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from core.projection.camera_projection import CropCandidate
from utils.errors import InvalidInputError


class Domain(str, Enum):
    SYNTHETIC = "synthetic"
    OUTDOOR = "outdoor"


@dataclass(frozen=True, eq=False)
class Triplet:
    """
    One aligned (point cloud, image crop, caption) sample.

    Attributes:
        instance_id: Object the triplet was built from.
        reference_time: t0 of the fused cloud (0.0 for synthetic objects).
        points: ``(n, 3)`` float32 cloud; canonical frame for outdoor objects,
            unit-sphere normalized for synthetic ones.
        image_ref: Crop or rendered-view reference. A ``texture:<class>`` tag
            at the front names the class the pixels depict.
        caption: Non-empty UTF-8 text.
        domain: Exactly one of synthetic / outdoor.
        label: Class label, used only for evaluation.
        crop: The camera crop, for outdoor triplets.
        pixels: Optional ``(h, w, 3)`` uint8 crop buffer.
    """

    instance_id: str
    reference_time: float
    points: np.ndarray
    image_ref: str
    caption: str
    domain: Domain
    label: str
    crop: Optional[CropCandidate] = None
    pixels: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float32).reshape(-1, 3)
        if len(points) == 0:
            raise InvalidInputError(f"triplet {self.instance_id} has an empty point cloud")
        if not self.caption or not self.caption.strip():
            raise InvalidInputError(f"triplet {self.instance_id} has an empty caption")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "reference_time", float(self.reference_time))
        if self.pixels is not None:
            pixels = np.array(self.pixels, dtype=np.uint8)
            if pixels.ndim != 3:
                raise InvalidInputError("pixel buffers must be (h, w, channels)")
            object.__setattr__(self, "pixels", pixels)

    @property
    def point_count(self) -> int:
        return len(self.points)

    @property
    def image_class(self) -> Optional[str]:
        """Class named by the ``texture:`` tag of ``image_ref``, if any."""
        head = self.image_ref.split("|", 1)[0]
        return head[len("texture:"):] if head.startswith("texture:") else None

    def with_points(self, points: np.ndarray) -> "Triplet":
        return Triplet(
            self.instance_id, self.reference_time, points, self.image_ref, self.caption,
            self.domain, self.label, self.crop, self.pixels,
        )

    def same_as(self, other: "Triplet") -> bool:
        """Field-by-field equality; points and pixels compared bit-exactly."""
        if not isinstance(other, Triplet):
            return False
        same_pixels = (self.pixels is None and other.pixels is None) or (
            self.pixels is not None and other.pixels is not None
            and self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)
        )
        return (
            self.instance_id == other.instance_id
            and self.reference_time == other.reference_time
            and self.points.shape == other.points.shape
            and self.points.tobytes() == other.points.tobytes()
            and self.image_ref == other.image_ref
            and self.caption == other.caption
            and self.domain == other.domain
            and self.label == other.label
            and self.crop == other.crop
            and same_pixels
        )
