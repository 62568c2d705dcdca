"""Pinhole projection of annotated boxes and crop selection.

A camera view of an instance is valid when all eight box corners lie in front
of the camera and project strictly inside the image, and the instance's
visibility score reaches the threshold. The crop is the tight axis-aligned
bound of the projected corners.
"""

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.constants import DEFAULT_MIN_VISIBILITY, TIMESTAMP_TOLERANCE
from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from environment.scene import CameraModel, Scene, time_key
from utils.errors import InvalidInputError
from utils.logger import get_logger

logger = get_logger(__name__)

CropKey = Tuple[str, int, int]


@dataclass(frozen=True)
class CropCandidate:
    """A valid camera view of one instance at one timestamp; AABB in pixels."""

    instance_id: str
    camera_index: int
    timestamp: float
    u_min: float
    v_min: float
    u_max: float
    v_max: float
    visibility: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise InvalidInputError("crop AABB must have positive width and height")
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidInputError("visibility must lie in [0, 1]")

    @property
    def key(self) -> CropKey:
        """(instance id, camera index, timestamp in microseconds)."""
        return self.instance_id, self.camera_index, time_key(self.timestamp)

    def pixel_box(self, width: int, height: int) -> Tuple[int, int, int, int]:
        """Integer (u0, v0, u1, v1), floored/ceiled outward and clamped to the image."""
        u0 = max(0, int(math.floor(self.u_min)))
        v0 = max(0, int(math.floor(self.v_min)))
        u1 = min(width, int(math.ceil(self.u_max)))
        v1 = min(height, int(math.ceil(self.v_max)))
        if u1 <= u0:
            u1 = min(width, u0 + 1)
        if v1 <= v0:
            v1 = min(height, v0 + 1)
        return u0, v0, u1, v1

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "camera_index": self.camera_index,
            "timestamp": self.timestamp,
            "aabb": [self.u_min, self.v_min, self.u_max, self.v_max],
            "visibility": self.visibility,
        }

    @classmethod
    def from_dict(cls, values: Mapping) -> "CropCandidate":
        u_min, v_min, u_max, v_max = (float(x) for x in values["aabb"])
        return cls(
            str(values["instance_id"]), int(values["camera_index"]), float(values["timestamp"]),
            u_min, v_min, u_max, v_max, float(values["visibility"]),
        )


def global_to_camera(camera: CameraModel, ego_pose: RigidTransform) -> RigidTransform:
    """T^cam_g = (T^g_e · T^e_cam)^-1."""
    return ego_pose.compose(camera.extrinsic).inverse()


def project_points(points_cam: np.ndarray, camera: CameraModel) -> np.ndarray:
    """(X, Y, Z) -> (fx X / Z + cx, fy Y / Z + cy); caller guarantees Z > 0."""
    pts = np.asarray(points_cam, dtype=np.float64).reshape(-1, 3)
    u = camera.fx * pts[:, 0] / pts[:, 2] + camera.cx
    v = camera.fy * pts[:, 1] / pts[:, 2] + camera.cy
    return np.stack([u, v], axis=1)


def project_corners(box: BoxPose, camera: CameraModel, ego_pose: RigidTransform) -> Optional[np.ndarray]:
    """
    Project the 8 corners of a global-frame box into a camera.

    Args:
        box: Annotated box in the global frame.
        camera: Calibrated camera.
        ego_pose: T^g_e at the box timestamp.

    Returns:
        ``(8, 2)`` pixel coordinates, or None when any corner has Z <= 0.
    """
    corners_cam = global_to_camera(camera, ego_pose).apply(box.corners())
    if np.any(corners_cam[:, 2] <= 0.0):
        return None
    return project_points(corners_cam, camera)


def _inside_image(pixels: np.ndarray, camera: CameraModel) -> bool:
    u, v = pixels[:, 0], pixels[:, 1]
    return bool(np.all((u >= 0.0) & (u < camera.width) & (v >= 0.0) & (v < camera.height)))


def select_valid_views(
    box: BoxPose,
    cameras: Sequence[CameraModel],
    visibility: float,
    min_visibility: float,
    ego_pose: RigidTransform,
    instance_id: str = "",
    camera_indices: Optional[Sequence[int]] = None,
) -> List[CropCandidate]:
    """
    Cameras in which the box is fully in frame and visible enough.

    Args:
        box: Annotated box in the global frame.
        cameras: Candidate cameras.
        visibility: Visibility score of the instance at ``box.timestamp``.
        min_visibility: Threshold; views below it are rejected.
        ego_pose: T^g_e at ``box.timestamp``.
        instance_id: Identifier recorded on each candidate.
        camera_indices: Index of each camera in the scene (defaults to position).

    Returns:
        One CropCandidate per valid camera, in camera order; possibly empty.
    """
    if visibility < min_visibility:
        return []
    indices = list(camera_indices) if camera_indices is not None else list(range(len(cameras)))
    candidates = []
    for index, camera in zip(indices, cameras):
        pixels = project_corners(box, camera, ego_pose)
        if pixels is None or not _inside_image(pixels, camera):
            continue
        u_min, v_min = pixels.min(axis=0)
        u_max, v_max = pixels.max(axis=0)
        candidates.append(CropCandidate(
            instance_id, index, box.timestamp,
            float(u_min), float(v_min), float(u_max), float(v_max), float(visibility),
        ))
    return candidates


def crops_for_instance(
    scene: Scene,
    instance_id: str,
    min_visibility: float = DEFAULT_MIN_VISIBILITY,
    t0: Optional[float] = None,
    max_offset: Optional[float] = None,
) -> List[CropCandidate]:
    """
    Valid views of an instance over every annotated timestamp.

    Args:
        scene: Source scene.
        instance_id: Instance to crop.
        min_visibility: Visibility threshold.
        t0: Reference time of the point cloud the crops will pair with.
        max_offset: When given with ``t0``, drop crops with ``|t - t0| > max_offset``.

    Returns:
        Candidates ordered by (timestamp, camera index).
    """
    candidates: List[CropCandidate] = []
    skipped = 0
    for box in scene.boxes(instance_id):
        if t0 is not None and max_offset is not None and abs(box.timestamp - t0) > max_offset + TIMESTAMP_TOLERANCE:
            skipped += 1
            continue
        candidates.extend(select_valid_views(
            box,
            scene.cameras,
            scene.visibility_at(instance_id, box.timestamp),
            min_visibility,
            scene.ego_pose_at(box.timestamp),
            instance_id,
        ))
    if skipped:
        logger.debug("crops beyond max offset skipped", extra={"fields": {"instance": instance_id, "count": skipped}})
    return candidates
