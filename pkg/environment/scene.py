"""Scene containers: sweeps, cameras and annotated boxes.

A ``Scene`` is the raw input of the triplet pipeline. It holds time-indexed
LiDAR sweeps in their sensor frames, the ego pose T^g_e and sensor mount
T^e_s of each sweep, calibrated cameras, and per-instance annotated boxes in
the global frame at keyframes spaced ``annotation_interval`` apart.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from config.constants import TIMESTAMP_TOLERANCE
from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from utils.errors import InvalidInputError, SceneError


def time_key(t: float) -> int:
    """Integer microseconds, the key used for timestamps in files and maps."""
    return int(round(float(t) * 1e6))


@dataclass(frozen=True, eq=False)
class Sweep:
    """One LiDAR sweep; ``points`` are ``(n, 3)`` in the sensor frame."""

    timestamp: float
    points: np.ndarray
    intensity: np.ndarray
    ego_pose: RigidTransform
    sensor_mount: RigidTransform

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
        if len(intensity) != len(points):
            raise InvalidInputError("sweep intensity and point counts differ")
        points.setflags(write=False)
        intensity.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "timestamp", float(self.timestamp))

    @property
    def sensor_to_global(self) -> RigidTransform:
        """T^g_s = T^g_e · T^e_s."""
        return self.ego_pose.compose(self.sensor_mount)


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera; ``extrinsic`` maps camera-frame points into the ego frame.

    The camera frame has z forward, x right and y down.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: RigidTransform

    def __post_init__(self):
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise InvalidInputError("camera focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError("camera image size must be positive")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
            "extrinsic": self.extrinsic.to_dict(),
        }

    @classmethod
    def from_dict(cls, values: Mapping) -> "CameraModel":
        return cls(
            float(values["fx"]), float(values["fy"]), float(values["cx"]), float(values["cy"]),
            int(values["width"]), int(values["height"]),
            RigidTransform.from_dict(values["extrinsic"]),
        )


@dataclass(frozen=True, eq=False)
class Scene:
    """
    Time-synchronized sweeps, cameras and annotations.

    Attributes:
        sweeps: Sweeps with strictly increasing timestamps (seconds from scene start).
        cameras: Calibrated cameras shared by every timestamp.
        annotations: instance id -> boxes (global frame) sorted by timestamp.
        categories: instance id -> raw class name.
        visibility: instance id -> {time_key: visible fraction in [0, 1]}.
        annotation_interval: Keyframe spacing M in seconds.
        seed: Master seed the scene was generated with.
    """

    sweeps: Sequence[Sweep]
    cameras: Sequence[CameraModel]
    annotations: Mapping[str, Sequence[BoxPose]]
    categories: Mapping[str, str]
    visibility: Mapping[str, Mapping[int, float]]
    annotation_interval: float
    seed: int = 0
    _index: Dict[int, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        sweeps = tuple(self.sweeps)
        stamps = [s.timestamp for s in sweeps]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise InvalidInputError("sweep timestamps must be strictly increasing")
        known = {time_key(t) for t in stamps}
        annotations = {}
        for instance_id, boxes in self.annotations.items():
            ordered = tuple(sorted(boxes, key=lambda box: box.timestamp))
            for box in ordered:
                if time_key(box.timestamp) not in known:
                    raise InvalidInputError(
                        f"annotation of {instance_id} at t={box.timestamp!r} matches no sweep"
                    )
            if instance_id not in self.categories:
                raise InvalidInputError(f"instance {instance_id} has no category")
            annotations[instance_id] = ordered
        if self.annotation_interval <= 0.0:
            raise InvalidInputError("annotation interval must be positive")
        object.__setattr__(self, "sweeps", sweeps)
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(self, "annotations", annotations)
        object.__setattr__(self, "categories", dict(self.categories))
        object.__setattr__(self, "visibility", {k: dict(v) for k, v in self.visibility.items()})
        object.__setattr__(self, "_index", {time_key(t): i for i, t in enumerate(stamps)})

    @property
    def timestamps(self) -> List[float]:
        return [s.timestamp for s in self.sweeps]

    @property
    def instance_ids(self) -> List[str]:
        return sorted(self.annotations)

    def sweep_index(self, t: float) -> int:
        index = self._index.get(time_key(t))
        if index is None or abs(self.sweeps[index].timestamp - t) > max(TIMESTAMP_TOLERANCE, 1e-6):
            raise SceneError(f"no sweep at t={t!r}")
        return index

    def sweep_at(self, t: float) -> Sweep:
        return self.sweeps[self.sweep_index(t)]

    def ego_pose_at(self, t: float) -> RigidTransform:
        return self.sweep_at(t).ego_pose

    def category(self, instance_id: str) -> str:
        try:
            return self.categories[instance_id]
        except KeyError:
            raise SceneError(f"unknown instance {instance_id!r}") from None

    def boxes(self, instance_id: str) -> Sequence[BoxPose]:
        try:
            return self.annotations[instance_id]
        except KeyError:
            raise SceneError(f"unknown instance {instance_id!r}") from None

    def annotation_at(self, instance_id: str, t: float) -> BoxPose:
        key = time_key(t)
        for box in self.boxes(instance_id):
            if time_key(box.timestamp) == key:
                return box
        raise SceneError(f"instance {instance_id!r} is not annotated at t={t!r}")

    def previous_annotation(self, instance_id: str, t: float) -> Optional[BoxPose]:
        """Latest annotated box strictly before ``t``, if any."""
        key = time_key(t)
        earlier = [box for box in self.boxes(instance_id) if time_key(box.timestamp) < key]
        return earlier[-1] if earlier else None

    def enclosing_annotations(self, instance_id: str, t: float):
        """Keyframe pair (prev, cur) with prev.t < t <= cur.t, or (None, first) before it."""
        key = time_key(t)
        boxes = self.boxes(instance_id)
        for index, box in enumerate(boxes):
            if time_key(box.timestamp) >= key:
                return (boxes[index - 1] if index > 0 else None), box
        raise SceneError(f"instance {instance_id!r} has no annotation at or after t={t!r}")

    def visibility_at(self, instance_id: str, t: float) -> float:
        return float(self.visibility.get(instance_id, {}).get(time_key(t), 0.0))

    def annotated_times(self, instance_id: str) -> List[float]:
        return [box.timestamp for box in self.boxes(instance_id)]
