"""Annotated box poses and per-object motion compensation.

A ``BoxPose`` is an oriented 3D box at one timestamp. Between two annotated
keyframes ``t0 - M`` and ``t0`` the centre is interpolated linearly and the
orientation with slerp; the constant velocity over that interval drives the
forward warp of every cropped point into the object's canonical frame at t0.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config.constants import TIMESTAMP_TOLERANCE
from core.geometry import quaternion as quat
from core.geometry.rigid_transform import RigidTransform
from utils.errors import InvalidInputError

# Corner sign pattern in the box frame; (l, w, h) map to (x, y, z).
_CORNER_SIGNS = np.array([
    [1, 1, 1], [1, -1, 1], [-1, -1, 1], [-1, 1, 1],
    [1, 1, -1], [1, -1, -1], [-1, -1, -1], [-1, 1, -1],
], dtype=np.float64)


def _vector3(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be a finite 3-vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BoxPose:
    """Oriented box: centre (m), orientation (unit quaternion), size l,w,h (m), timestamp (s)."""

    center: np.ndarray
    orientation: np.ndarray
    size: np.ndarray
    timestamp: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vector3(self.center, "box center"))
        size = _vector3(self.size, "box size")
        if np.any(size <= 0.0):
            raise InvalidInputError(f"box size components must be positive, got {size.tolist()}")
        object.__setattr__(self, "size", size)
        orientation = quat.require_unit(self.orientation, "box orientation")
        orientation.setflags(write=False)
        object.__setattr__(self, "orientation", orientation)
        object.__setattr__(self, "timestamp", float(self.timestamp))

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat.to_matrix(self.orientation)

    @property
    def transform(self) -> RigidTransform:
        """Box frame -> parent frame."""
        return RigidTransform(self.orientation, self.center)

    def corners(self) -> np.ndarray:
        """The 8 corners, ``(8, 3)``, in the parent frame."""
        local = _CORNER_SIGNS * (0.5 * self.size)
        return local @ self.rotation_matrix.T + self.center

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """Express parent-frame points in the box frame."""
        return (np.asarray(points, dtype=np.float64) - self.center) @ self.rotation_matrix

    def contains(self, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the box inflated by ``margin`` per side."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if margin < 0.0:
            raise InvalidInputError("crop margin must be non-negative")
        half = 0.5 * self.size + margin
        return np.all(np.abs(self.to_local(pts)) <= half, axis=1)

    def transformed(self, transform: RigidTransform) -> "BoxPose":
        """Re-express this box in another frame (``transform`` maps parent -> new)."""
        return BoxPose(
            center=transform.apply(self.center),
            orientation=quat.normalize(quat.multiply(transform.rotation, self.orientation)),
            size=self.size,
            timestamp=self.timestamp,
        )

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "orientation": self.orientation.tolist(),
            "size": self.size.tolist(),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, values: dict) -> "BoxPose":
        return cls(values["center"], values["orientation"], values["size"], values["timestamp"])


@dataclass(frozen=True, eq=False)
class ObjectMotion:
    """Constant linear velocity (m/s) and the reference pose at t0."""

    velocity: np.ndarray
    reference: BoxPose

    def __post_init__(self):
        object.__setattr__(self, "velocity", _vector3(self.velocity, "velocity"))

    @property
    def rotation(self) -> np.ndarray:
        """R(t0) as an orthonormal matrix."""
        return self.reference.rotation_matrix

    @classmethod
    def from_poses(cls, prev: BoxPose, cur: BoxPose) -> "ObjectMotion":
        return cls(estimate_velocity(prev, cur), cur)

    @classmethod
    def static(cls, cur: BoxPose) -> "ObjectMotion":
        """No previous box: zero velocity and the t0 orientation."""
        return cls(np.zeros(3), cur)

    def transformed(self, transform: RigidTransform) -> "ObjectMotion":
        return ObjectMotion(transform.apply_rotation(self.velocity), self.reference.transformed(transform))


def interpolate_pose(prev: BoxPose, cur: BoxPose, t: float) -> BoxPose:
    """Box pose at ``t`` between keyframes ``prev`` (t0 - M) and ``cur`` (t0).

    The centre follows ``c(t) = c(t0) + ((t - t0) / M) (c(t0) - c(t0 - M))`` and
    the orientation ``slerp(q(t0), q(t0 - M), (t0 - t) / M)``. Size comes from
    ``cur``.

    Raises:
        InvalidInputError: ``M <= 0`` or ``t`` outside ``[t0 - M, t0]``.
    """
    t0 = cur.timestamp
    interval = t0 - prev.timestamp
    if interval <= 0.0:
        raise InvalidInputError(f"annotation interval must be positive, got {interval!r}")
    if t < prev.timestamp - TIMESTAMP_TOLERANCE or t > t0 + TIMESTAMP_TOLERANCE:
        raise InvalidInputError(f"t={t!r} lies outside [{prev.timestamp!r}, {t0!r}]")

    if abs(t - t0) <= TIMESTAMP_TOLERANCE:
        return BoxPose(cur.center, cur.orientation, cur.size, t0)
    if abs(t - prev.timestamp) <= TIMESTAMP_TOLERANCE:
        return BoxPose(prev.center, prev.orientation, cur.size, prev.timestamp)

    center = cur.center + ((t - t0) / interval) * (cur.center - prev.center)
    alpha = min(max((t0 - t) / interval, 0.0), 1.0)
    orientation = quat.slerp(cur.orientation, prev.orientation, alpha)
    return BoxPose(center, orientation, cur.size, t)


def estimate_velocity(prev: BoxPose, cur: BoxPose) -> np.ndarray:
    """Constant linear velocity ``(c(t0) - c(t0 - M)) / M`` in m/s."""
    interval = cur.timestamp - prev.timestamp
    if interval <= 0.0:
        raise InvalidInputError(f"annotation interval must be positive, got {interval!r}")
    return (cur.center - prev.center) / interval


def warp_to_canonical(points: np.ndarray, motion: ObjectMotion, t: float, t0: float) -> np.ndarray:
    """Forward-warp sweep points into the canonical object frame at t0.

    Each point maps to ``R(t0)^T [p + (t0 - t) v - c(t0)]``. Points must
    already be expressed in the t0 sensor frame, as must ``motion``.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if t > t0 + TIMESTAMP_TOLERANCE:
        raise InvalidInputError(f"sweep time {t!r} is after the reference time {t0!r}")
    shifted = pts + (t0 - t) * motion.velocity - motion.reference.center
    # Row-vector form of R^T x.
    return shifted @ motion.rotation
