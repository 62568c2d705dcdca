"""Rigid-body transforms in SE(3).

``RigidTransform`` maps points from a source frame ``b`` into a target frame
``a`` (the ``T^a_b`` of a pose chain): ``p_a = R p_b + t``.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.geometry import quaternion as quat
from utils.errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation (unit quaternion w,x,y,z) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = quat.require_unit(self.rotation, "transform rotation")
        translation = np.asarray(self.translation, dtype=np.float64)
        if translation.shape != (3,) or not np.all(np.isfinite(translation)):
            raise InvalidInputError("transform translation must be a finite 3-vector")
        rotation.setflags(write=False)
        translation = translation.copy()
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(quat.IDENTITY.copy(), np.zeros(3))

    @classmethod
    def from_translation(cls, x: float, y: float, z: float) -> "RigidTransform":
        return cls(quat.IDENTITY.copy(), np.array([x, y, z], dtype=np.float64))

    @classmethod
    def from_yaw(cls, yaw: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(quat.from_yaw(yaw), np.asarray(translation, dtype=np.float64))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidInputError(f"expected a 4x4 matrix, got shape {m.shape}")
        return cls(quat.from_matrix(m[:3, :3]), m[:3, 3])

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat.to_matrix(self.rotation)

    def as_matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation_matrix
        out[:3, 3] = self.translation
        return out

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return ``self · other`` (apply ``other`` first)."""
        rotation = quat.normalize(quat.multiply(self.rotation, other.rotation))
        translation = self.rotation_matrix @ other.translation + self.translation
        return RigidTransform(rotation, translation)

    def inverse(self) -> "RigidTransform":
        inv_rotation = quat.conjugate(self.rotation)
        return RigidTransform(inv_rotation, -(quat.to_matrix(inv_rotation) @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an ``(n, 3)`` array (or a single 3-vector)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation_matrix.T + self.translation

    def apply_rotation(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation_matrix.T

    def allclose(self, other: "RigidTransform", atol: float = 1e-9) -> bool:
        """Component-wise comparison, treating q and -q as equal."""
        same_t = np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        same_q = np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol) or np.allclose(
            self.rotation, -other.rotation, rtol=0.0, atol=atol
        )
        return bool(same_t and same_q)

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, values: dict) -> "RigidTransform":
        return cls(np.asarray(values["rotation"]), np.asarray(values["translation"]))

    def __repr__(self) -> str:
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def compose_chain(transforms: Sequence[RigidTransform]) -> RigidTransform:
    """Collapse a pose chain ``T1 · T2 · ... · Tn`` into one transform.

    Applying the result to a point equals applying ``Tn`` first and ``T1``
    last, as in ``T^{s0}_{e0} T^{e0}_g T^g_{et} T^{et}_{st} p``.

    Raises:
        InvalidInputError: empty chain or a non-unit rotation.
    """
    if len(transforms) == 0:
        raise InvalidInputError("compose_chain needs at least one transform")
    result = None
    for index, transform in enumerate(transforms):
        if not isinstance(transform, RigidTransform):
            raise InvalidInputError(f"chain element {index} is not a RigidTransform")
        quat.require_unit(transform.rotation, f"chain element {index} rotation")
        result = transform if result is None else result.compose(transform)
    return result
