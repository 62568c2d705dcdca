"""Rigid-body geometry: quaternions, SE(3) transforms, box motion."""

from core.geometry import quaternion
from core.geometry.rigid_transform import RigidTransform, compose_chain
from core.geometry.motion import (
    BoxPose,
    ObjectMotion,
    estimate_velocity,
    interpolate_pose,
    warp_to_canonical,
)

__all__ = [
    "quaternion",
    "RigidTransform",
    "compose_chain",
    "BoxPose",
    "ObjectMotion",
    "estimate_velocity",
    "interpolate_pose",
    "warp_to_canonical",
]
