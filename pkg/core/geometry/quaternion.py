"""Unit-quaternion algebra.

Quaternions are numpy arrays ``[w, x, y, z]`` (Hamilton convention). The
product ``multiply(a, b)`` rotates by ``b`` first, then ``a``, matching
``to_matrix(a) @ to_matrix(b)``.
"""

import math
from typing import Sequence

import numpy as np

from config.constants import SLERP_SMALL_ANGLE, UNIT_QUATERNION_TOLERANCE
from utils.errors import InvalidInputError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def as_quaternion(q: Sequence[float]) -> np.ndarray:
    arr = np.asarray(q, dtype=np.float64)
    if arr.shape != (4,):
        raise InvalidInputError(f"quaternion must have 4 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("quaternion has non-finite components")
    return arr


def require_unit(q: Sequence[float], name: str = "quaternion") -> np.ndarray:
    """Validate that ``q`` is unit-norm and return it renormalized."""
    arr = as_quaternion(q)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > UNIT_QUATERNION_TOLERANCE:
        raise InvalidInputError(f"{name} is not unit-norm (|q| = {norm!r})")
    if abs(norm - 1.0) <= 4.0 * np.finfo(np.float64).eps:
        # Already unit at machine precision; leave the bits alone.
        return arr.copy()
    return arr / norm


def normalize(q: Sequence[float]) -> np.ndarray:
    arr = as_quaternion(q)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise InvalidInputError("cannot normalize a zero quaternion")
    return arr / norm


def conjugate(q: Sequence[float]) -> np.ndarray:
    w, x, y, z = as_quaternion(q)
    return np.array([w, -x, -y, -z])


def multiply(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    """Hamilton product ``a ⊗ b``."""
    aw, ax, ay, az = as_quaternion(a)
    bw, bx, by, bz = as_quaternion(b)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def from_axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    axis_arr = np.asarray(axis, dtype=np.float64)
    norm = float(np.linalg.norm(axis_arr))
    if norm == 0.0:
        raise InvalidInputError("rotation axis must be non-zero")
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis_arr / norm))


def from_yaw(yaw: float) -> np.ndarray:
    """Rotation about +z by ``yaw`` radians."""
    return np.array([math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)])


def to_matrix(q: Sequence[float]) -> np.ndarray:
    w, x, y, z = normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_matrix(matrix: np.ndarray) -> np.ndarray:
    """Convert a rotation matrix to a quaternion with ``w >= 0``."""
    m = np.asarray(matrix, dtype=np.float64)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = 2.0 * math.sqrt(trace + 1.0)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    out = normalize(q)
    return -out if out[0] < 0.0 else out


def angle_between(a: Sequence[float], b: Sequence[float]) -> float:
    """Rotation angle in radians taking ``a`` to ``b`` (sign-invariant).

    Uses atan2 on the relative quaternion, which stays accurate for tiny
    angles where ``acos`` loses half the mantissa.
    """
    rel = multiply(conjugate(a), b)
    vec = float(np.linalg.norm(rel[1:]))
    return 2.0 * math.atan2(vec, abs(float(rel[0])))


def slerp(q1: Sequence[float], q2: Sequence[float], alpha: float) -> np.ndarray:
    """Spherical linear interpolation along the shortest geodesic.

    Args:
        q1: Start orientation (unit quaternion).
        q2: End orientation (unit quaternion).
        alpha: Interpolation parameter in [0, 1].

    Returns:
        Unit quaternion; ``q1`` at ``alpha=0`` and ``q2`` at ``alpha=1``.
    """
    a = require_unit(q1, "q1")
    b = require_unit(q2, "q2")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"slerp alpha must lie in [0, 1], got {alpha!r}")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b

    dot = float(np.dot(a, b))
    if dot < 0.0:
        # q and -q are the same rotation; take the short way round.
        b = -b
        dot = -dot
    # Half-chord form of acos(dot), accurate near dot = 1.
    theta = 2.0 * math.atan2(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))
    if theta < SLERP_SMALL_ANGLE:
        out = (1.0 - alpha) * a + alpha * b
        return out / np.linalg.norm(out)

    sin_theta = math.sin(theta)
    out = (math.sin((1.0 - alpha) * theta) / sin_theta) * a + (math.sin(alpha * theta) / sin_theta) * b
    return out / np.linalg.norm(out)
