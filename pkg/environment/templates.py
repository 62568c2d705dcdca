"""Parametric object templates for the scene simulator.

A template is a closed surface described in its own object frame: centred on
the origin of its bounding box, x along the length, y along the width, z up.
Templates give exact signed distances, which the ground-truth checks use to
measure how far fused points lie from the true surface.
"""

import math
from abc import ABC, abstractmethod
from typing import Dict, Tuple

import numpy as np

from utils.errors import InvalidInputError

# Axis-aligned face normals of a box: (+x, -x, +y, -y, +z, -z).
_FACE_NORMALS = np.array([
    [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
], dtype=np.float64)


class ShapeTemplate(ABC):
    """
    Abstract base class for simulated object shapes.

    Concrete templates sample their outer surface and report signed distances
    (negative inside). ``extent`` is the (l, w, h) of the tight bounding box,
    which is also the annotated box size.
    """

    kind: str = "abstract"

    @property
    @abstractmethod
    def extent(self) -> np.ndarray:
        """Bounding-box size (l, w, h) in meters."""

    @abstractmethod
    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Signed distance of ``(n, 3)`` object-frame points to the surface."""

    @abstractmethod
    def sample_surface(self, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """
        Draw ``count`` points uniformly by area on the outer surface.

        Args:
            count: Number of samples.
            rng: Generator driving the draw.

        Returns:
            (points, normals): two ``(count, 3)`` arrays; normals point outward.
        """

    @abstractmethod
    def to_dict(self) -> Dict[str, object]:
        """Serializable parameters, inverse of ``template_from_dict``."""

    def surface_spread(self, points: np.ndarray) -> float:
        """Mean absolute distance of object-frame points to the surface."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            return 0.0
        return float(np.mean(np.abs(self.signed_distance(pts))))


def _box_sdf(points: np.ndarray, half: np.ndarray, offset: np.ndarray) -> np.ndarray:
    q = np.abs(points - offset) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(np.max(q, axis=1), 0.0)
    return outside + inside


def _sample_box_surface(
    count: int, rng: np.random.Generator, half: np.ndarray, offset: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    l, w, h = 2.0 * half
    areas = np.array([w * h, w * h, l * h, l * h, l * w, l * w])
    faces = rng.choice(6, size=count, p=areas / areas.sum())
    normals = _FACE_NORMALS[faces]
    uv = rng.uniform(-1.0, 1.0, size=(count, 3))
    # Pin the coordinate along each face normal to the face plane.
    points = np.where(normals != 0.0, normals, uv) * half + offset
    return points, normals.copy()


class BoxTemplate(ShapeTemplate):
    """Cuboid of size (length, width, height)."""

    kind = "box"

    def __init__(self, length: float, width: float, height: float):
        dims = np.array([length, width, height], dtype=np.float64)
        if np.any(dims <= 0.0):
            raise InvalidInputError(f"box dimensions must be positive, got {dims.tolist()}")
        self._dims = dims

    @property
    def extent(self) -> np.ndarray:
        return self._dims.copy()

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return _box_sdf(pts, 0.5 * self._dims, np.zeros(3))

    def sample_surface(self, count, rng):
        return _sample_box_surface(count, rng, 0.5 * self._dims, np.zeros(3))

    def to_dict(self):
        length, width, height = self._dims.tolist()
        return {"kind": self.kind, "length": length, "width": width, "height": height}


class CylinderTemplate(ShapeTemplate):
    """Upright cylinder (axis along z)."""

    kind = "cylinder"

    def __init__(self, radius: float, height: float):
        if radius <= 0.0 or height <= 0.0:
            raise InvalidInputError("cylinder radius and height must be positive")
        self.radius = float(radius)
        self.height = float(height)

    @property
    def extent(self) -> np.ndarray:
        return np.array([2.0 * self.radius, 2.0 * self.radius, self.height])

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        d = np.stack([
            np.linalg.norm(pts[:, :2], axis=1) - self.radius,
            np.abs(pts[:, 2]) - 0.5 * self.height,
        ], axis=1)
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
        inside = np.minimum(np.max(d, axis=1), 0.0)
        return outside + inside

    def sample_surface(self, count, rng):
        side = 2.0 * math.pi * self.radius * self.height
        cap = math.pi * self.radius ** 2
        part = rng.choice(3, size=count, p=np.array([side, cap, cap]) / (side + 2.0 * cap))
        angle = rng.uniform(0.0, 2.0 * math.pi, size=count)
        # sqrt keeps cap samples uniform by area.
        radial = np.where(part == 0, self.radius, self.radius * np.sqrt(rng.uniform(0.0, 1.0, size=count)))
        z = np.where(
            part == 0,
            rng.uniform(-0.5 * self.height, 0.5 * self.height, size=count),
            np.where(part == 1, 0.5 * self.height, -0.5 * self.height),
        )
        points = np.stack([radial * np.cos(angle), radial * np.sin(angle), z], axis=1)
        normals = np.zeros((count, 3))
        side_mask = part == 0
        normals[side_mask, 0] = np.cos(angle[side_mask])
        normals[side_mask, 1] = np.sin(angle[side_mask])
        normals[part == 1, 2] = 1.0
        normals[part == 2, 2] = -1.0
        return points, normals

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "height": self.height}


class LShapeTemplate(ShapeTemplate):
    """
    Union of a long wall and a short wing at one end, like a corner barrier.

    The wall spans the full length along x with thickness ``thickness``; the
    wing spans the full width along y at the -x end. Signed distance is exact
    outside the shape and a lower bound on depth inside it.
    """

    kind = "l_shape"

    def __init__(self, length: float, width: float, height: float, thickness: float):
        if min(length, width, height, thickness) <= 0.0:
            raise InvalidInputError("L-shape dimensions must be positive")
        if thickness >= min(length, width):
            raise InvalidInputError("L-shape thickness must be smaller than length and width")
        self.length = float(length)
        self.width = float(width)
        self.height = float(height)
        self.thickness = float(thickness)
        half_l, half_w, half_h = 0.5 * length, 0.5 * width, 0.5 * height
        # (half extents, centre) of the two arms in the bounding-box frame.
        self._arms = (
            (np.array([half_l, 0.5 * thickness, half_h]), np.array([0.0, -half_w + 0.5 * thickness, 0.0])),
            (np.array([0.5 * thickness, half_w, half_h]), np.array([-half_l + 0.5 * thickness, 0.0, 0.0])),
        )

    @property
    def extent(self) -> np.ndarray:
        return np.array([self.length, self.width, self.height])

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.minimum(*(_box_sdf(pts, half, centre) for half, centre in self._arms))

    def _arm_area(self, half: np.ndarray) -> float:
        l, w, h = 2.0 * half
        return 2.0 * (l * w + l * h + w * h)

    def sample_surface(self, count, rng):
        weights = np.array([self._arm_area(half) for half, _ in self._arms])
        weights /= weights.sum()
        points_out, normals_out, have = [], [], 0
        # Rejection: drop samples of one arm that fall inside the other.
        while have < count:
            batch = max(2 * (count - have), 16)
            arm = rng.choice(2, size=batch, p=weights)
            pts = np.empty((batch, 3))
            nrm = np.empty((batch, 3))
            for index, (half, centre) in enumerate(self._arms):
                mask = arm == index
                pts[mask], nrm[mask] = _sample_box_surface(int(mask.sum()), rng, half, centre)
            other_half = np.where(arm[:, None] == 0, self._arms[1][0], self._arms[0][0])
            other_centre = np.where(arm[:, None] == 0, self._arms[1][1], self._arms[0][1])
            inside_other = np.all(np.abs(pts - other_centre) < other_half - 1e-12, axis=1)
            # Faces shared with the other arm are interior too.
            on_shared = np.all(np.abs(pts - other_centre) <= other_half + 1e-12, axis=1) & (
                np.sum(nrm * (other_centre - pts), axis=1) > 0.0
            )
            keep = ~(inside_other | on_shared)
            points_out.append(pts[keep])
            normals_out.append(nrm[keep])
            have += int(keep.sum())
        return np.concatenate(points_out)[:count], np.concatenate(normals_out)[:count]

    def to_dict(self):
        return {
            "kind": self.kind,
            "length": self.length,
            "width": self.width,
            "height": self.height,
            "thickness": self.thickness,
        }


def template_from_dict(values: Dict[str, object]) -> ShapeTemplate:
    kind = values.get("kind")
    if kind == BoxTemplate.kind:
        return BoxTemplate(values["length"], values["width"], values["height"])
    if kind == CylinderTemplate.kind:
        return CylinderTemplate(values["radius"], values["height"])
    if kind == LShapeTemplate.kind:
        return LShapeTemplate(values["length"], values["width"], values["height"], values["thickness"])
    raise InvalidInputError(f"unknown template kind {kind!r}")


def make_class_template(category: str, scale: float = 1.0) -> ShapeTemplate:
    """Template for one taxonomy class, uniformly scaled by ``scale``."""
    if scale <= 0.0:
        raise InvalidInputError("template scale must be positive")
    if category == "car":
        return BoxTemplate(4.5 * scale, 1.9 * scale, 1.6 * scale)
    if category == "truck":
        return BoxTemplate(8.0 * scale, 2.5 * scale, 3.2 * scale)
    if category == "pedestrian":
        return CylinderTemplate(0.3 * scale, 1.75 * scale)
    if category == "traffic_cone":
        return CylinderTemplate(0.18 * scale, 0.75 * scale)
    if category == "barrier":
        return LShapeTemplate(2.0 * scale, 1.0 * scale, 1.0 * scale, 0.25 * scale)
    raise InvalidInputError(f"no template for class {category!r}")
