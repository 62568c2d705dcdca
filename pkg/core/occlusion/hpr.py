"""Viewpoint-aware occlusion synthesis with the Hidden Point Removal operator.

Points are spherically inverted about a viewpoint; a point is visible when its
inverted image is a vertex of the convex hull of the inverted set together
with the viewpoint. The hull is computed by Qhull on lexicographically sorted
input, so the mask is a pure function of (points, viewpoint, gamma).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from config.constants import DEFAULT_HPR_GAMMA, DEFAULT_SHELL_MAX_FACTOR, DEFAULT_SHELL_MIN_FACTOR
from config.settings import OcclusionConfig
from core.triplets.triplet import Domain, Triplet
from utils.errors import InvalidInputError
from utils.logger import get_logger
from utils.rng import make_rng

logger = get_logger(__name__)

COINCIDENT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Viewpoint:
    """A virtual sensor position on a spherical shell around ``centroid``."""

    position: np.ndarray
    centroid: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class VisibilityResult:
    """
    Outcome of ``hpr_visible``.

    Attributes:
        mask: One boolean per input point.
        degenerate: True when the input had no 3D hull and every point was kept.
        coincident: Points dropped for sitting on the viewpoint.
    """

    mask: np.ndarray
    degenerate: bool = False
    coincident: int = 0

    @property
    def visible_count(self) -> int:
        return int(np.count_nonzero(self.mask))


def spherical_inversion(points: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Flip points (relative to the viewpoint) about a sphere of ``radius``.

    ``p' = p + 2 (R - |p|) p / |p|``, so ``|p'| = 2R - |p|``.

    Returns:
        (inverted points for the kept rows, boolean mask of rows kept). Rows at
        the viewpoint itself have no direction and are dropped.

    Raises:
        InvalidInputError: ``radius`` is smaller than the farthest point.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    norms = np.linalg.norm(pts, axis=1)
    kept = norms > COINCIDENT_TOLERANCE
    if kept.size and radius < norms.max():
        raise InvalidInputError(f"inversion radius {radius} is smaller than the farthest point {norms.max()}")
    dropped = int(kept.size - np.count_nonzero(kept))
    if dropped:
        logger.info("points coincident with the viewpoint excluded", extra={"fields": {"count": dropped}})
    p = pts[kept]
    n = norms[kept][:, None]
    return p + 2.0 * (radius - n) * p / n, kept


def _is_degenerate(points: np.ndarray) -> bool:
    if len(points) < 4:
        return True
    centred = points - points.mean(axis=0)
    singular = np.linalg.svd(centred, compute_uv=False)
    return bool(singular[-1] <= 1e-12 * max(singular[0], 1e-300))


def hpr_visible(points: np.ndarray, viewpoint: np.ndarray, gamma: float = DEFAULT_HPR_GAMMA) -> VisibilityResult:
    """
    Visibility mask of ``points`` seen from ``viewpoint``.

    Args:
        points: (n, 3) point set.
        viewpoint: Sensor position, same frame as ``points``.
        gamma: Inversion radius as a multiple of the farthest point distance.

    Returns:
        A ``VisibilityResult``; coplanar or tiny inputs come back all-visible
        with ``degenerate=True``.
    """
    if gamma < 1.0:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    mask = np.zeros(len(pts), dtype=bool)
    if len(pts) == 0:
        return VisibilityResult(mask)

    relative = pts - np.asarray(viewpoint, dtype=np.float64).reshape(3)
    radius = gamma * float(np.linalg.norm(relative, axis=1).max())
    inverted, kept = spherical_inversion(relative, radius)
    coincident = int(len(pts) - np.count_nonzero(kept))
    kept_rows = np.flatnonzero(kept)

    if _is_degenerate(pts[kept_rows]):
        mask[kept_rows] = True
        logger.info("degenerate input for visibility, keeping all points", extra={"fields": {"points": len(pts)}})
        return VisibilityResult(mask, degenerate=True, coincident=coincident)

    order = np.lexsort((inverted[:, 2], inverted[:, 1], inverted[:, 0]))
    hull_input = np.vstack([inverted[order], np.zeros((1, 3))])
    try:
        hull = ConvexHull(hull_input)
    except QhullError:
        mask[kept_rows] = True
        return VisibilityResult(mask, degenerate=True, coincident=coincident)

    vertices = hull.vertices[hull.vertices < len(order)]
    mask[kept_rows[order[vertices]]] = True
    return VisibilityResult(mask, coincident=coincident)


def sample_viewpoint(rng: np.random.Generator, centroid: np.ndarray, r_min: float, r_max: float) -> Viewpoint:
    """Direction uniform on the sphere, distance uniform in ``[r_min, r_max]``."""
    if not 0.0 < r_min <= r_max:
        raise InvalidInputError(f"need 0 < r_min <= r_max, got {r_min}, {r_max}")
    direction = rng.standard_normal(3)
    norm = np.linalg.norm(direction)
    while norm < 1e-12:
        direction = rng.standard_normal(3)
        norm = np.linalg.norm(direction)
    radius = float(rng.uniform(r_min, r_max)) if r_max > r_min else float(r_min)
    center = np.asarray(centroid, dtype=np.float64).reshape(3)
    return Viewpoint(center + radius * direction / norm, center, radius)


def occlude_points(
    points: np.ndarray,
    rng: np.random.Generator,
    gamma: float = DEFAULT_HPR_GAMMA,
    shell_min_factor: float = DEFAULT_SHELL_MIN_FACTOR,
    shell_max_factor: float = DEFAULT_SHELL_MAX_FACTOR,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
) -> np.ndarray:
    """
    Keep only the points visible from a random viewpoint on a shell.

    Without explicit ``r_min``/``r_max`` the shell is scaled from the bounding
    radius about the centroid. Falls back to the input when nothing would be
    left.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return pts
    centroid = pts.mean(axis=0)
    bounding = float(np.linalg.norm(pts - centroid, axis=1).max())
    if r_min is None:
        if bounding <= 0.0:
            return pts
        r_min, r_max = shell_min_factor * bounding, shell_max_factor * bounding
    viewpoint = sample_viewpoint(rng, centroid, r_min, r_max)
    result = hpr_visible(pts, viewpoint.position, gamma)
    if result.visible_count == 0:
        return pts
    return pts[result.mask]


def augment_triplets(triplets: Sequence[Triplet], config: OcclusionConfig, seed: Optional[int] = None) -> List[Triplet]:
    """
    Occlude every synthetic-domain triplet from its own random viewpoint.

    Outdoor triplets already carry real occlusion and pass through untouched.
    Viewpoints are drawn from stream ``(seed, "hpr", index)`` so the output
    depends only on the input order and seed.
    """
    seed = config.seed if seed is None else seed
    augmented: List[Triplet] = []
    dropped = 0
    touched = 0
    for index, triplet in enumerate(triplets):
        if triplet.domain is not Domain.SYNTHETIC:
            augmented.append(triplet)
            continue
        rng = make_rng(seed, "hpr", index)
        points = occlude_points(
            triplet.points, rng, config.gamma,
            config.shell_min_factor, config.shell_max_factor, config.r_min, config.r_max,
        )
        dropped += len(triplet.points) - len(points)
        touched += 1
        augmented.append(triplet.with_points(points))
    logger.info(
        "occlusion augmentation applied",
        extra={"fields": {"triplets": len(augmented), "augmented": touched, "points_removed": dropped}},
    )
    return augmented
