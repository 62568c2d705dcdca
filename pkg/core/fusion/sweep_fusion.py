"""Multi-sweep accumulation with ego-motion and object-motion compensation.

Each sweep is first mapped into the sensor frame of the reference time t0
through the pose chain T^{s_t0}_{e_t0} · T^{e_t0}_g · T^g_{e_t} · T^{e_t}_{s_t}.
Object points are then cropped with the box interpolated to the sweep time
and forward-warped into the canonical object frame at t0 using the constant
velocity between the two keyframes that end at t0.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.constants import DEFAULT_CROP_MARGIN, DEFAULT_FUSION_SWEEPS, DEFAULT_MIN_POINTS
from core.geometry.motion import BoxPose, ObjectMotion, interpolate_pose, warp_to_canonical
from core.geometry.rigid_transform import RigidTransform, compose_chain
from environment.scene import Scene, time_key
from utils.errors import InvalidInputError
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class FusedObjectCloud:
    """Dense object cloud in the canonical frame at ``reference_time``."""

    instance_id: str
    reference_time: float
    points: np.ndarray
    sweep_count: int
    per_sweep_counts: Tuple[int, ...] = ()
    category: str = ""
    box_size: Optional[np.ndarray] = field(default=None)

    @property
    def point_count(self) -> int:
        return len(self.points)


def global_to_sensor(scene: Scene, t: float) -> RigidTransform:
    """T^{s_t}_g for the sweep at ``t``."""
    return scene.sweep_at(t).sensor_to_global.inverse()


def compensate_sweep(scene: Scene, t: float, t0: float) -> np.ndarray:
    """
    Express the points of sweep ``t`` in the sensor frame of sweep ``t0``.

    Raises:
        SceneError: either timestamp has no sweep (and so no ego pose).
    """
    source = scene.sweep_at(t)
    target = scene.sweep_at(t0)
    if time_key(t) == time_key(t0):
        return np.array(source.points, dtype=np.float64)
    chain = compose_chain([
        target.sensor_mount.inverse(),
        target.ego_pose.inverse(),
        source.ego_pose,
        source.sensor_mount,
    ])
    return chain.apply(source.points)


def _window(scene: Scene, instance_id: str, t0: float, num_sweeps: int) -> List[float]:
    first = scene.boxes(instance_id)[0].timestamp
    key0 = time_key(t0)
    eligible = [t for t in scene.timestamps if time_key(first) <= time_key(t) <= key0]
    return eligible[-num_sweeps:]


def _box_at(scene: Scene, instance_id: str, t: float, cur: BoxPose, static: bool) -> BoxPose:
    if static or time_key(t) == time_key(cur.timestamp):
        return cur
    prev, nxt = scene.enclosing_annotations(instance_id, t)
    if prev is None:
        return nxt
    return interpolate_pose(prev, nxt, t)


def fuse_object(
    scene: Scene,
    instance_id: str,
    t0: float,
    num_sweeps: int = DEFAULT_FUSION_SWEEPS,
    margin: float = DEFAULT_CROP_MARGIN,
    compensate_motion: bool = True,
) -> FusedObjectCloud:
    """
    Fuse the last ``num_sweeps`` sweeps up to ``t0`` into one object cloud.

    Args:
        scene: Source scene.
        instance_id: Instance annotated at ``t0``.
        t0: Reference (keyframe) time.
        num_sweeps: Window length N; sweeps before the first annotation are skipped.
        margin: Crop box inflation per side, meters.
        compensate_motion: When False the velocity is zeroed (uncompensated baseline).

    Returns:
        FusedObjectCloud in the canonical frame at t0.

    Raises:
        InvalidInputError: ``num_sweeps < 1``.
        SceneError: instance not annotated at ``t0``.
    """
    if num_sweeps < 1:
        raise InvalidInputError("num_sweeps must be >= 1")
    cur = scene.annotation_at(instance_id, t0)
    prev = scene.previous_annotation(instance_id, t0)
    to_reference = global_to_sensor(scene, t0)

    if prev is None:
        # First sighting of the track: no velocity, orientation fixed at t0.
        motion = ObjectMotion.static(cur)
    else:
        motion = ObjectMotion.from_poses(prev, cur)
    if not compensate_motion:
        motion = ObjectMotion(np.zeros(3), cur)
    motion = motion.transformed(to_reference)

    chunks, counts = [], []
    window = _window(scene, instance_id, t0, num_sweeps)
    for t in window:
        points = compensate_sweep(scene, t, t0)
        box = _box_at(scene, instance_id, t, cur, prev is None).transformed(to_reference)
        inside = points[box.contains(points, margin)]
        counts.append(len(inside))
        chunks.append(warp_to_canonical(inside, motion, t, t0))

    fused = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    logger.debug(
        "object fused",
        extra={"fields": {"instance": instance_id, "t0": t0, "sweeps": len(window), "points": len(fused)}},
    )
    return FusedObjectCloud(
        instance_id=instance_id,
        reference_time=cur.timestamp,
        points=fused,
        sweep_count=len(window),
        per_sweep_counts=tuple(counts),
        category=scene.category(instance_id),
        box_size=cur.size.copy(),
    )


def filter_min_points(cloud: FusedObjectCloud, threshold: int = DEFAULT_MIN_POINTS) -> bool:
    """Keep a cloud iff it has at least ``threshold`` points."""
    if threshold < 0:
        raise InvalidInputError("point threshold must be non-negative")
    return cloud.point_count >= threshold


def fuse_scene(
    scene: Scene,
    jobs: Optional[Sequence[Tuple[str, float]]] = None,
    num_sweeps: int = DEFAULT_FUSION_SWEEPS,
    margin: float = DEFAULT_CROP_MARGIN,
    compensate_motion: bool = True,
    threads: int = 1,
) -> List[FusedObjectCloud]:
    """
    Fuse many (instance, t0) pairs; results keep the order of ``jobs``.

    By default every annotated keyframe of every instance is fused.
    """
    if jobs is None:
        jobs = [(instance_id, t) for instance_id in scene.instance_ids for t in scene.annotated_times(instance_id)]

    def run(job):
        instance_id, t0 = job
        return fuse_object(scene, instance_id, t0, num_sweeps, margin, compensate_motion)

    if threads <= 1:
        clouds = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            clouds = list(pool.map(run, jobs))
    logger.info("scene fused", extra={"fields": {"clouds": len(clouds), "threads": threads}})
    return clouds
