"""Deterministic driving-scene simulator.

Objects move with exact constant velocity along their initial heading and
rotate at a constant yaw rate, so the slerp between two keyframe boxes is the
true orientation at every sweep in between. LiDAR returns are area-uniform
surface samples of each object template, kept if they face the sensor and
survive range-proportional dropout, then perturbed along the ray. The ground
is a plane at z = 0 carrying clutter returns.

Random streams: every draw comes from ``make_rng(seed, ...)`` keyed by its
purpose and sweep index (PCG64/SeedSequence), so a scene is a pure function
of its config.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from config.constants import CLUTTER_CLEARANCE
from config.settings import SceneConfig
from core.geometry import quaternion as quat
from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from environment.scene import CameraModel, Scene, Sweep, time_key
from environment.templates import ShapeTemplate, make_class_template, template_from_dict
from utils.logger import get_logger
from utils.rng import make_rng

logger = get_logger(__name__)

SENSOR_MOUNT = RigidTransform.from_translation(0.0, 0.0, 1.8)
CAMERA_HEIGHT = 1.6
STATIC_CLASSES = frozenset({"traffic_cone", "barrier"})
PEDESTRIAN_SPEED = (0.5, 1.8)
REFLECTIVITY = {"car": 0.6, "truck": 0.5, "pedestrian": 0.3, "traffic_cone": 0.9, "barrier": 0.7}
CLUTTER_RADIUS = 40.0
_PLACEMENT_ATTEMPTS = 50


@dataclass(frozen=True, eq=False)
class ObjectTruth:
    """Ground-truth motion of one simulated object (global frame)."""

    instance_id: str
    category: str
    template: ShapeTemplate
    initial_center: np.ndarray
    velocity: np.ndarray
    yaw: float
    yaw_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "initial_center", np.asarray(self.initial_center, dtype=np.float64))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=np.float64))

    def pose_at(self, t: float) -> BoxPose:
        return BoxPose(
            self.initial_center + t * self.velocity,
            quat.from_yaw(self.yaw + self.yaw_rate * t),
            self.template.extent,
            t,
        )

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "category": self.category,
            "template": self.template.to_dict(),
            "initial_center": self.initial_center.tolist(),
            "velocity": self.velocity.tolist(),
            "yaw": self.yaw,
            "yaw_rate": self.yaw_rate,
        }

    @classmethod
    def from_dict(cls, values: Mapping) -> "ObjectTruth":
        return cls(
            values["instance_id"],
            values["category"],
            template_from_dict(values["template"]),
            values["initial_center"],
            values["velocity"],
            float(values["yaw"]),
            float(values.get("yaw_rate", 0.0)),
        )


@dataclass(frozen=True)
class EgoTrajectory:
    """Constant speed along x, optionally turning at a constant yaw rate."""

    speed: float
    yaw_rate: float = 0.0

    def pose_at(self, t: float) -> RigidTransform:
        if abs(self.yaw_rate) < 1e-12:
            return RigidTransform.from_yaw(0.0, (self.speed * t, 0.0, 0.0))
        turn = self.yaw_rate * t
        radius = self.speed / self.yaw_rate
        return RigidTransform.from_yaw(turn, (radius * math.sin(turn), radius * (1.0 - math.cos(turn)), 0.0))


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """A generated scene together with the motion that produced it."""

    scene: Scene
    truth: Dict[str, ObjectTruth]
    ego: EgoTrajectory

    def truth_to_dict(self) -> dict:
        return {
            "ego": {"speed": self.ego.speed, "yaw_rate": self.ego.yaw_rate},
            "objects": [self.truth[key].to_dict() for key in sorted(self.truth)],
        }


def camera_rotation(yaw: float) -> np.ndarray:
    """Camera -> ego rotation for a level camera looking along ``yaw``."""
    c, s = math.cos(yaw), math.sin(yaw)
    # Columns: camera x (right), y (down), z (forward) in the ego frame.
    return np.array([
        [s, 0.0, c],
        [-c, 0.0, s],
        [0.0, -1.0, 0.0],
    ])


def build_cameras(config: SceneConfig) -> List[CameraModel]:
    """A ring of identical cameras at equal yaw offsets."""
    focal = 0.5 * config.image_width / math.tan(math.radians(config.horizontal_fov_deg) / 2.0)
    cameras = []
    for index in range(config.num_cameras):
        yaw = 2.0 * math.pi * index / config.num_cameras
        extrinsic = RigidTransform(quat.from_matrix(camera_rotation(yaw)), np.array([0.0, 0.0, CAMERA_HEIGHT]))
        cameras.append(CameraModel(
            focal, focal, 0.5 * config.image_width, 0.5 * config.image_height,
            config.image_width, config.image_height, extrinsic,
        ))
    return cameras


def sample_objects(config: SceneConfig) -> List[ObjectTruth]:
    """Draw object classes, sizes, placements and motions for a scene."""
    rng = make_rng(config.seed, "objects")
    objects: List[ObjectTruth] = []
    for index in range(config.num_objects):
        category = config.classes[int(rng.integers(len(config.classes)))]
        scale = 1.0 + rng.uniform(-config.size_jitter, config.size_jitter)
        template = make_class_template(category, scale)
        reach = 0.5 * float(np.linalg.norm(template.extent[:2]))

        center = None
        for _ in range(_PLACEMENT_ATTEMPTS):
            radius = rng.uniform(*config.spawn_range)
            azimuth = rng.uniform(0.0, 2.0 * math.pi)
            candidate = np.array([radius * math.cos(azimuth), radius * math.sin(azimuth), 0.5 * template.extent[2]])
            clear = all(
                np.linalg.norm(candidate[:2] - other.initial_center[:2])
                > reach + 0.5 * float(np.linalg.norm(other.template.extent[:2])) + 1.0
                for other in objects
            )
            if clear:
                center = candidate
                break
        if center is None:
            logger.warning("object placement gave up", extra={"fields": {"index": index, "category": category}})
            continue

        if category in STATIC_CLASSES:
            speed = 0.0
        elif category == "pedestrian":
            speed = rng.uniform(*PEDESTRIAN_SPEED)
        else:
            speed = rng.uniform(*config.speed_range)
        yaw = rng.uniform(-math.pi, math.pi)
        yaw_rate = rng.uniform(-config.yaw_rate_max, config.yaw_rate_max) if speed > 0.0 else 0.0
        velocity = speed * np.array([math.cos(yaw), math.sin(yaw), 0.0])
        objects.append(ObjectTruth(f"inst_{index:04d}", category, template, center, velocity, yaw, yaw_rate))
    return objects


def _object_returns(config: SceneConfig, truth: ObjectTruth, pose: BoxPose, origin: np.ndarray, sweep: int):
    rng = make_rng(config.seed, "surface", truth.instance_id, sweep)
    local, normals = truth.template.sample_surface(config.surface_samples, rng)
    rotation = pose.rotation_matrix
    world = local @ rotation.T + pose.center
    to_sensor = origin - world
    facing = np.sum((normals @ rotation.T) * to_sensor, axis=1) > 0.0
    distance = np.linalg.norm(to_sensor, axis=1)
    keep = facing & (distance <= config.max_range)
    draws = rng.uniform(size=len(world))
    if config.range_dropout:
        keep &= draws < np.clip(1.0 - distance / config.max_range, 0.05, 1.0)
    facing_count = int(facing.sum())
    visible = float(keep.sum()) / facing_count if facing_count else 0.0

    points = world[keep]
    ranges = distance[keep]
    noise = config.noise_sigma * rng.standard_normal(len(points))
    directions = (points - origin) / ranges[:, None]
    points = origin + directions * (ranges + noise)[:, None]
    intensity = np.clip(REFLECTIVITY.get(truth.category, 0.5) + 0.05 * rng.standard_normal(len(points)), 0.0, 1.0)
    return points, intensity, visible


def _ground_clutter(config: SceneConfig, boxes: Sequence[BoxPose], origin: np.ndarray, sweep: int):
    rng = make_rng(config.seed, "clutter", sweep)
    count = config.clutter_points
    radius = min(config.max_range, CLUTTER_RADIUS) * np.sqrt(rng.uniform(size=count))
    azimuth = rng.uniform(0.0, 2.0 * math.pi, size=count)
    points = np.stack([origin[0] + radius * np.cos(azimuth), origin[1] + radius * np.sin(azimuth), np.zeros(count)], axis=1)
    keep = np.ones(count, dtype=bool)
    for box in boxes:
        keep &= ~box.contains(points, CLUTTER_CLEARANCE)
    points = points[keep]
    ranges = np.linalg.norm(points - origin, axis=1)
    noise = config.noise_sigma * rng.standard_normal(len(points))
    points = origin + (points - origin) / ranges[:, None] * (ranges + noise)[:, None]
    intensity = np.clip(0.1 + 0.02 * rng.standard_normal(len(points)), 0.0, 1.0)
    return points, intensity


def _as_float32(values: np.ndarray) -> np.ndarray:
    # Stored sweeps are float32; holding that precision in memory keeps file round trips exact.
    return values.astype(np.float32).astype(np.float64)


def generate_scene(config: SceneConfig, objects: Optional[Sequence[ObjectTruth]] = None) -> SimulationResult:
    """
    Generate a scene and its ground-truth motion records.

    Args:
        config: Validated scene configuration.
        objects: Explicit objects to place instead of sampling ``config.num_objects``.

    Returns:
        SimulationResult whose scene is identical for identical inputs.
    """
    truths = sorted(objects if objects is not None else sample_objects(config), key=lambda o: o.instance_id)
    ego = EgoTrajectory(config.ego_speed, config.ego_yaw_rate)

    sweeps: List[Sweep] = []
    annotations: Dict[str, List[BoxPose]] = {truth.instance_id: [] for truth in truths}
    visibility: Dict[str, Dict[int, float]] = {truth.instance_id: {} for truth in truths}

    for index in range(config.num_sweeps):
        t = time_key(index * config.sweep_interval) / 1e6
        ego_pose = ego.pose_at(t)
        sensor_to_global = ego_pose.compose(SENSOR_MOUNT)
        origin = sensor_to_global.translation
        poses = [truth.pose_at(t) for truth in truths]

        chunks, intensities = [], []
        keyframe = index % config.annotation_every == 0
        for truth, pose in zip(truths, poses):
            points, intensity, visible = _object_returns(config, truth, pose, origin, index)
            chunks.append(points)
            intensities.append(intensity)
            if keyframe:
                annotations[truth.instance_id].append(pose)
                visibility[truth.instance_id][time_key(t)] = visible
        clutter, clutter_intensity = _ground_clutter(config, poses, origin, index)
        chunks.append(clutter)
        intensities.append(clutter_intensity)

        world = np.concatenate(chunks) if chunks else np.zeros((0, 3))
        local = sensor_to_global.inverse().apply(world)
        sweeps.append(Sweep(t, _as_float32(local), _as_float32(np.concatenate(intensities)), ego_pose, SENSOR_MOUNT))

    scene = Scene(
        sweeps=sweeps,
        cameras=build_cameras(config),
        annotations=annotations,
        categories={truth.instance_id: truth.category for truth in truths},
        visibility=visibility,
        annotation_interval=config.annotation_every * config.sweep_interval,
        seed=config.seed,
    )
    logger.info(
        "scene generated",
        extra={"fields": {
            "seed": config.seed,
            "sweeps": len(sweeps),
            "objects": len(truths),
            "points": int(sum(len(s.points) for s in sweeps)),
        }},
    )
    return SimulationResult(scene, {truth.instance_id: truth for truth in truths}, ego)
