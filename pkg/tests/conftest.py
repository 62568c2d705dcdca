"""Shared fixtures: small scenes, hand-built static scenes and triplets."""

from typing import Sequence

import numpy as np
import pytest

from config.settings import CadConfig, SceneConfig
from core.geometry import quaternion as quat
from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from core.learning.providers import HashedClassProvider
from core.triplets.triplet import Domain, Triplet
from environment.cad_library import generate_synthetic_triplets
from environment.scene import CameraModel, Scene, Sweep
from environment.simulator import ObjectTruth, generate_scene
from environment.templates import make_class_template
from utils.logger import configure_logging
from utils.rng import make_rng


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging("WARNING")


def make_triplet(
    instance_id: str = "obj",
    label: str = "car",
    domain: Domain = Domain.SYNTHETIC,
    points=None,
    reference_time: float = 0.0,
    seed: int = 0,
) -> Triplet:
    if points is None:
        points = make_rng(seed, "points", instance_id).normal(size=(32, 3))
    return Triplet(
        instance_id=instance_id,
        reference_time=reference_time,
        points=points,
        image_ref=f"texture:{label}|render:{instance_id}",
        caption=f"a {label.replace('_', ' ')}",
        domain=domain,
        label=label,
    )


def build_static_scene(
    world_points: np.ndarray,
    ego_poses: Sequence[RigidTransform],
    box_center=(5.0, 0.0, 0.0),
    box_size=(2.0, 2.0, 2.0),
    interval: float = 0.1,
    mount: RigidTransform = None,
) -> Scene:
    """Every sweep sees the same world points; one static box annotated at every sweep."""
    mount = mount or RigidTransform.identity()
    sweeps = []
    boxes = []
    for index, ego in enumerate(ego_poses):
        t = index * interval
        local = ego.compose(mount).inverse().apply(world_points)
        sweeps.append(Sweep(t, local, np.zeros(len(local)), ego, mount))
        boxes.append(BoxPose(np.asarray(box_center, dtype=float), quat.IDENTITY.copy(), np.asarray(box_size), t))
    camera = CameraModel(100.0, 100.0, 50.0, 50.0, 100, 100, RigidTransform.identity())
    return Scene(
        sweeps=sweeps,
        cameras=[camera],
        annotations={"static": boxes},
        categories={"static": "barrier"},
        visibility={"static": {}},
        annotation_interval=interval,
    )


def single_object_scene(
    center=(15.0, 0.0, 0.8),
    velocity=(0.0, 0.0, 0.0),
    yaw: float = 0.0,
    category: str = "car",
    **overrides,
):
    """A scene with exactly one hand-placed object and no ground clutter."""
    values = dict(
        seed=2,
        num_objects=0,
        num_sweeps=21,
        ego_speed=0.0,
        range_dropout=False,
        clutter_points=0,
        surface_samples=600,
    )
    values.update(overrides)
    config = SceneConfig(**values)
    truth = ObjectTruth("inst_0000", category, make_class_template(category), center, velocity, yaw)
    return generate_scene(config, objects=[truth])


@pytest.fixture(scope="session")
def front_car():
    """A parked car straight ahead of camera 0 of a parked ego vehicle."""
    return single_object_scene()


@pytest.fixture(scope="session")
def small_scene_config():
    return SceneConfig(
        seed=7,
        num_objects=4,
        num_sweeps=21,
        surface_samples=300,
        clutter_points=200,
        spawn_range=(8.0, 20.0),
    )


@pytest.fixture(scope="session")
def small_simulation(small_scene_config):
    return generate_scene(small_scene_config)


@pytest.fixture(scope="session")
def provider():
    return HashedClassProvider(dim=16, seed=0)


@pytest.fixture(scope="session")
def cad_triplets():
    return generate_synthetic_triplets(CadConfig(seed=3, objects_per_class=4, points=96))
