"""Tests for ego-motion compensation and per-object sweep fusion."""

import math

import numpy as np
import pytest

from config.settings import SceneConfig
from core.fusion.sweep_fusion import (
    FusedObjectCloud,
    compensate_sweep,
    filter_min_points,
    fuse_object,
    fuse_scene,
)
from core.geometry.rigid_transform import RigidTransform
from environment.simulator import generate_scene
from utils.errors import InvalidInputError, SceneError
from utils.rng import make_rng

from conftest import build_static_scene, single_object_scene


def box_points(seed, count=50, center=(5.0, 0.0, 0.0), half=0.9):
    rng = make_rng(seed, "box-points")
    return np.asarray(center) + rng.uniform(-half, half, size=(count, 3))


def turning_trajectory(count):
    return [RigidTransform.from_yaw(0.1 * i, (0.5 * i, 0.2 * i, 0.0)) for i in range(count)]


def parked_trajectory(count):
    return [RigidTransform.identity() for _ in range(count)]


@pytest.fixture(scope="module")
def moving_car():
    """A car driving against a moving ego vehicle, range noise 2 cm."""
    return single_object_scene(
        center=(15.0, 5.0, 0.8), velocity=(-4.0, 0.0, 0.0), yaw=math.pi,
        ego_speed=5.0, noise_sigma=0.02,
    )


class TestCompensateSweep:
    """Sweep-to-reference pose chains."""

    def test_same_time_is_identity(self, small_simulation):
        """t = t0 returns the sweep unchanged."""
        scene = small_simulation.scene
        t = scene.timestamps[3]
        assert np.array_equal(compensate_sweep(scene, t, t), scene.sweeps[3].points)

    def test_ego_translation_shifts_points_back(self):
        """Ego moving +1 m in x moves static points -1 m in x."""
        world = np.array([[5.0, 0.0, 0.0], [6.0, 1.0, 0.5]])
        scene = build_static_scene(world, [RigidTransform.identity(), RigidTransform.from_translation(1, 0, 0)])
        moved = compensate_sweep(scene, 0.0, 0.1)
        assert np.allclose(moved, world - [1.0, 0.0, 0.0], atol=1e-12)

    def test_static_world_overlays(self):
        """Compensated sweeps of a static world coincide with the reference sweep."""
        world = box_points(1)
        mount = RigidTransform.from_translation(0.5, 0.0, 1.8)
        scene = build_static_scene(world, turning_trajectory(4), mount=mount)
        reference = scene.sweeps[3].points
        for t in scene.timestamps[:3]:
            compensated = compensate_sweep(scene, t, scene.timestamps[3])
            rms = math.sqrt(np.mean(np.sum((compensated - reference) ** 2, axis=1)))
            assert rms <= 1e-6

    def test_missing_sweep(self, small_simulation):
        """A timestamp without a sweep is a scene error."""
        with pytest.raises(SceneError):
            compensate_sweep(small_simulation.scene, 0.123, 0.0)


class TestFuseObject:
    """Canonical object clouds."""

    def test_static_zero_noise_union(self):
        """A static object fused over N sweeps is N copies of its local points."""
        world = box_points(2)
        scene = build_static_scene(world, parked_trajectory(5))
        cloud = fuse_object(scene, "static", 0.4, num_sweeps=5)
        local = world - [5.0, 0.0, 0.0]
        assert cloud.sweep_count == 5
        assert np.allclose(cloud.points, np.tile(local, (5, 1)), atol=1e-9)

    def test_independent_of_ego_trajectory(self):
        """A static scene fuses to the same cloud whatever the ego did."""
        world = box_points(3)
        parked = fuse_object(build_static_scene(world, parked_trajectory(5)), "static", 0.4, num_sweeps=5)
        turning = fuse_object(build_static_scene(world, turning_trajectory(5)), "static", 0.4, num_sweeps=5)
        assert parked.points.shape == turning.points.shape
        assert np.allclose(parked.points, turning.points, atol=1e-6)

    def test_single_sweep_is_recentred_crop(self, moving_car):
        """N = 1 is the t0 crop in the box frame."""
        scene = moving_car.scene
        t0 = 1.0
        cloud = fuse_object(scene, "inst_0000", t0, num_sweeps=1)
        sweep = scene.sweep_at(t0)
        box = scene.annotation_at("inst_0000", t0).transformed(sweep.sensor_to_global.inverse())
        expected = box.to_local(sweep.points[box.contains(sweep.points, 0.1)])
        assert np.allclose(cloud.points, expected, atol=1e-9)

    def test_count_is_sum_of_crops(self, moving_car):
        """The fused count equals the per-sweep crop counts."""
        cloud = fuse_object(moving_car.scene, "inst_0000", 1.0, num_sweeps=10)
        assert cloud.sweep_count == 10
        assert cloud.point_count == sum(cloud.per_sweep_counts)

    def test_points_inside_inflated_box(self, moving_car):
        """Canonical points stay within the box extents plus the margin."""
        cloud = fuse_object(moving_car.scene, "inst_0000", 1.0, num_sweeps=10, margin=0.1)
        half = 0.5 * cloud.box_size + 0.1
        assert np.all(np.abs(cloud.points) <= half + 1e-6)

    def test_motion_compensation_tightens_cloud(self, moving_car):
        """Compensated spread stays within 2 sigma and beats the uncompensated cloud."""
        template = moving_car.truth["inst_0000"].template
        compensated = fuse_object(moving_car.scene, "inst_0000", 1.0, num_sweeps=10)
        raw = fuse_object(moving_car.scene, "inst_0000", 1.0, num_sweeps=10, compensate_motion=False)
        tight = template.surface_spread(compensated.points)
        loose = template.surface_spread(raw.points)
        assert tight <= 2 * 0.02
        assert loose > tight

    @pytest.mark.parametrize("seed", range(50))
    def test_compensation_holds_for_every_mover(self, seed):
        """Every vehicle at 1-15 m/s fuses within 2 sigma and tighter than without compensation."""
        rng = make_rng(seed, "movers")
        config = SceneConfig(
            seed=seed, num_objects=3, num_sweeps=21, classes=("car", "truck"),
            speed_range=(1.0, 15.0), noise_sigma=0.02, ego_speed=float(rng.uniform(0.0, 10.0)),
            surface_samples=300, clutter_points=0, spawn_range=(8.0, 20.0),
        )
        simulation = generate_scene(config)
        checked = 0
        for instance_id, truth in simulation.truth.items():
            assert 1.0 <= float(np.linalg.norm(truth.velocity)) <= 15.0
            times = simulation.scene.annotated_times(instance_id)
            if len(times) < 2:
                continue
            t0 = times[-1]
            compensated = fuse_object(simulation.scene, instance_id, t0, num_sweeps=10)
            raw = fuse_object(simulation.scene, instance_id, t0, num_sweeps=10, compensate_motion=False)
            if compensated.sweep_count < 2 or compensated.point_count == 0:
                continue
            tight = truth.template.surface_spread(compensated.points)
            loose = truth.template.surface_spread(raw.points)
            assert tight <= 2 * 0.02, instance_id
            assert loose > tight, instance_id
            checked += 1
        assert checked > 0

    def test_first_sighting_uses_single_sweep(self, moving_car):
        """Sweeps before the first annotation are skipped."""
        cloud = fuse_object(moving_car.scene, "inst_0000", 0.0, num_sweeps=10)
        assert cloud.sweep_count == 1

    def test_margin_never_removes_points(self, moving_car):
        """Inflating the crop box keeps every point of the tighter crop."""
        counts = [
            fuse_object(moving_car.scene, "inst_0000", 1.0, margin=m).point_count for m in (0.0, 0.1, 0.3)
        ]
        assert counts == sorted(counts)

    def test_unannotated_time(self, moving_car):
        """Fusing at a non-keyframe is a scene error."""
        with pytest.raises(SceneError):
            fuse_object(moving_car.scene, "inst_0000", 0.05)

    def test_rejects_empty_window(self, moving_car):
        """N must be at least one."""
        with pytest.raises(InvalidInputError):
            fuse_object(moving_car.scene, "inst_0000", 1.0, num_sweeps=0)


class TestFuseScene:
    """Batch fusion."""

    def test_thread_count_does_not_matter(self, small_simulation):
        """Worker-pool size leaves results and order unchanged."""
        serial = fuse_scene(small_simulation.scene, threads=1)
        pooled = fuse_scene(small_simulation.scene, threads=3)
        assert [(c.instance_id, c.reference_time) for c in serial] == [
            (c.instance_id, c.reference_time) for c in pooled
        ]
        assert all(np.array_equal(a.points, b.points) for a, b in zip(serial, pooled))

    def test_default_jobs_cover_every_keyframe(self, small_simulation):
        """Every annotated keyframe of every instance is fused."""
        scene = small_simulation.scene
        expected = sum(len(scene.annotated_times(i)) for i in scene.instance_ids)
        assert len(fuse_scene(scene)) == expected


class TestFilterMinPoints:
    """Point-count gate."""

    @staticmethod
    def cloud(count):
        return FusedObjectCloud("x", 0.0, np.zeros((count, 3)), 1)

    def test_below_threshold_dropped(self):
        """149 points miss a 150 threshold."""
        assert not filter_min_points(self.cloud(149), 150)

    def test_threshold_inclusive(self):
        """150 points pass a 150 threshold."""
        assert filter_min_points(self.cloud(150), 150)

    def test_zero_threshold_keeps_all(self):
        """Threshold zero keeps even empty clouds."""
        assert filter_min_points(self.cloud(0), 0)

    def test_negative_threshold(self):
        """Negative thresholds are invalid."""
        with pytest.raises(InvalidInputError):
            filter_min_points(self.cloud(1), -1)
