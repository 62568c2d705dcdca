"""Tests for pinhole projection, view selection and crop boxes."""

import numpy as np
import pytest

from core.geometry import quaternion as quat
from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from core.projection.camera_projection import (
    CropCandidate,
    crops_for_instance,
    project_corners,
    project_points,
    select_valid_views,
)
from environment.scene import CameraModel
from utils.errors import InvalidInputError
from utils.rng import make_rng

IDENTITY = RigidTransform.identity()


def camera(width=100, height=100):
    return CameraModel(100.0, 100.0, 50.0, 50.0, width, height, IDENTITY)


def unit_cube(center=(0.0, 0.0, 5.0)):
    return BoxPose(np.asarray(center), quat.IDENTITY.copy(), np.ones(3), 0.0)


class TestProjectCorners:
    """Corner projection."""

    def test_optical_axis(self):
        """A point on the optical axis lands on the principal point."""
        assert np.allclose(project_points(np.array([[0.0, 0.0, 5.0]]), camera()), [[50.0, 50.0]])

    def test_hand_arithmetic(self):
        """(1, 0, 5) projects to u = 100 * 1 / 5 + 50 = 70."""
        assert np.allclose(project_points(np.array([1.0, 0.0, 5.0]), camera()), [[70.0, 50.0]])

    def test_cube_centre_symmetric(self):
        """Corners of a cube on the axis are symmetric about the principal point."""
        pixels = project_corners(unit_cube(), camera(), IDENTITY)
        assert pixels.shape == (8, 2)
        assert np.allclose(pixels.mean(axis=0), [50.0, 50.0])

    def test_behind_camera_rejected(self):
        """A box behind the camera yields no projection."""
        assert project_corners(unit_cube((0.0, 0.0, -5.0)), camera(), IDENTITY) is None

    def test_straddling_camera_plane_rejected(self):
        """One corner at Z <= 0 rejects the whole box."""
        assert project_corners(unit_cube((0.0, 0.0, 0.4)), camera(), IDENTITY) is None

    def test_ego_pose_is_applied(self):
        """Moving the ego forward moves the box closer to the camera."""
        far = project_corners(unit_cube(), camera(), IDENTITY)
        near = project_corners(unit_cube(), camera(), RigidTransform.from_translation(0.0, 0.0, 2.0))
        assert np.ptp(near[:, 0]) > np.ptp(far[:, 0])


class TestSelectValidViews:
    """Visibility and in-frame gates."""

    def test_fully_inside(self):
        """A box fully inside the image with visibility 1 gives one candidate."""
        views = select_valid_views(unit_cube(), [camera()], 1.0, 0.4, IDENTITY, "a")
        assert len(views) == 1
        assert views[0].camera_index == 0 and views[0].instance_id == "a"

    def test_corner_one_pixel_outside(self):
        """A corner past the right edge excludes the camera."""
        # Near-face corners reach u = 50 + 100 * 0.5 / 4.5 = 61.1.
        assert select_valid_views(unit_cube(), [camera(width=61)], 1.0, 0.4, IDENTITY) == []
        assert len(select_valid_views(unit_cube(), [camera(width=62)], 1.0, 0.4, IDENTITY)) == 1

    def test_low_visibility_excluded(self):
        """Visibility 0.3 misses a 0.4 threshold."""
        assert select_valid_views(unit_cube(), [camera()], 0.3, 0.4, IDENTITY) == []

    def test_aabb_is_tight(self):
        """Every AABB edge touches a projected corner."""
        box = BoxPose(np.array([0.3, -0.2, 6.0]), quat.from_yaw(0.4), np.array([1.0, 0.6, 0.8]), 0.0)
        pixels = project_corners(box, camera(), IDENTITY)
        view = select_valid_views(box, [camera()], 1.0, 0.4, IDENTITY)[0]
        assert np.all(pixels[:, 0] >= view.u_min) and np.all(pixels[:, 0] <= view.u_max)
        assert np.all(pixels[:, 1] >= view.v_min) and np.all(pixels[:, 1] <= view.v_max)
        assert np.isclose(pixels[:, 0].min(), view.u_min) and np.isclose(pixels[:, 0].max(), view.u_max)
        assert np.isclose(pixels[:, 1].min(), view.v_min) and np.isclose(pixels[:, 1].max(), view.v_max)

    def test_camera_order_and_indices(self):
        """Candidates follow camera order and carry the given indices."""
        views = select_valid_views(
            unit_cube(), [camera(), camera(width=61), camera()], 1.0, 0.4, IDENTITY, camera_indices=[4, 5, 6],
        )
        assert [v.camera_index for v in views] == [4, 6]

    def test_monotone_in_threshold_and_image(self):
        """A higher threshold or a smaller image never adds views."""
        rng = make_rng(5, "boxes")
        cams = [camera(), camera(width=70, height=70)]
        for _ in range(50):
            box = BoxPose(
                np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 10)]),
                quat.from_yaw(rng.uniform(-np.pi, np.pi)), rng.uniform(0.3, 2.0, size=3), 0.0,
            )
            visibility = rng.uniform()
            loose = select_valid_views(box, cams, visibility, 0.2, IDENTITY)
            strict = select_valid_views(box, cams, visibility, 0.6, IDENTITY)
            assert len(strict) <= len(loose)
            big = select_valid_views(box, [camera()], visibility, 0.2, IDENTITY)
            small = select_valid_views(box, [camera(width=70, height=70)], visibility, 0.2, IDENTITY)
            assert len(small) <= len(big)


class TestCropCandidate:
    """Crop boxes."""

    def test_rejects_inverted_aabb(self):
        """u_min must be below u_max."""
        with pytest.raises(InvalidInputError):
            CropCandidate("a", 0, 0.0, 10.0, 0.0, 5.0, 5.0, 1.0)

    def test_rejects_bad_visibility(self):
        """Visibility lies in [0, 1]."""
        with pytest.raises(InvalidInputError):
            CropCandidate("a", 0, 0.0, 0.0, 0.0, 5.0, 5.0, 1.5)

    def test_pixel_box_rounds_outward(self):
        """Sub-pixel bounds are floored and ceiled."""
        crop = CropCandidate("a", 0, 0.0, 10.2, 20.7, 30.1, 40.9, 1.0)
        assert crop.pixel_box(100, 100) == (10, 20, 31, 41)

    def test_pixel_box_clamped(self):
        """Rounded bounds never leave the image."""
        crop = CropCandidate("a", 0, 0.0, 0.5, 0.5, 99.5, 49.5, 1.0)
        assert crop.pixel_box(100, 50) == (0, 0, 100, 50)

    def test_dict_round_trip(self):
        """to_dict and from_dict are inverse."""
        crop = CropCandidate("a", 2, 0.5, 1.25, 2.5, 3.75, 5.0, 0.8)
        assert CropCandidate.from_dict(crop.to_dict()) == crop

    def test_key_uses_microseconds(self):
        """Keys carry integer microsecond timestamps."""
        assert CropCandidate("a", 1, 0.5, 0.0, 0.0, 1.0, 1.0, 1.0).key == ("a", 1, 500000)


class TestCropsForInstance:
    """Crops over the annotated timestamps of an instance."""

    def test_front_camera_every_keyframe(self, front_car):
        """A parked car ahead is cropped by camera 0 at each keyframe."""
        crops = crops_for_instance(front_car.scene, "inst_0000")
        times = front_car.scene.annotated_times("inst_0000")
        assert [c.timestamp for c in crops if c.camera_index == 0] == times
        assert all(c.camera_index != 3 for c in crops)

    def test_ordered_by_time_then_camera(self, small_simulation):
        """Candidates are sorted by (timestamp, camera)."""
        scene = small_simulation.scene
        for instance_id in scene.instance_ids:
            crops = crops_for_instance(scene, instance_id)
            keys = [(c.timestamp, c.camera_index) for c in crops]
            assert keys == sorted(keys)

    def test_max_offset_limits_crop_times(self, front_car):
        """With a max offset only crops near t0 remain."""
        crops = crops_for_instance(front_car.scene, "inst_0000", t0=1.0, max_offset=0.0)
        assert crops and all(c.timestamp == 1.0 for c in crops)

    def test_threshold_one_still_passes_full_view(self, front_car):
        """An unoccluded, undropped car has visibility 1."""
        assert crops_for_instance(front_car.scene, "inst_0000", min_visibility=1.0)
