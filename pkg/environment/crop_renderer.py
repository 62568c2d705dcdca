"""Procedural image crops standing in for camera pixels."""

import numpy as np

from config.constants import DEFAULT_MIN_VISIBILITY
from core.projection.camera_projection import project_corners, select_valid_views
from environment.scene import Scene
from utils.errors import NotVisibleError, SceneError
from utils.rng import make_rng


def class_palette(category: str):
    """Base RGB colour and stripe period for a class."""
    rng = make_rng(0, "texture", category)
    return rng.integers(40, 216, size=3), int(rng.integers(3, 9))


def texture(category: str, u0: int, v0: int, u1: int, v1: int) -> np.ndarray:
    """Diagonal-stripe texture over image pixels [u0, u1) x [v0, v1)."""
    base, period = class_palette(category)
    vv, uu = np.mgrid[v0:v1, u0:u1]
    stripe = ((uu + vv) // period) % 2
    shade = np.where(stripe[..., None] == 1, 30, -30)
    return np.clip(base[None, None, :] + shade, 0, 255).astype(np.uint8)


def render_crop_stub(
    scene: Scene,
    instance_id: str,
    camera_index: int,
    t: float,
    min_visibility: float = DEFAULT_MIN_VISIBILITY,
) -> np.ndarray:
    """
    Render the crop of an instance as seen by one camera.

    Args:
        scene: Source scene.
        instance_id: Annotated instance.
        camera_index: Index into ``scene.cameras``.
        t: Annotated timestamp.
        min_visibility: Visibility threshold of the view.

    Returns:
        ``(h, w, 3)`` uint8 buffer covering the outward-rounded crop box.

    Raises:
        NotVisibleError: the box is behind the camera, leaves the frame, or
            is below the visibility threshold.
    """
    if not 0 <= camera_index < len(scene.cameras):
        raise SceneError(f"camera index {camera_index} out of range")
    box = scene.annotation_at(instance_id, t)
    camera = scene.cameras[camera_index]
    ego_pose = scene.ego_pose_at(t)
    if project_corners(box, camera, ego_pose) is None:
        raise NotVisibleError(f"{instance_id} is behind camera {camera_index} at t={t!r}")
    views = select_valid_views(
        box, [camera], scene.visibility_at(instance_id, t), min_visibility, ego_pose,
        instance_id, camera_indices=[camera_index],
    )
    if not views:
        raise NotVisibleError(f"{instance_id} is not fully visible in camera {camera_index} at t={t!r}")
    u0, v0, u1, v1 = views[0].pixel_box(camera.width, camera.height)
    return texture(scene.category(instance_id), u0, v0, u1, v1)
