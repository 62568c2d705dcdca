"""Scene directory format.

Layout::

    <scene>/manifest.json        metadata, poses, cameras, annotations
    <scene>/sweeps/sweep_0000.bin  little-endian float32 records (x, y, z, intensity)
    <scene>/ground_truth.json    optional simulator motion records

``manifest.json`` fields:

- ``format``: ``"mixalign-scene"``; ``version``: 1
- ``seed``, ``annotation_interval`` (s), ``config_hash``
- ``sweeps``: list of ``{index, timestamp, file, num_points, ego_pose, sensor_mount}``
  where a pose is ``{rotation: [w, x, y, z], translation: [x, y, z]}``
- ``cameras``: list of ``{fx, fy, cx, cy, width, height, extrinsic}``
- ``instances``: map instance id -> ``{category, boxes, visibility}``; a box is
  ``{center, orientation, size, timestamp}`` in the global frame and
  ``visibility`` maps the timestamp in integer microseconds to a fraction.

Floats in JSON are written with shortest round-trip repr, so a scene read back
equals the scene written.
"""

import json
import os
from typing import Dict, Optional, Tuple

import numpy as np

from core.geometry.motion import BoxPose
from core.geometry.rigid_transform import RigidTransform
from environment.scene import CameraModel, Scene, Sweep
from environment.simulator import EgoTrajectory, ObjectTruth
from utils.errors import DataFormatError
from utils.logger import get_logger

logger = get_logger(__name__)

SCENE_FORMAT = "mixalign-scene"
SCENE_VERSION = 1
MANIFEST_NAME = "manifest.json"
TRUTH_NAME = "ground_truth.json"
_RECORD = np.dtype("<f4")
_RECORD_BYTES = 16


def write_scene(scene: Scene, path: str, truth: Optional[dict] = None, config_hash: Optional[str] = None) -> str:
    """
    Write ``scene`` under directory ``path``.

    Args:
        scene: Scene to persist.
        path: Target directory, created if missing.
        truth: Optional ``SimulationResult.truth_to_dict()`` payload.
        config_hash: Hash of the config that produced the scene.

    Returns:
        Path of the written manifest.
    """
    os.makedirs(os.path.join(path, "sweeps"), exist_ok=True)
    sweep_entries = []
    for index, sweep in enumerate(scene.sweeps):
        name = f"sweeps/sweep_{index:04d}.bin"
        records = np.empty((len(sweep.points), 4), dtype=_RECORD)
        records[:, :3] = sweep.points
        records[:, 3] = sweep.intensity
        with open(os.path.join(path, name), "wb") as handle:
            handle.write(records.tobytes())
        sweep_entries.append({
            "index": index,
            "timestamp": sweep.timestamp,
            "file": name,
            "num_points": len(sweep.points),
            "ego_pose": sweep.ego_pose.to_dict(),
            "sensor_mount": sweep.sensor_mount.to_dict(),
        })

    instances = {}
    for instance_id in scene.instance_ids:
        instances[instance_id] = {
            "category": scene.category(instance_id),
            "boxes": [box.to_dict() for box in scene.boxes(instance_id)],
            "visibility": {str(k): v for k, v in sorted(scene.visibility.get(instance_id, {}).items())},
        }

    manifest = {
        "format": SCENE_FORMAT,
        "version": SCENE_VERSION,
        "seed": scene.seed,
        "annotation_interval": scene.annotation_interval,
        "config_hash": config_hash,
        "sweeps": sweep_entries,
        "cameras": [camera.to_dict() for camera in scene.cameras],
        "instances": instances,
    }
    manifest_path = os.path.join(path, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=1)
    if truth is not None:
        with open(os.path.join(path, TRUTH_NAME), "w", encoding="utf-8") as handle:
            json.dump(truth, handle, indent=1)
    logger.info("scene written", extra={"fields": {"path": path, "sweeps": len(sweep_entries)}})
    return manifest_path


def _read_points(path: str, expected: int) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as handle:
        payload = handle.read()
    if len(payload) % _RECORD_BYTES:
        complete = len(payload) - len(payload) % _RECORD_BYTES
        raise DataFormatError(f"truncated point record in {path}", complete)
    records = np.frombuffer(payload, dtype=_RECORD).reshape(-1, 4)
    if len(records) != expected:
        raise DataFormatError(
            f"{path} holds {len(records)} points, manifest says {expected}", len(payload)
        )
    return records[:, :3].astype(np.float64), records[:, 3].astype(np.float64)


def read_scene(path: str) -> Scene:
    """Load a scene directory written by ``write_scene``.

    Raises:
        OSError: a file cannot be read.
        DataFormatError: the manifest or a sweep file is malformed.
    """
    manifest_path = os.path.join(path, MANIFEST_NAME)
    with open(manifest_path, "r", encoding="utf-8") as handle:
        try:
            manifest = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{manifest_path} is not valid JSON", exc.pos) from exc
    if manifest.get("format") != SCENE_FORMAT:
        raise DataFormatError(f"{manifest_path} is not a scene manifest")

    try:
        sweeps = []
        for entry in manifest["sweeps"]:
            points, intensity = _read_points(os.path.join(path, entry["file"]), int(entry["num_points"]))
            sweeps.append(Sweep(
                float(entry["timestamp"]),
                points,
                intensity,
                RigidTransform.from_dict(entry["ego_pose"]),
                RigidTransform.from_dict(entry["sensor_mount"]),
            ))
        annotations: Dict[str, list] = {}
        categories: Dict[str, str] = {}
        visibility: Dict[str, Dict[int, float]] = {}
        for instance_id, entry in manifest["instances"].items():
            annotations[instance_id] = [BoxPose.from_dict(box) for box in entry["boxes"]]
            categories[instance_id] = entry["category"]
            visibility[instance_id] = {int(k): float(v) for k, v in entry.get("visibility", {}).items()}
        cameras = [CameraModel.from_dict(values) for values in manifest["cameras"]]
    except KeyError as exc:
        raise DataFormatError(f"{manifest_path} is missing field {exc.args[0]!r}") from exc

    return Scene(
        sweeps=sweeps,
        cameras=cameras,
        annotations=annotations,
        categories=categories,
        visibility=visibility,
        annotation_interval=float(manifest["annotation_interval"]),
        seed=int(manifest.get("seed", 0)),
    )


def read_ground_truth(path: str) -> Tuple[EgoTrajectory, Dict[str, ObjectTruth]]:
    """Load ``ground_truth.json`` from a scene directory."""
    with open(os.path.join(path, TRUTH_NAME), "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    ego = EgoTrajectory(float(payload["ego"]["speed"]), float(payload["ego"]["yaw_rate"]))
    objects = {values["instance_id"]: ObjectTruth.from_dict(values) for values in payload["objects"]}
    return ego, objects


def read_manifest_hash(path: str) -> Optional[str]:
    with open(os.path.join(path, MANIFEST_NAME), "r", encoding="utf-8") as handle:
        return json.load(handle).get("config_hash")
