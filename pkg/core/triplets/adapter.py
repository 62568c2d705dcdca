"""Dataset adapter boundary.

The triplet pipeline consumes ``Scene`` objects plus caption maps. A driving
dataset is plugged in by implementing ``SceneAdapter``: it yields one scene
per log/sequence with boxes in the global frame, per-sweep ego poses and
sensor mounts, calibrated cameras, per-annotation visibility fractions, and
the captions of its crops. Only the simulated-scene adapter ships here.
"""

import os
from abc import ABC, abstractmethod
from typing import Dict, Iterator, Optional, Sequence, Tuple

from core.projection.camera_projection import CropKey
from core.triplets.captions import load_captions
from environment.scene import Scene
from environment.scene_io import read_scene

CAPTIONS_DIRNAME = "captions"


class SceneAdapter(ABC):
    """
    Abstract base class for scene sources.

    Subclasses translate a dataset's native layout into ``Scene`` objects and
    caption maps keyed by (instance id, camera index, microseconds).
    """

    name: str = "abstract"

    @abstractmethod
    def scene_ids(self) -> Sequence[str]:
        """Identifiers of the scenes this adapter can load."""

    @abstractmethod
    def load_scene(self, scene_id: str) -> Scene:
        """Load one scene."""

    @abstractmethod
    def load_captions(self, scene_id: str) -> Dict[CropKey, str]:
        """Captions for the crops of one scene."""

    def scene_token(self, scene_id: str) -> str:
        """Short name that prefixes the instance ids of a scene."""
        return scene_id

    def __iter__(self) -> Iterator[Tuple[str, Scene, Dict[CropKey, str]]]:
        for scene_id in self.scene_ids():
            yield scene_id, self.load_scene(scene_id), self.load_captions(scene_id)


class SimulatedSceneAdapter(SceneAdapter):
    """Scene directories written by ``simulate-scene``.

    Args:
        paths: Scene directories.
        captions_dir: Caption directory shared by all scenes; defaults to
            ``<scene>/captions`` for each scene.
    """

    name = "simulated"

    def __init__(self, paths: Sequence[str], captions_dir: Optional[str] = None):
        self.paths = list(paths)
        self.captions_dir = captions_dir

    def scene_ids(self) -> Sequence[str]:
        return list(self.paths)

    def load_scene(self, scene_id: str) -> Scene:
        return read_scene(scene_id)

    def load_captions(self, scene_id: str) -> Dict[CropKey, str]:
        directory = self.captions_dir or os.path.join(scene_id, CAPTIONS_DIRNAME)
        return load_captions(directory)

    def scene_token(self, scene_id: str) -> str:
        return os.path.basename(os.path.normpath(scene_id)) or scene_id
