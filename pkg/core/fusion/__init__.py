"""Multi-sweep object fusion."""

from core.fusion.sweep_fusion import (
    FusedObjectCloud,
    compensate_sweep,
    filter_min_points,
    fuse_object,
    fuse_scene,
)

__all__ = ["FusedObjectCloud", "compensate_sweep", "filter_min_points", "fuse_object", "fuse_scene"]
