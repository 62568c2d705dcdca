"""Pinhole projection of annotated boxes and crop selection."""

from core.projection.camera_projection import (
    CropCandidate,
    crops_for_instance,
    project_corners,
    select_valid_views,
)

__all__ = ["CropCandidate", "crops_for_instance", "project_corners", "select_valid_views"]
