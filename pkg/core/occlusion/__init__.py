from core.occlusion.hpr import (
    Viewpoint,
    VisibilityResult,
    augment_triplets,
    hpr_visible,
    occlude_points,
    sample_viewpoint,
    spherical_inversion,
)

__all__ = [
    "Viewpoint",
    "VisibilityResult",
    "augment_triplets",
    "hpr_visible",
    "occlude_points",
    "sample_viewpoint",
    "spherical_inversion",
]
