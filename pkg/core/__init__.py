"""Geometry, fusion, projection, triplets, occlusion, curriculum, learning and evaluation."""

__version__ = "0.1.0"
