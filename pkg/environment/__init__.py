"""Simulated driving scenes, object templates, scene files and the synthetic CAD library."""
