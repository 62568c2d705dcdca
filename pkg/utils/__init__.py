"""Shared utilities: logging, errors, seeded randomness, config hashing."""
