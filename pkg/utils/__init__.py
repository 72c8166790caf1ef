"""Utility helpers: errors, seeded generators and file I/O."""

from utils.io import config_digest, output_lock
from utils.rng import get_rng, spawn_seeds

__all__ = [
    "config_digest",
    "output_lock",
    "get_rng",
    "spawn_seeds",
]
