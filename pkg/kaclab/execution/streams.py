"""Reproducible per-replicate random streams."""

from __future__ import annotations

import hashlib

import numpy as np


def tag_key(tag: str) -> int:
    """Stable 32-bit key for a command tag."""

    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:4], "big")


def replicate_stream(seed: int, tag: str, index: int) -> np.random.Generator:
    """Generator for replicate *index* of command *tag* under master *seed*."""

    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(tag_key(tag), index))
    return np.random.default_rng(sequence)
