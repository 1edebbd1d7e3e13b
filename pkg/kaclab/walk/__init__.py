"""Kac walk chain engine."""

from .chain import UpdateSequence, WalkState, random_update_sequence, run_walk, sphere_projection, walk_states

__all__ = [
    "UpdateSequence",
    "WalkState",
    "random_update_sequence",
    "run_walk",
    "sphere_projection",
    "walk_states",
]
