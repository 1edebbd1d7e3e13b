"""Contractive and non-Markovian couplings of Kac's walk."""

from ..jacobian.induced_map import InducedMapSpec
from .contractive import CouplingTrace, contractive_shift, contractive_step, couple_along, run_contractive_coupling
from .nonmarkov import (
    CoalescenceResult,
    InversionResult,
    build_nm_coupling,
    coalesce_attempt,
    complete_trace,
    invert_induced_map,
    sample_induced_spec,
)
from .schedules import (
    FLAVORS,
    Schedule,
    draw_scheduled_planes,
    greedy_schedule,
    lazy_gap,
    lazy_schedule,
    make_schedule,
)

__all__ = [
    "CoalescenceResult",
    "CouplingTrace",
    "FLAVORS",
    "InducedMapSpec",
    "InversionResult",
    "Schedule",
    "build_nm_coupling",
    "coalesce_attempt",
    "complete_trace",
    "contractive_shift",
    "contractive_step",
    "couple_along",
    "draw_scheduled_planes",
    "greedy_schedule",
    "invert_induced_map",
    "lazy_gap",
    "lazy_schedule",
    "make_schedule",
    "run_contractive_coupling",
    "sample_induced_spec",
]
