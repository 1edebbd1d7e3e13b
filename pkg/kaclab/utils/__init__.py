"""Statistical diagnostics and bound calculators."""

from .bounds import MixingBoundReport, dinf_floor_log10, mixing_bound_report
from .diagnostics import (
    ContractionFit,
    GeometricFit,
    ScheduleTimeStats,
    TVProxy,
    contraction_fit,
    entry_ks,
    geometric_wait_test,
    gumbel_cdf,
    ks_null_band,
    ks_statistic,
    ks_two_sample,
    quantile_interval,
    schedule_time_stats,
    tv_proxy,
)

__all__ = [
    "ContractionFit",
    "GeometricFit",
    "MixingBoundReport",
    "ScheduleTimeStats",
    "TVProxy",
    "contraction_fit",
    "dinf_floor_log10",
    "entry_ks",
    "geometric_wait_test",
    "gumbel_cdf",
    "ks_null_band",
    "ks_statistic",
    "ks_two_sample",
    "mixing_bound_report",
    "quantile_interval",
    "schedule_time_stats",
    "tv_proxy",
]
