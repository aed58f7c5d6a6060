"""Downlink NOMA/OMA proportional-fair scheduling simulator."""

from .channel import CellGeometry, ChannelRealization, FadingProcess, next_realization, place_users
from .engine import (ExperimentConfig, RunLog, run_comparison, run_drop, run_drops,
                     run_experiment)
from .metrics import cell_edge, gini, long_term_rates, proposition_ratios, rate_latency
from .sched import (Scheduler, SchedulerKind, SchedulerState, ServiceClass, allocate_slot,
                    end_slot_update, enumerate_candidates)

__version__ = "0.1.0"

__all__ = [
    "CellGeometry",
    "ChannelRealization",
    "FadingProcess",
    "next_realization",
    "place_users",
    "ExperimentConfig",
    "RunLog",
    "run_comparison",
    "run_drop",
    "run_drops",
    "run_experiment",
    "cell_edge",
    "gini",
    "long_term_rates",
    "proposition_ratios",
    "rate_latency",
    "Scheduler",
    "SchedulerKind",
    "SchedulerState",
    "ServiceClass",
    "allocate_slot",
    "end_slot_update",
    "enumerate_candidates",
]
