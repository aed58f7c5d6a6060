"""
Premium service classes
=======================

In premium mode each user's weight is the distance to its own service
target instead of to the cell average.
"""

from nomasched.channel import CellGeometry
from nomasched.engine import ExperimentConfig, run_experiment
from nomasched.sched import ServiceClass

services = (
    ServiceClass("basic", 1.0e6, (0, 1, 2)),
    ServiceClass("silver", 2.0e6, (3, 4, 5)),
    ServiceClass("gold", 3.0e6, (6, 7, 8)),
)
cfg = ExperimentConfig(geometry=CellGeometry(num_subbands=32), num_users=9, num_slots=100,
                       num_drops=4, seed=3, services=services)

rep = run_experiment(cfg, "WNOPF").report
for name, g in rep.per_group.items():
    print(f"{name:<7} target {g['target_rate_bps'] / 1e6:4.1f} Mbps/user, group "
          f"{g['group_rate_bps'] / 1e6:6.2f} Mbps, Gini {g['gini']:.4f}, "
          f"targets met in {g['success_fraction']:.0%} of drops")
