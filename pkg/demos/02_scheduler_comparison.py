"""
Six schedulers on the same drops
================================

Every scheduler sees the same placements and fading (paired seeds), so the
differences below come from the scheduling metric alone.
"""

from nomasched.channel import CellGeometry
from nomasched.engine import ExperimentConfig, run_experiment
from nomasched.sched import SchedulerKind

# a smaller setup than the defaults so this runs in a few seconds
cfg = ExperimentConfig(geometry=CellGeometry(num_subbands=32), num_users=10, num_slots=60,
                       num_drops=5, seed=1)

print(f"{'scheduler':<12} {'Mbps':>8} {'Gini':>7} {'cell edge Mbps':>15}")
for kind in SchedulerKind:
    rep = run_experiment(cfg, kind).report
    print(f"{kind.value:<12} {rep.system_throughput_bps / 1e6:8.2f} {rep.gini_long:7.4f} "
          f"{rep.cell_edge_bps / 1e6:15.3f}")
