"""
Throughput and scheduling ratios versus the number of users
===========================================================

Sweep K and compare a weighted scheduler with its unweighted baseline on
paired drops.
"""

from nomasched.channel import CellGeometry
from nomasched.engine import ExperimentConfig, run_comparison

base = ExperimentConfig(geometry=CellGeometry(num_subbands=32), num_slots=60, num_drops=4, seed=4)

print(f"{'K':>3} {'WNOPF':>8} {'PF_NOMA':>8} {'ratio1':>7} {'ratio2':>7}")
for K in (4, 8, 12):
    comp = run_comparison(base.with_(num_users=K), "WNOPF", "PF_NOMA")
    print(f"{K:3d} {comp.a.report.system_throughput_bps / 1e6:8.2f} "
          f"{comp.b.report.system_throughput_bps / 1e6:8.2f} "
          f"{comp.ratios.ratio1:7.3f} {comp.ratios.ratio2:7.3f}")
