"""
Per-slot fairness and the first scheduling slot
===============================================

Plain PF starts from an empty history and serves only a handful of users in
slot 1. The weighted metrics spread the first slot over everyone.
"""

import numpy as np

from nomasched.channel import CellGeometry
from nomasched.engine import ExperimentConfig, run_experiment

cfg = ExperimentConfig(geometry=CellGeometry(num_subbands=64), num_users=15, num_slots=30,
                       num_drops=4, seed=2)

runs = {k: run_experiment(cfg, k) for k in ("PF_NOMA", "WNOPF")}

print("slot  " + "  ".join(f"{k:>8}" for k in runs))
for t in (0, 1, 2, 4, 9, 19, 29):
    print(f"{t + 1:4d}  " + "  ".join(f"{r.report.gini_short_per_slot[t]:8.4f}" for r in runs.values()))

# how many users got nothing in slot 1
for k, r in runs.items():
    starved = np.mean([np.sum(lg.user_rates[0] == 0) for lg in r.logs])
    print(f"{k}: {starved:.1f} users without rate in slot 1 (mean over drops)")
