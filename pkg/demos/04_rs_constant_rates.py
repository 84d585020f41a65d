"""
Random selection with constant rates
====================================

With constant rates and strictly decreasing interference every channel
yields exactly M distinct payoffs, one per occupancy level.  Once a user has
seen all M*N of them it knows the whole game and only has to find a seat.
"""

import numpy as np

from chanlearn import ExperimentConfig, run_once, socially_optimal
from chanlearn.game import homogeneous, random_spec

rng = np.random.default_rng(5)
for k in range(5):
    spec = random_spec(rng, 3, 3, case3=True)
    sol = socially_optimal(spec)
    trace = run_once(ExperimentConfig(spec=spec, case="C3", agent="rs", horizon=2000), k)
    off = np.flatnonzero(~trace.optimal_mask(sol.k_star))
    held_from = 1 if off.size == 0 else off[-1] + 2
    print(f"k* = {sol.k_star}, held from round {held_from}")

# When the optimum puts everyone on one channel, users that finished learning
# never leave it, and a straggler can never see that channel's lone-user payoff.
stuck = homogeneous([1.0, 0.1], [1.0, 0.9, 0.8], rate_kind="constant", case3=True)
stalled = 0
for seed in range(20):
    trace = run_once(ExperimentConfig(spec=stuck, case="C3", agent="rs", horizon=2000), seed)
    stalled += not trace.optimal_mask((3, 0))[-100:].all()
print(f"single-channel optimum: {stalled}/20 runs never settle")
