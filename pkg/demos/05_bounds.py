"""
The constants behind RLA's regret bound
=======================================
"""

import numpy as np

from chanlearn import analysis

M, N, gamma = 2, 2, 0.02

# exploration budget: rounds where someone explores
for n in (10, 1000, 100_000):
    print(n, analysis.bad_step_budget(n, M, gamma))

# the time after which sample means are eps-accurate with the needed confidence
for eps in (0.2, 0.1, 0.05):
    print("eps", eps, "tau", analysis.tau_threshold(M, N, eps, gamma, gamma / 2))

# occupancy weights do not form a distribution; the uniform-play one does
for l in range(1, M + 1):
    print(l, analysis.occupancy_weight(M, N, l), N * analysis.uniform_occupancy_probability(M, N, l))

# Hoeffding is loose but safe
rng = np.random.default_rng(0)
q = rng.uniform(size=100)
print(analysis.lower_tail_frequency(q, 0.1, 100_000, rng), analysis.hoeffding_bound(100, 0.1))
