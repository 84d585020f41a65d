"""
Social optimum versus selfish equilibria
========================================

Two users, two channels.  Channel 0 is good (mean rate 1.0), channel 1 is
worse (0.6), and sharing a channel multiplies everyone's rate by 0.7.
"""

import numpy as np

from chanlearn import enumerate_pne, reference_spec, socially_optimal, stability_margin
from chanlearn.congestion import best_response_path, rosenthal_potential
from chanlearn.game import random_spec

spec = reference_spec()
print(spec.values)  # row j: per-user payoff with 1, 2 users on channel j

# Splitting up earns 1.0 + 0.6 = 1.6, crowding channel 0 earns 2 * 0.7 = 1.4
sol = socially_optimal(spec)
print("k* =", sol.k_star, " v* =", sol.v_star)
print("stability margin:", stability_margin(spec))

# But the user on channel 1 does better by joining channel 0 (0.7 > 0.6),
# so the only equilibrium is the crowded one
rep = enumerate_pne(spec)
print("equilibria:", rep.pne_occupancies, " contains optimum:", rep.contains_optimum)

# Better-reply dynamics climb the potential until they stop at it
rng = np.random.default_rng(0)
path = best_response_path(spec, (1, 1), rng)
for prof in path:
    print(prof, rosenthal_potential(spec, prof))

# How often is selfishness costly?  Random 3x3 instances:
bad = 0
for _ in range(500):
    s = random_spec(rng, 3, 3)
    bad += not enumerate_pne(s).contains_optimum
print(f"{bad / 500:.1%} of random 3x3 instances have no efficient equilibrium")
