"""
RLA regret on the reference game
================================

Users see their payoff and how many others shared the channel.  Regret grows
sublinearly, but the final-decade share of optimal rounds is still climbing
at 10^5 rounds: a user exploring off a good split causes a collision that
takes two more rounds on average to undo.
"""

import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from chanlearn import ExperimentConfig, reference_spec, run_batch

horizon = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
config = ExperimentConfig(spec=reference_spec(), case="C2", agent="rla",
                          params={"gamma_rla": 0.02}, horizon=horizon, seeds=list(range(10)))
res = run_batch(config)
print(res.summary)

t = res.times
reg = res.mean["regret_expected"]
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].loglog(t, reg, label="mean regret")
ax[0].loglog(t, reg[-1] * (t / t[-1]) ** 0.76, "--", label="slope 0.76")
ax[0].set_xlabel("t")
ax[0].legend()
ax[1].semilogx(t, res.mean["frac_optimal"])
ax[1].set_xlabel("t")
ax[1].set_ylabel("share of rounds at k*")
fig.tight_layout()
fig.savefig("rla_regret.png", dpi=120)
print("wrote rla_regret.png")
