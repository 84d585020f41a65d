"""
Exp3 users and the replicator flow
==================================

With a small exploration rate, every user running Exp3 drifts like the
replicator equation, with one unit of flow time per ``1/gamma`` rounds.
Both are started from the same probabilities and the first user's
probability of channel 0 is plotted.
"""

import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from chanlearn.game import homogeneous, sample_rates
from chanlearn.learners import Exp3Agent, Feedback, exp3_probs
from chanlearn.replicator import integrate

out = sys.argv[1] if len(sys.argv) > 1 else "exp3_vs_replicator.png"
spec = homogeneous([1.0, 0.8], [1.0, 0.5], rate_kind="bernoulli")
gamma, rounds, runs = 0.02, 20_000, 8
start = np.array([[0.55, 0.45], [0.45, 0.55]])

# follow the flow in unit chunks so the whole path is kept
p, path = start.copy(), [start[0, 0]]
for _ in range(int(rounds * gamma)):
    p = integrate(spec, p, step=0.25, horizon=1.0, tol=0.0).final
    path.append(p[0, 0])
t_ode = np.arange(len(path)) / gamma

plt.figure(figsize=(6, 4))
env = np.random.default_rng(1)
for r in range(runs):
    agents = [Exp3Agent(2, gamma, np.random.default_rng([r, i])) for i in range(2)]
    for a, row in zip(agents, start):
        a.weights = (row - gamma / 2) / (1 - gamma)
        a.probs = exp3_probs(a.weights, gamma)
    p0 = np.empty(rounds)
    for t in range(rounds):
        acts = [a.act() for a in agents]
        counts = np.bincount(acts, minlength=2)
        rates = sample_rates(spec, env)
        for a, j in zip(agents, acts):
            a.observe(Feedback(rates[j] * spec.interference[j, counts[j] - 1]))
        p0[t] = agents[0].probs[0]
    plt.plot(p0, color="0.7", lw=0.8)

plt.plot(t_ode, path, "k", lw=2, label="replicator")
plt.xlabel("round")
plt.ylabel("user 0: P(channel 0)")
plt.legend()
plt.tight_layout()
plt.savefig(out, dpi=120)
print("wrote", out)
