"""Per-user online channel selection algorithms.

Every agent exposes ``act(t) -> channel`` and ``observe(feedback, t)`` and owns
its random generator, so an agent's behaviour is a deterministic function of
its seed and the feedback it receives.  No agent sees another agent's state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .game import enumerate_allocations, optimal_from_values, value_table

#: Exp3 weights are rescaled by their maximum once it passes this value.
WEIGHT_CEILING = 1e200


@dataclass(frozen=True)
class Feedback:
    """What a user learns after playing one round.

    ``occupancy`` is the number of users found on the channel; it is only
    delivered when users are allowed to count each other (case C2).
    """

    payoff: float
    occupancy: Optional[int] = None


# ---------------------------------------------------------------------------
# Exp3


def exp3_probs(weights: np.ndarray, gamma: float) -> np.ndarray:
    n = weights.size
    return (1.0 - gamma) * weights / weights.sum() + gamma / n


def exp3_reweight(weights, probs, chosen, payoff, gamma: float) -> np.ndarray:
    """Weights after one Exp3 round; batched over leading axes.

    ``weights`` and ``probs`` have shape ``(..., N)``; ``chosen`` and ``payoff``
    have the leading shape.  Only the chosen channel's weight changes, by
    the factor ``exp(gamma * payoff / (p_chosen * N))``.
    """
    weights = np.array(weights, dtype=float)
    n = weights.shape[-1]
    chosen = np.asarray(chosen)[..., None]
    p = np.take_along_axis(np.asarray(probs), chosen, axis=-1)
    factor = np.exp(gamma * np.asarray(payoff, dtype=float)[..., None] / (p * n))
    np.put_along_axis(weights, chosen, np.take_along_axis(weights, chosen, axis=-1) * factor, axis=-1)
    return weights


class Exp3Agent:
    """Exp3 with exploration rate ``gamma`` on rewards in [0, 1]."""

    kind = "exp3"

    def __init__(self, num_channels: int, gamma: float, rng):
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma_exp3 must be in (0, 1), got {gamma}")
        self.num_channels = num_channels
        self.gamma = gamma
        self.rng = rng
        self.reset()

    def reset(self):
        self.weights = np.ones(self.num_channels)
        self.probs = exp3_probs(self.weights, self.gamma)
        self.last_action = None
        self.explored = False

    def act(self, t: int = 0) -> int:
        self.probs = exp3_probs(self.weights, self.gamma)
        cdf = np.cumsum(self.probs)
        j = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
        self.last_action = min(j, self.num_channels - 1)
        return self.last_action

    def update(self, chosen: int, payoff: float) -> None:
        """Multiply the chosen channel's weight by ``exp(gamma h / (p N))``."""
        if not 0.0 <= payoff <= 1.0:
            raise ValueError(f"payoff {payoff} outside [0, 1]")
        self.weights = exp3_reweight(self.weights, self.probs, chosen, payoff, self.gamma)
        top = self.weights.max()
        if top > WEIGHT_CEILING:
            self.weights /= top
        self.probs = exp3_probs(self.weights, self.gamma)

    def observe(self, feedback: Feedback, t: int = 0) -> None:
        self.update(self.last_action, feedback.payoff)


# ---------------------------------------------------------------------------
# RLA


def rla_explore_probability(t: int, num_users: int, gamma: float) -> float:
    """``t ** -(1/(2M) - gamma/M)``; equals 1 at ``t = 1``."""
    return float(t) ** -(1.0 / (2 * num_users) - gamma / num_users)


def rla_estimate(sample_means: np.ndarray, allocations: np.ndarray | None = None) -> tuple:
    """Allocation maximising ``sum_j k_j u[j, k_j]`` under sample-mean payoffs.

    ``sample_means`` has shape ``(N, M)``; unplayed arms hold 0.  Ties go to
    the first allocation in enumeration order.
    """
    n, m = sample_means.shape
    if allocations is None:
        allocations = enumerate_allocations(m, n)
    table = value_table(sample_means)
    scores = table[np.arange(n), allocations].sum(axis=1)
    return tuple(int(x) for x in allocations[int(np.argmax(scores))])


class RlaAgent:
    """Randomized learning over (channel, occupancy) arms.

    Needs the occupancy of its channel after every round.  The action for
    round ``t + 1`` is chosen while observing round ``t``: with probability
    ``rla_explore_probability(t)`` uniformly over all channels, otherwise it
    stays when the channel is in the estimated optimal support and the
    observed occupancy matches the estimate there, and otherwise it picks
    uniformly within the estimated support.
    """

    kind = "rla"

    def __init__(self, num_channels: int, num_users: int, gamma: float, rng):
        if num_users < 1:
            raise ValueError("RLA needs the number of users")
        if not 0.0 < gamma < 0.5:
            raise ValueError(f"gamma_rla must be in (0, 1/2), got {gamma}")
        self.num_channels = num_channels
        self.num_users = num_users
        self.gamma = gamma
        self.rng = rng
        self.allocations = enumerate_allocations(num_users, num_channels)
        self._rows = np.arange(num_channels)
        self.reset()

    def reset(self):
        n, m = self.num_channels, self.num_users
        self.sample_means = np.zeros((n, m))
        self.counts = np.zeros((n, m), dtype=np.int64)
        self._table = np.zeros((n, m + 1))
        self.k_hat = tuple(int(x) for x in self.allocations[0])
        self.support = np.flatnonzero(self.allocations[0])
        self.last_action = None
        self.last_occupancy = None
        self._next = int(self.rng.integers(n))
        self.explored = True

    def act(self, t: int = 0) -> int:
        self.last_action = self._next
        return self.last_action

    def observe(self, feedback: Feedback, t: int) -> None:
        if feedback.occupancy is None:
            raise ValueError("RLA needs the observed occupancy")
        j, l = self.last_action, int(feedback.occupancy)
        self.last_occupancy = l
        c = self.counts[j, l - 1] + 1
        u = self.sample_means[j, l - 1]
        u = (u * (c - 1) + feedback.payoff) / c
        self.counts[j, l - 1] = c
        self.sample_means[j, l - 1] = u
        self._table[j, l] = l * u

        scores = self._table[self._rows, self.allocations].sum(axis=1)
        best = self.allocations[int(np.argmax(scores))]
        self.k_hat = tuple(best.tolist())
        self.support = np.flatnonzero(best)

        if self.rng.random() < rla_explore_probability(t, self.num_users, self.gamma):
            self.explored = True
            self._next = int(self.rng.integers(self.num_channels))
            return
        self.explored = False
        if best[j] > 0 and l == best[j]:
            self._next = j
        else:
            self._next = int(self.support[self.rng.integers(self.support.size)])


# ---------------------------------------------------------------------------
# RS


class RsAgent:
    """Random selection for constant rates and strictly decreasing interference.

    Learning phase: play uniformly and collect the distinct payoffs seen on
    each channel.  Once ``M * N`` distinct values are known, the sorted
    values give every ``mu_j g_j(n)`` exactly; the agent computes the optimal
    per-channel payoffs and from then on stays while its payoff reaches the
    optimal level of its channel, re-randomizing otherwise.  Channels left
    empty by the optimum get an infinite threshold.
    """

    kind = "rs"

    def __init__(self, num_channels: int, num_users: int, rng):
        if num_users < 1:
            raise ValueError("RS needs the number of users")
        self.num_channels = num_channels
        self.num_users = num_users
        self.rng = rng
        self.reset()

    def reset(self):
        self.observed = [set() for _ in range(self.num_channels)]
        self.distinct = 0
        self.exploiting = False
        self.thresholds = None
        self.learned_values = None
        self.learned_optimum = None
        self.learned_at = None
        self.last_action = None
        self._next = int(self.rng.integers(self.num_channels))
        self.explored = True

    @property
    def phase(self) -> str:
        return "exploiting" if self.exploiting else "learning"

    def ordered(self, channel: int) -> list:
        return sorted(self.observed[channel], reverse=True)

    def act(self, t: int = 0) -> int:
        self.last_action = self._next
        return self.last_action

    def _finish_learning(self, t):
        table = np.array([self.ordered(j) for j in range(self.num_channels)])
        sol = optimal_from_values(table)
        self.learned_values = table
        self.learned_optimum = sol
        self.thresholds = np.where(np.isnan(sol.v_star_j), np.inf, sol.v_star_j)
        self.exploiting = True
        self.learned_at = t

    def observe(self, feedback: Feedback, t: int = 0) -> None:
        j, h = self.last_action, feedback.payoff
        if not self.exploiting:
            seen = self.observed[j]
            if h not in seen:
                if len(seen) >= self.num_users:
                    raise ValueError(
                        f"channel {j} produced more than M={self.num_users} distinct payoffs; "
                        "rates are not constant or interference is not user-independent"
                    )
                seen.add(h)
                self.distinct += 1
            if self.distinct == self.num_users * self.num_channels:
                self._finish_learning(t)
            self.explored = True
            self._next = int(self.rng.integers(self.num_channels))
            return
        if h < self.thresholds[j]:
            self.explored = True
            self._next = int(self.rng.integers(self.num_channels))
        else:
            self.explored = False
            self._next = j


# ---------------------------------------------------------------------------


def make_agent(kind: str, params: dict, info: dict, rng):
    """Build a fresh agent.

    ``info`` carries what the user is allowed to know: ``num_channels``
    always, ``num_users`` for RLA and RS.
    """
    n = int(info["num_channels"])
    params = dict(params)
    if kind == "exp3":
        gamma = params.pop("gamma_exp3", 0.01)
        agent = Exp3Agent(n, gamma, rng)
    elif kind == "rla":
        if "num_users" not in info:
            raise ValueError("RLA agents need num_users")
        gamma = params.pop("gamma_rla", 0.02)
        agent = RlaAgent(n, int(info["num_users"]), gamma, rng)
    elif kind == "rs":
        if "num_users" not in info:
            raise ValueError("RS agents need num_users")
        agent = RsAgent(n, int(info["num_users"]), rng)
    else:
        raise ValueError(f"unknown agent kind {kind!r}")
    if params:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(params)}")
    return agent
