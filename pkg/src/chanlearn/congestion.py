"""Pure-strategy equilibria of the one-shot channel congestion game.

Each user's utility is ``mu_j g_j(K_j)`` on its channel ``j``.  The game has
the Rosenthal potential ``sum_j sum_{l <= K_j} mu_j g_j(l)``, whose change
under a unilateral move equals the mover's change in utility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .game import GameSpec, InstanceTooLarge, occupancy, socially_optimal

#: A deviation must gain more than this to count as improving.
IMPROVE_TOL = 1e-12

PROFILE_CAP = 1_000_000


def expected_utility(spec: GameSpec, profile, user: int) -> float:
    profile = np.asarray(profile, dtype=np.intp)
    j = profile[user]
    n = np.count_nonzero(profile == j)
    return float(spec.values[j, n - 1])


def _cumulative_values(spec: GameSpec) -> np.ndarray:
    cum = np.zeros((spec.num_channels, spec.num_users + 1))
    cum[:, 1:] = np.cumsum(spec.values, axis=1)
    return cum


def rosenthal_potential(spec: GameSpec, profile) -> float:
    counts = occupancy(profile, spec.num_channels)
    cum = _cumulative_values(spec)
    return float(cum[np.arange(spec.num_channels), counts].sum())


def improving_moves(spec: GameSpec, profile) -> list[tuple[int, int]]:
    """All ``(user, channel)`` unilateral moves that strictly raise the mover's utility."""
    profile = np.asarray(profile, dtype=np.intp)
    counts = occupancy(profile, spec.num_channels)
    v = spec.values
    m = spec.num_users
    # payoff of joining channel j from outside: v[j, counts[j]] (index = new count - 1)
    join = np.where(counts < m, v[np.arange(spec.num_channels), np.minimum(counts, m - 1)], -np.inf)
    moves = []
    for i, j in enumerate(profile):
        current = v[j, counts[j] - 1]
        for c in np.flatnonzero(join > current + IMPROVE_TOL):
            if c != j:
                moves.append((i, int(c)))
    return moves


def is_pne(spec: GameSpec, profile) -> bool:
    return not improving_moves(spec, profile)


def all_profiles(num_users: int, num_channels: int, cap: int = PROFILE_CAP) -> np.ndarray:
    """Every action profile as rows of an ``(N**M, M)`` array, lexicographic."""
    total = num_channels ** num_users
    if total > cap:
        raise InstanceTooLarge(f"{total} profiles for M={num_users}, N={num_channels} exceeds cap {cap}")
    grids = np.indices((num_channels,) * num_users).reshape(num_users, -1).T
    return grids.astype(np.intp)


def _profile_counts(profiles: np.ndarray, num_channels: int) -> np.ndarray:
    return (profiles[:, :, None] == np.arange(num_channels)).sum(axis=1)


@dataclass(frozen=True)
class EquilibriumReport:
    pne_profiles: np.ndarray  # (P, M)
    pne_occupancies: tuple  # distinct occupancy vectors, first-seen order
    potential_values: np.ndarray  # (P,)
    contains_optimum: bool

    def to_jsonl(self, num_channels: int) -> str:
        lines = []
        for prof, pot in zip(self.pne_profiles, self.potential_values):
            lines.append(json.dumps({
                "profile": [int(x) for x in prof],
                "occupancy": occupancy(prof, num_channels).tolist(),
                "potential": float(pot),
            }))
        lines.append(json.dumps({
            "pne_occupancies": [list(k) for k in self.pne_occupancies],
            "contains_optimum": self.contains_optimum,
        }))
        return "\n".join(lines) + "\n"


def enumerate_pne(spec: GameSpec, cap: int = PROFILE_CAP) -> EquilibriumReport:
    """Exhaustive scan of all ``N**M`` profiles for pure Nash equilibria."""
    m, n = spec.num_users, spec.num_channels
    profiles = all_profiles(m, n, cap)
    counts = _profile_counts(profiles, n)
    v = spec.values
    # own payoff of each user in each profile
    own = v[profiles, np.take_along_axis(counts, profiles, axis=1) - 1]
    # payoff from moving to channel c: v[c, counts[c]]; only defined when counts[c] < M
    padded = np.concatenate([v, np.full((n, 1), -np.inf)], axis=1)
    join = padded[np.arange(n), counts]  # (P, N)
    onehot = profiles[:, :, None] == np.arange(n)
    gain = np.where(onehot, -np.inf, join[:, None, :]) - own[:, :, None]
    stable = ~np.any(gain > IMPROVE_TOL, axis=(1, 2))
    pne = profiles[stable]
    cum = _cumulative_values(spec)
    pot = cum[np.arange(n), counts[stable]].sum(axis=1)
    occs = []
    for row in counts[stable]:
        t = tuple(int(x) for x in row)
        if t not in occs:
            occs.append(t)
    optimum = set(socially_optimal(spec).ties)
    return EquilibriumReport(
        pne_profiles=pne,
        pne_occupancies=tuple(occs),
        potential_values=pot,
        contains_optimum=any(k in optimum for k in occs),
    )


def best_response_path(spec: GameSpec, start, rng, max_steps: int | None = None) -> list[np.ndarray]:
    """Asynchronous better-reply dynamics from ``start`` until no user can improve.

    At each step a uniformly random user among those with an improving move
    switches to a uniformly random one of its improving channels.  The path
    includes ``start`` and ends at a pure Nash equilibrium.
    """
    profile = np.array(start, dtype=np.intp)
    path = [profile.copy()]
    limit = max_steps if max_steps is not None else spec.num_channels ** spec.num_users
    while True:
        moves = improving_moves(spec, profile)
        if not moves:
            return path
        if len(path) > limit:
            raise RuntimeError("better-reply path exceeded the number of profiles")
        users = sorted({i for i, _ in moves})
        i = users[rng.integers(len(users))]
        options = [c for u, c in moves if u == i]
        profile[i] = options[rng.integers(len(options))]
        path.append(profile.copy())
