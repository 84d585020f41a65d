"""Channel-sharing environment: game specification, allocations and welfare.

Channels and users are indexed from 0 internally.  An *allocation* is an
occupancy vector ``k`` of length ``N`` summing to ``M``; an *action profile*
is a length-``M`` vector of channel indices.  The interference table ``g`` has
shape ``(N, M)`` with ``g[j, n - 1]`` the multiplier when ``n`` users share
channel ``j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

RATE_KINDS = ("bernoulli", "uniform", "constant")

#: Largest allocation set the exact oracle will enumerate.
ALLOCATION_CAP = 2_000_000

#: Welfare differences below this are treated as ties.
TIE_TOL = 1e-12


class InstanceTooLarge(ValueError):
    """Raised when an exhaustive search would exceed its configured cap."""


class NonUniqueOptimum(ValueError):
    """Raised when the socially optimal allocation is not unique."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GameSpec:
    """M users sharing N channels with mean rates and interference tables.

    Parameters
    ----------
    means : sequence of float
        Mean rate of each channel, in ``[0, 1]``.
    interference : array_like, shape (N, M)
        ``interference[j][n - 1]`` is ``g_j(n)``, in ``[0, 1]``.
    rate_kind : {"bernoulli", "uniform", "constant"}
        Distribution of the iid per-step channel rate.
    case3 : bool
        Require the constant-rate, strictly decreasing setting in which
        every channel yields ``M`` distinct payoffs.
    name : str
        Free-form identifier carried into traces.
    """

    means: np.ndarray
    interference: np.ndarray
    rate_kind: str = "bernoulli"
    case3: bool = False
    name: str = ""
    _values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        means = _frozen(self.means)
        g = _frozen(np.atleast_2d(self.interference))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "interference", g)
        if means.ndim != 1 or means.size < 1:
            raise ValueError("means must be a non-empty vector")
        if g.shape[0] != means.size or g.shape[1] < 1:
            raise ValueError(
                f"interference must have shape (N, M) with N={means.size}, got {g.shape}"
            )
        if np.any(means < 0) or np.any(means > 1) or not np.all(np.isfinite(means)):
            raise ValueError("means must lie in [0, 1]")
        if np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
            raise ValueError("interference values must lie in [0, 1]")
        if self.rate_kind not in RATE_KINDS:
            raise ValueError(f"rate_kind must be one of {RATE_KINDS}, got {self.rate_kind!r}")
        if self.case3:
            check_case3(means, g, self.rate_kind)
        object.__setattr__(self, "_values", _frozen(means[:, None] * g))

    @property
    def num_users(self) -> int:
        return self.interference.shape[1]

    @property
    def num_channels(self) -> int:
        return self.means.size

    @property
    def values(self) -> np.ndarray:
        """Per-user expected payoff table ``v[j, n - 1] = mu_j g_j(n)``."""
        return self._values

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        return (
            np.array_equal(self.means, other.means)
            and np.array_equal(self.interference, other.interference)
            and self.rate_kind == other.rate_kind
            and self.case3 == other.case3
            and self.name == other.name
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_users": self.num_users,
            "num_channels": self.num_channels,
            "means": self.means.tolist(),
            "interference": self.interference.tolist(),
            "rate_kind": self.rate_kind,
            "case3": self.case3,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameSpec":
        known = {"name", "num_users", "num_channels", "means", "interference", "rate_kind", "case3"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown game spec keys: {sorted(extra)}")
        spec = cls(
            means=d["means"],
            interference=d["interference"],
            rate_kind=d.get("rate_kind", "bernoulli"),
            case3=bool(d.get("case3", False)),
            name=d.get("name", ""),
        )
        for key, actual in (("num_users", spec.num_users), ("num_channels", spec.num_channels)):
            if key in d and int(d[key]) != actual:
                raise ValueError(f"{key}={d[key]} disagrees with table shape ({actual})")
        return spec


def check_case3(means, g, rate_kind) -> None:
    """Validate the constant-rate, strictly decreasing interference setting."""
    if rate_kind != "constant":
        raise ValueError("case-3 specs need rate_kind='constant'")
    if np.any(np.asarray(means) <= 0):
        raise ValueError("case-3 specs need strictly positive means")
    g = np.asarray(g)
    if g.shape[1] > 1 and np.any(np.diff(g, axis=1) >= 0):
        raise ValueError("case-3 specs need strictly decreasing interference")
    payoffs = np.asarray(means)[:, None] * g
    if payoffs.shape[1] > 1 and np.any(np.diff(payoffs, axis=1) >= 0):
        raise ValueError("case-3 specs need distinct payoffs on every channel")


def save_spec(spec: GameSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def load_spec(path) -> GameSpec:
    """Read a spec from JSON; a full experiment config is accepted too."""
    d = json.loads(Path(path).read_text())
    if "spec" in d:
        d = d["spec"]
    return GameSpec.from_dict(d)


# ---------------------------------------------------------------------------
# Interference presets


def collision(num_users: int) -> np.ndarray:
    """Any sharing destroys the channel: g(1) = 1, g(n > 1) = 0."""
    g = np.zeros(num_users)
    g[0] = 1.0
    return g


def fair_sharing(num_users: int) -> np.ndarray:
    """Users split the rate evenly: g(n) = 1 / n."""
    return 1.0 / np.arange(1, num_users + 1)


def snr_interference(num_users: int, snr: float = 10.0) -> np.ndarray:
    """Shannon-rate interference normalised so that g(1) = 1.

    ``g(n) = log2(1 + P / (N0 + (n - 1) P)) / log2(1 + P / N0)`` with
    ``snr = P / N0``.
    """
    n = np.arange(1, num_users + 1)
    sinr = snr / (1.0 + (n - 1) * snr)
    return np.log2(1 + sinr) / np.log2(1 + snr)


def homogeneous(means: Sequence[float], g: Sequence[float], **kwargs) -> GameSpec:
    """Spec whose channels all share one interference function."""
    means = np.asarray(means, dtype=float)
    return GameSpec(means=means, interference=np.tile(np.asarray(g, float), (means.size, 1)), **kwargs)


def reference_spec(rate_kind: str = "bernoulli") -> GameSpec:
    """The 2x2 instance used throughout the tests: k* = (1, 1), v* = 1.6."""
    return homogeneous([1.0, 0.6], [1.0, 0.7], rate_kind=rate_kind, name="reference-2x2")


def random_spec(rng, num_users: int, num_channels: int, *, case3: bool = False,
                rate_kind: str | None = None, name: str = "") -> GameSpec:
    """Draw means and interference uniformly from [0, 1].

    With ``case3`` the interference rows are sorted decreasing and rates are
    constant; zero-probability ties make the draw valid almost surely.
    """
    means = rng.uniform(0.0, 1.0, num_channels)
    g = rng.uniform(0.0, 1.0, (num_channels, num_users))
    if case3:
        g = -np.sort(-g, axis=1)
        means = 1.0 - means  # (0, 1]
        rate_kind = "constant"
    return GameSpec(means=means, interference=g, rate_kind=rate_kind or "bernoulli",
                    case3=case3, name=name)


# ---------------------------------------------------------------------------
# Profiles, rates and payoffs


def occupancy(profile, num_channels: int) -> np.ndarray:
    """Occupancy vector ``K_j(sigma)`` of an action profile."""
    return np.bincount(np.asarray(profile, dtype=np.intp), minlength=num_channels)


def count_users(profile, channel: int) -> int:
    return int(np.count_nonzero(np.asarray(profile) == channel))


def sample_rates(spec: GameSpec, rng) -> np.ndarray:
    """Draw one rate per channel from the spec's iid rate process."""
    mu = spec.means
    if spec.rate_kind == "constant":
        return mu.copy()
    if spec.rate_kind == "bernoulli":
        return (rng.random(mu.size) < mu).astype(float)
    lo = np.maximum(0.0, 2 * mu - 1)
    hi = np.minimum(1.0, 2 * mu)
    return lo + (hi - lo) * rng.random(mu.size)


def realized_payoffs(spec: GameSpec, profile, rates) -> np.ndarray:
    """Payoff ``r_j g_j(n_j)`` each user receives from its chosen channel."""
    profile = np.asarray(profile, dtype=np.intp)
    counts = occupancy(profile, spec.num_channels)
    return np.asarray(rates)[profile] * spec.interference[profile, counts[profile] - 1]


def profile_welfare(spec: GameSpec, profile) -> float:
    """Sum of users' expected payoffs, computed user by user."""
    profile = np.asarray(profile, dtype=np.intp)
    counts = occupancy(profile, spec.num_channels)
    return float(spec.values[profile, counts[profile] - 1].sum())


# ---------------------------------------------------------------------------
# Allocations


def num_allocations(num_users: int, num_channels: int) -> int:
    return math.comb(num_users + num_channels - 1, num_channels - 1)


@lru_cache(maxsize=64)
def _allocations(m: int, n: int) -> np.ndarray:
    if n == 1:
        return np.array([[m]], dtype=np.intp)
    blocks = []
    for first in range(m, -1, -1):
        rest = _allocations(m - first, n - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.intp), rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def enumerate_allocations(num_users: int, num_channels: int, cap: int = ALLOCATION_CAP) -> np.ndarray:
    """All occupancy vectors, first coordinate descending.

    Returns an ``(C(M+N-1, N-1), N)`` integer array whose first row is
    ``(M, 0, ..., 0)``; that order is the tie-break order used everywhere.
    """
    if num_users < 1 or num_channels < 1:
        raise ValueError("need at least one user and one channel")
    count = num_allocations(num_users, num_channels)
    if count > cap:
        raise InstanceTooLarge(
            f"{count} allocations for M={num_users}, N={num_channels} exceeds cap {cap}"
        )
    return _allocations(num_users, num_channels)


def value_table(values: np.ndarray) -> np.ndarray:
    """Pad an ``(N, M)`` per-user payoff table to ``k * v[k]`` with a zero column."""
    n, m = values.shape
    out = np.zeros((n, m + 1))
    out[:, 1:] = values * np.arange(1, m + 1)
    return out


def allocation_welfare(values: np.ndarray, allocations: np.ndarray) -> np.ndarray:
    """Welfare ``sum_j k_j v_j(k_j)`` of each row of ``allocations``."""
    table = value_table(values)
    return table[np.arange(values.shape[0]), allocations].sum(axis=-1)


def social_welfare(spec: GameSpec, k) -> float:
    k = np.asarray(k, dtype=np.intp)
    if k.sum() != spec.num_users or np.any(k < 0):
        raise ValueError(f"{tuple(k)} is not an allocation of {spec.num_users} users")
    return float(allocation_welfare(spec.values, k))


@dataclass(frozen=True)
class OptimalSolution:
    k_star: tuple
    v_star: float
    v_star_j: np.ndarray  # nan on channels left empty by k_star
    z_star: int
    margin: float  # 0.0 when the optimum is tied
    ties: tuple = ()  # every allocation within TIE_TOL of v_star, k_star first

    @property
    def unique(self) -> bool:
        return len(self.ties) == 1

    def to_dict(self) -> dict:
        return {
            "k_star": list(self.k_star),
            "v_star": self.v_star,
            "v_star_j": [None if np.isnan(v) else float(v) for v in self.v_star_j],
            "z_star": self.z_star,
            "margin": self.margin,
            "ties": [list(t) for t in self.ties],
        }


def optimal_from_values(values: np.ndarray, cap: int = ALLOCATION_CAP) -> OptimalSolution:
    """Exact argmax over allocations for an arbitrary per-user payoff table."""
    n, m = values.shape
    allocs = enumerate_allocations(m, n, cap)
    w = allocation_welfare(values, allocs)
    best = int(np.argmax(w))
    v_star = float(w[best])
    gaps = v_star - w
    tied = gaps <= TIE_TOL
    k_star = allocs[best]
    v_j = np.full(n, np.nan)
    occupied = k_star > 0
    v_j[occupied] = values[occupied, k_star[occupied] - 1]
    suboptimal = gaps[~tied]
    if np.count_nonzero(tied) > 1:
        margin = 0.0
    elif suboptimal.size == 0:
        margin = math.inf
    else:
        margin = float(suboptimal.min() / (2 * m))
    return OptimalSolution(
        k_star=tuple(int(x) for x in k_star),
        v_star=v_star,
        v_star_j=v_j,
        z_star=int(np.count_nonzero(occupied)),
        margin=margin,
        ties=tuple(tuple(int(x) for x in allocs[i]) for i in np.flatnonzero(tied)),
    )


def socially_optimal(spec: GameSpec, cap: int = ALLOCATION_CAP) -> OptimalSolution:
    """Socially optimal allocation; ties go to the first allocation in order."""
    return optimal_from_values(spec.values, cap)


def stability_margin(spec: GameSpec, cap: int = ALLOCATION_CAP) -> float:
    """Certified sup-norm radius around ``spec.values`` that keeps ``k*`` optimal.

    A perturbation of at most ``eps`` per table entry moves the welfare of
    any allocation by at most ``M eps``, so ``min_gap / (2 M)`` is safe.
    Returns ``inf`` when there is only one allocation.
    """
    sol = socially_optimal(spec, cap)
    if not sol.unique:
        raise NonUniqueOptimum(f"optimum is tied between {list(sol.ties)}")
    return sol.margin
