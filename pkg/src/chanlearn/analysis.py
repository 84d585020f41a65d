"""Regret curves, growth exponents and the bound quantities behind RLA's regret.

Combinatorial quantities are evaluated in exact integer/rational arithmetic
and converted to float only at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np


@dataclass
class RunTrace:
    """Per-step record of one simulated run.

    ``occupancy`` is ``(n, N)``; ``explored`` is ``(n, M)`` and flags users whose
    action that round came from a uniform randomization outside exploitation.
    """

    occupancy: np.ndarray
    realized_welfare: np.ndarray
    expected_welfare: np.ndarray
    explored: np.ndarray
    seed: int = 0
    spec_id: str = ""

    def __post_init__(self):
        n = len(self.realized_welfare)
        if not (len(self.occupancy) == len(self.expected_welfare) == len(self.explored) == n):
            raise ValueError("trace columns must have equal length")

    def __len__(self):
        return len(self.realized_welfare)

    def optimal_mask(self, k_star) -> np.ndarray:
        return np.all(self.occupancy == np.asarray(k_star), axis=1)


@dataclass
class RegretCurve:
    t: np.ndarray  # 1..n
    regret_expected: np.ndarray
    regret_realized: np.ndarray
    frac_optimal: np.ndarray  # running fraction of rounds at k*

    def at(self, times) -> "RegretCurve":
        """Subsample at the given 1-based times."""
        idx = np.asarray(times, dtype=np.intp) - 1
        return RegretCurve(self.t[idx], self.regret_expected[idx],
                           self.regret_realized[idx], self.frac_optimal[idx])


def regret(trace: RunTrace, v_star: float, k_star=None) -> RegretCurve:
    """Cumulative ``t v* - sum welfare`` for expected and realized welfare."""
    n = len(trace)
    t = np.arange(1, n + 1)
    reg_e = np.cumsum(v_star - trace.expected_welfare)
    reg_r = np.cumsum(v_star - trace.realized_welfare)
    if k_star is None:
        frac = np.full(n, np.nan)
    else:
        frac = np.cumsum(trace.optimal_mask(k_star)) / t
    return RegretCurve(t, reg_e, reg_r, frac)


def exponent_fit(t, values, window: float = 0.5) -> float:
    """Least-squares slope of ``log values`` against ``log t`` on the trailing window.

    ``window`` is the fraction of the time range kept, measured on the last
    time point (0.5 keeps ``t >= t_max / 2``).
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = t >= t[-1] * (1 - window)
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two points in the fit window")
    y = values[keep]
    if np.any(y <= 0):
        raise ValueError("regret must be positive over the fit window; report frac_optimal instead")
    slope, _ = np.polyfit(np.log(t[keep]), np.log(y), 1)
    return float(slope)


def hoeffding_bound(n: int, eps: float) -> float:
    """``exp(-2 n eps^2)``, the lower-tail bound for a mean of independent Bernoullis."""
    if n < 0 or eps < 0:
        raise ValueError("need n >= 0 and eps >= 0")
    return math.exp(-2.0 * n * eps * eps)


def lower_tail_frequency(q, eps: float, trials: int, rng) -> float:
    """Monte Carlo estimate of ``P(mean(X) - mean(q) <= -eps)`` for ``X_i ~ Bernoulli(q_i)``."""
    q = np.asarray(q, dtype=float)
    hits = 0
    chunk = max(1, min(trials, 2_000_000 // max(q.size, 1)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        x = rng.random((b, q.size)) < q
        hits += np.count_nonzero(x.mean(axis=1) - q.mean() <= -eps)
        done += b
    return hits / trials


def power_sum(n: int, p: float) -> float:
    t = np.arange(1, n + 1, dtype=float)
    return float(np.sum(t ** -p))


def power_sum_bounds(n: int, p: float):
    """``(lower, sum_{t<=n} t^-p, upper)`` with the integral-comparison bounds."""
    if p <= 0 or p == 1:
        raise ValueError("bounds need p > 0 and p != 1")
    if n < 1:
        raise ValueError("need n >= 1")
    lower = ((n + 1) ** (1 - p) - 1) / (1 - p)
    upper = 1 + (n ** (1 - p) - 1) / (1 - p)
    return lower, power_sum(n, p), upper


def occupancy_weight_exact(num_users: int, num_channels: int, l: int) -> Fraction:
    m, n = num_users, num_channels
    if n < 2:
        raise ValueError("occupancy weight needs N >= 2")
    if not 1 <= l <= m:
        raise ValueError("need 1 <= l <= M")
    return Fraction(math.comb(m - 1, l - 1) * math.comb(m + n - l - 2, n - 2),
                    math.comb(m + n - 1, n - 1))


def occupancy_weight(num_users: int, num_channels: int, l: int) -> float:
    """``C(M-1, l-1) C(M+N-l-2, N-2) / C(M+N-1, N-1)``.

    This is the share of allocations that put exactly ``l`` users (one of
    them a tagged user) on a given channel, divided by all allocations; it
    does not sum to one over ``l``.
    """
    return float(occupancy_weight_exact(num_users, num_channels, l))


def uniform_occupancy_probability(num_users: int, num_channels: int, l: int) -> float:
    """``P(a user picks channel j and finds l users there)`` when all play uniformly."""
    m, n = num_users, num_channels
    return float(Fraction(math.comb(m - 1, l - 1) * (n - 1) ** (m - l), n ** m))


def _tau_gap(t, occupancy_weights, eps, gamma, gamma_prime, a):
    t = mpmath.mpf(t)
    e = mpmath.mpf(0.5) + gamma
    log_term = a * mpmath.log(t) / (t * eps ** 2)
    rhs = t ** (mpmath.mpf(-0.5) + gamma_prime)
    return min(w * ((t + 1) ** e - 1) / (t * e) - log_term - rhs for w in occupancy_weights)


def tau_threshold(num_users: int, num_channels: int, eps: float, gamma: float,
                  gamma_prime: float, a: float = 1.0, cap: int = 10 ** 60) -> int:
    """Smallest ``t`` from which every occupancy weight clears the sampling requirement.

    For all ``l`` in ``1..M``::

        p_l ((t+1)^(1/2+gamma) - 1) / (t (1/2+gamma)) - a ln t / (t eps^2) >= t^(-1/2+gamma')

    The left side decays like ``t^(gamma-1/2)`` and the right like
    ``t^(gamma'-1/2)``, so the inequality fails for small ``t`` and holds past a
    single crossing.  The crossing is bracketed by doubling and located by
    bisection in 50-digit arithmetic.
    """
    if not 0 < gamma_prime < gamma:
        raise ValueError("need 0 < gamma' < gamma")
    if eps <= 0 or a <= 0:
        raise ValueError("need eps > 0 and a > 0")
    with mpmath.workdps(50):
        weights = []
        for l in range(1, num_users + 1):
            w = occupancy_weight_exact(num_users, num_channels, l)
            weights.append(mpmath.mpf(w.numerator) / w.denominator)
        args = (weights, mpmath.mpf(eps), mpmath.mpf(gamma), mpmath.mpf(gamma_prime), mpmath.mpf(a))
        ok = lambda t: _tau_gap(t, *args) >= 0
        if ok(1):
            return 1
        lo, hi = 1, 2
        while not ok(hi):
            lo, hi = hi, hi * 2
            if hi > cap:
                raise OverflowError(f"tau exceeds search cap {cap}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
    return hi


def settle_expectation_exact(num_users: int, z_star: int) -> int:
    if z_star < 1:
        raise ValueError("z* must be at least 1")
    return math.comb(num_users + z_star - 1, z_star - 1) - 1


def settle_expectation(num_users: int, z_star: int) -> float:
    """Expected failed settling rounds, ``C(M+z*-1, z*-1) - 1``."""
    return float(settle_expectation_exact(num_users, z_star))


def rla_explore_exponent(num_users: int, gamma: float) -> float:
    return 1.0 / (2 * num_users) - gamma / num_users


def bad_step_budget(n: int, num_users: int, gamma: float):
    """Expected number of rounds with at least one exploring RLA user, and its bound.

    Returns ``(exact, bound)`` where ``exact = sum_t 1 - (1 - t^-x)^M`` and
    ``bound = M * (1 + (n^(1-x) - 1) / (1 - x))`` with
    ``x = 1/(2M) - gamma/M``.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    x = rla_explore_exponent(num_users, gamma)
    t = np.arange(1, n + 1, dtype=float)
    exact = float(np.sum(1.0 - (1.0 - t ** -x) ** num_users))
    bound = num_users * power_sum_bounds(n, x)[2]
    return exact, bound


def regret_exponent_bound(num_users: int, gamma: float) -> float:
    """``(2M - 1 + 2 gamma) / (2M)``."""
    return (2 * num_users - 1 + 2 * gamma) / (2 * num_users)
