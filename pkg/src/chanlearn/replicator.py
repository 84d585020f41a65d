"""Replicator dynamics: the small-step limit of every user running Exp3.

A mixed profile ``p`` is an ``(M, N)`` row-stochastic array.  The expected
interference a user meets on a channel depends on how many *other* users
pick it, a Poisson-binomial count that is computed exactly by convolution.

Two forms of the field are provided.  ``"expected-payoff"`` (the default) is

    xi_ij = (1/N) p_ij sum_l p_il (mu_j gbar_ij - mu_l gbar_il),

which is the mean one-step Exp3 increment divided by its exploration rate
and is tangent to the simplex.  ``"factored"`` pulls ``mu_j`` outside the sum,

    xi_ij = (1/N) mu_j p_ij sum_l p_il (gbar_ij - gbar_il);

it coincides with the first when all means are equal but otherwise has
non-zero row sums, reported by :func:`row_sum_defect`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .congestion import is_pne
from .game import GameSpec

FORMS = ("expected-payoff", "factored")

CONVERGE_TOL = 1e-9
PURITY_TOL = 1e-6
EIG_TOL = 1e-6


def check_profile(p, num_users: int, num_channels: int, tol: float = 1e-10) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (num_users, num_channels):
        raise ValueError(f"mixed profile must have shape {(num_users, num_channels)}, got {p.shape}")
    if np.any(p < -tol) or np.any(np.abs(p.sum(axis=1) - 1) > tol):
        raise ValueError("rows of a mixed profile must be probability vectors")
    return p


def poisson_binomial_pmf(probs) -> np.ndarray:
    """Distribution of a sum of independent Bernoulli(probs) variables."""
    pmf = np.ones(1)
    for q in np.asarray(probs, dtype=float):
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1 - q)
        nxt[1:] += pmf * q
        pmf = nxt
    return pmf


def expected_interference(spec: GameSpec, p, user: int, channel: int) -> float:
    """``E[g_j(1 + #others on j)]`` for ``user`` choosing ``channel``."""
    p = np.asarray(p, dtype=float)
    others = np.delete(p[:, channel], user)
    pmf = poisson_binomial_pmf(others)
    return float(pmf @ spec.interference[channel, : pmf.size])


def _others_pmf(p: np.ndarray) -> np.ndarray:
    """``out[i, j, k] = P(k users other than i pick j)`` for all users at once."""
    m, n = p.shape
    pmf = np.zeros((m, n, m))
    pmf[:, :, 0] = 1.0
    for other in range(m):
        q = p[other]  # (N,)
        shifted = np.zeros_like(pmf)
        shifted[:, :, 1:] = pmf[:, :, :-1]
        upd = pmf * (1 - q)[None, :, None] + shifted * q[None, :, None]
        mask = np.arange(m) != other
        pmf[mask] = upd[mask]
    return pmf


def interference_matrix(spec: GameSpec, p) -> np.ndarray:
    """``gbar[i, j]`` for every user and channel."""
    pmf = _others_pmf(np.asarray(p, dtype=float))
    return np.einsum("ijk,jk->ij", pmf, spec.interference)


def replicator_rhs(spec: GameSpec, p, form: str = "expected-payoff") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    gbar = interference_matrix(spec, p)
    n = spec.num_channels
    if form == "expected-payoff":
        u = spec.means * gbar
        avg = (p * u).sum(axis=1, keepdims=True)
        return p * (u - avg) / n
    if form == "factored":
        avg = (p * gbar).sum(axis=1, keepdims=True)
        return spec.means * p * (gbar - avg) / n
    raise ValueError(f"form must be one of {FORMS}")


def row_sum_defect(spec: GameSpec, p, form: str = "expected-payoff") -> float:
    """Largest absolute row sum of the field; zero means tangent to the simplex."""
    return float(np.abs(replicator_rhs(spec, p, form).sum(axis=1)).max())


def expected_potential(spec: GameSpec, p) -> float:
    """Expected Rosenthal potential when users sample independently from ``p``."""
    p = np.asarray(p, dtype=float)
    cum = np.zeros((spec.num_channels, spec.num_users + 1))
    cum[:, 1:] = np.cumsum(spec.values, axis=1)
    total = 0.0
    for j in range(spec.num_channels):
        total += poisson_binomial_pmf(p[:, j]) @ cum[j]
    return float(total)


def project_simplex_rows(p: np.ndarray) -> np.ndarray:
    q = np.clip(p, 0.0, None)
    return q / q.sum(axis=1, keepdims=True)


@dataclass
class TrajectoryResult:
    final: np.ndarray
    converged: bool
    limit_kind: str  # pure-PNE, pure-non-PNE, mixed, not-converged
    potential: list = field(default_factory=list)
    times: list = field(default_factory=list)
    steps: int = 0
    field_norm: float = np.nan


def classify_limit(spec: GameSpec, p: np.ndarray, converged: bool,
                   purity_tol: float = PURITY_TOL) -> str:
    if not converged:
        return "not-converged"
    if np.all(p.max(axis=1) >= 1 - purity_tol):
        return "pure-PNE" if is_pne(spec, p.argmax(axis=1)) else "pure-non-PNE"
    return "mixed"


def integrate(spec: GameSpec, start, step: float = 1.0, horizon: float = 1e5,
              form: str = "expected-payoff", tol: float = CONVERGE_TOL,
              record_every: int = 1) -> TrajectoryResult:
    """Fixed-step RK4 with row-wise simplex projection after every step.

    Stops as soon as ``max |xi| < tol``.  The expected potential is recorded
    every ``record_every`` steps and at the end.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    p = check_profile(start, spec.num_users, spec.num_channels).copy()
    f = lambda x: replicator_rhs(spec, x, form)
    pot, times = [expected_potential(spec, p)], [0.0]
    max_steps = int(np.ceil(horizon / step))
    k1 = f(p)
    norm = float(np.abs(k1).max())
    steps = 0
    while norm >= tol and steps < max_steps:
        k2 = f(p + 0.5 * step * k1)
        k3 = f(p + 0.5 * step * k2)
        k4 = f(p + step * k3)
        p = project_simplex_rows(p + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
        if not np.all(np.isfinite(p)):
            raise FloatingPointError(f"non-finite profile after {steps} steps; reduce the step")
        steps += 1
        k1 = f(p)
        norm = float(np.abs(k1).max())
        if steps % record_every == 0:
            pot.append(expected_potential(spec, p))
            times.append(steps * step)
    if steps % record_every:
        pot.append(expected_potential(spec, p))
        times.append(steps * step)
    converged = norm < tol
    return TrajectoryResult(
        final=p, converged=converged, limit_kind=classify_limit(spec, p, converged),
        potential=pot, times=times, steps=steps, field_norm=norm,
    )


def _tangent_basis(n: int) -> np.ndarray:
    """Orthonormal basis (N, N-1) of the zero-sum subspace of R^N."""
    if n == 1:
        return np.zeros((1, 0))
    q, _ = np.linalg.qr(np.eye(n) - 1.0 / n)
    return q[:, : n - 1]


def numeric_jacobian(spec: GameSpec, p, h: float = 1e-6, form: str = "expected-payoff") -> np.ndarray:
    """Central-difference Jacobian of the flattened field, shape (M N, M N)."""
    p = np.asarray(p, dtype=float)
    x0 = p.ravel()
    jac = np.empty((x0.size, x0.size))
    for c in range(x0.size):
        e = np.zeros_like(x0)
        e[c] = h
        hi = replicator_rhs(spec, (x0 + e).reshape(p.shape), form).ravel()
        lo = replicator_rhs(spec, (x0 - e).reshape(p.shape), form).ravel()
        jac[:, c] = (hi - lo) / (2 * h)
    return jac


def jacobian_stability(spec: GameSpec, p, tol: float = EIG_TOL, form: str = "expected-payoff"):
    """Classify a fixed point as ``stable``, ``unstable`` or ``degenerate``.

    Eigenvalues are taken of the Jacobian restricted to the product of the
    users' simplex tangent spaces.  Returns ``(label, eigenvalues)``.
    """
    p = np.asarray(p, dtype=float)
    if np.abs(replicator_rhs(spec, p, form)).max() >= CONVERGE_TOL:
        raise ValueError("profile is not a fixed point of the replicator field")
    m, n = p.shape
    basis = np.kron(np.eye(m), _tangent_basis(n))  # (M N, M (N - 1))
    jac = numeric_jacobian(spec, p, form=form)
    eig = np.linalg.eigvals(basis.T @ jac @ basis)
    re = eig.real
    if np.any(re > tol):
        label = "unstable"
    elif np.any(np.abs(re) <= tol):
        label = "degenerate"
    else:
        label = "stable"
    return label, eig
