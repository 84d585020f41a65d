import itertools

import numpy as np
import pytest

from chanlearn.game import GameSpec, homogeneous


@pytest.fixture
def ref_spec():
    # mu = (1.0, 0.6), g = (1, 0.7) on both channels; k* = (1, 1), v* = 1.6
    return homogeneous([1.0, 0.6], [1.0, 0.7], rate_kind="constant", name="ref")


def brute_force_optimum(spec: GameSpec):
    """Best occupancy over all N**M profiles, computed user by user (no allocation code)."""
    m, n = spec.num_users, spec.num_channels
    best, best_occ = -np.inf, set()
    for prof in itertools.product(range(n), repeat=m):
        counts = [prof.count(j) for j in range(n)]
        w = sum(spec.means[j] * spec.interference[j][counts[j] - 1] for j in prof)
        occ = tuple(counts)
        if w > best + 1e-12:
            best, best_occ = w, {occ}
        elif abs(w - best) <= 1e-12:
            best_occ.add(occ)
    return best, best_occ


def random_instances(seed, count, max_users=4, max_channels=4, **kwargs):
    from chanlearn.game import random_spec

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(1, max_users + 1))
        n = int(rng.integers(1, max_channels + 1))
        out.append(random_spec(rng, m, n, **kwargs))
    return out
