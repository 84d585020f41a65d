import itertools
import json

import numpy as np
import pytest

from chanlearn.congestion import (
    best_response_path,
    enumerate_pne,
    expected_utility,
    is_pne,
    rosenthal_potential,
)
from chanlearn.game import GameSpec, InstanceTooLarge, homogeneous, random_spec, socially_optimal

from conftest import random_instances


def test_expected_utility_examples():
    spec = homogeneous([1.0, 0.5], [1.0, 0.5])
    assert expected_utility(spec, (0, 0), 0) == 0.5
    assert expected_utility(spec, (0, 0), 1) == 0.5
    assert expected_utility(spec, (0, 1), 1) == 0.5
    three = homogeneous([0.8], [1.0, 0.5, 0.2])
    assert expected_utility(three, (0, 0, 0), 2) == pytest.approx(0.16)


def test_potential_examples():
    spec = homogeneous([1.0, 0.3], [1.0, 0.5])
    assert rosenthal_potential(spec, (0, 0)) == pytest.approx(1.5)
    single = GameSpec(means=[0.123, 0.4], interference=[[1.0], [0.9]])
    assert rosenthal_potential(single, (1,)) == pytest.approx(0.36)


def test_potential_identity_exhaustive():
    """Every unilateral move changes the potential by the mover's utility change."""
    for spec in random_instances(21, 100, max_users=3, max_channels=3):
        m, n = spec.num_users, spec.num_channels
        for prof in itertools.product(range(n), repeat=m):
            base = rosenthal_potential(spec, prof)
            for i in range(m):
                u_old = expected_utility(spec, prof, i)
                for c in range(n):
                    new = list(prof)
                    new[i] = c
                    d_pot = rosenthal_potential(spec, new) - base
                    d_u = expected_utility(spec, new, i) - u_old
                    assert abs(d_pot - d_u) <= 1e-12


def test_is_pne_examples():
    spec = homogeneous([1.0, 1.0], [1.0, 0.6])
    assert is_pne(spec, (0, 1))
    assert not is_pne(spec, (0, 0))
    single = GameSpec(means=[0.3, 0.9], interference=[[1.0], [1.0]])
    assert is_pne(single, (1,)) and not is_pne(single, (0,))


def test_enumerate_pne_split_example():
    rep = enumerate_pne(homogeneous([1.0, 1.0], [1.0, 0.6]))
    assert sorted(map(tuple, rep.pne_profiles)) == [(0, 1), (1, 0)]
    assert rep.pne_occupancies == ((1, 1),)
    assert rep.contains_optimum
    np.testing.assert_allclose(rep.potential_values, [2.0, 2.0])


def test_enumerate_pne_crowded_example():
    rep = enumerate_pne(homogeneous([1.0, 0.1], [1.0, 0.9]))
    assert rep.pne_occupancies == ((2, 0),)
    assert rep.contains_optimum


def test_optimum_need_not_be_an_equilibrium(ref_spec):
    # On the reference spec the second user on channel 0 gets 0.7 > 0.6.
    rep = enumerate_pne(ref_spec)
    assert rep.pne_occupancies == ((2, 0),)
    assert not rep.contains_optimum


def test_random_search_finds_inefficient_instances():
    rng = np.random.default_rng(8)
    hits = 0
    for _ in range(200):
        spec = random_spec(rng, 3, 3)
        rep = enumerate_pne(spec)
        for prof in rep.pne_profiles:
            assert is_pne(spec, prof)
        assert len(rep.pne_occupancies) >= 1
        hits += not rep.contains_optimum
    assert hits > 0


def test_pne_cap():
    with pytest.raises(InstanceTooLarge):
        enumerate_pne(random_spec(np.random.default_rng(0), 6, 5), cap=1000)


def test_best_response_path_properties():
    rng = np.random.default_rng(9)
    for spec in random_instances(10, 100, max_users=4, max_channels=4):
        start = rng.integers(spec.num_channels, size=spec.num_users)
        path = best_response_path(spec, start, rng)
        assert is_pne(spec, path[-1])
        pots = [rosenthal_potential(spec, p) for p in path]
        assert np.all(np.diff(pots) > 0)
        assert len(path) <= spec.num_channels ** spec.num_users


def test_path_from_equilibrium_is_trivial():
    spec = homogeneous([1.0, 1.0], [1.0, 0.6])
    path = best_response_path(spec, (0, 1), np.random.default_rng(0))
    assert len(path) == 1


def test_pne_set_equals_better_reply_fixed_points():
    rng = np.random.default_rng(12)
    for spec in random_instances(13, 40, max_users=4, max_channels=4):
        m, n = spec.num_users, spec.num_channels
        if n ** m > 4096:
            continue
        fixed = set()
        for prof in itertools.product(range(n), repeat=m):
            path = best_response_path(spec, prof, rng)
            if len(path) == 1:
                fixed.add(prof)
        assert fixed == set(map(tuple, enumerate_pne(spec).pne_profiles))


def test_report_jsonl():
    spec = homogeneous([1.0, 1.0], [1.0, 0.6])
    lines = enumerate_pne(spec).to_jsonl(2).strip().split("\n")
    recs = [json.loads(x) for x in lines]
    assert recs[0] == {"profile": [0, 1], "occupancy": [1, 1], "potential": 2.0}
    assert recs[-1] == {"pne_occupancies": [[1, 1]], "contains_optimum": True}
