import itertools
import json
import math

import numpy as np
import pytest
from sklearn.base import clone

import oracles
from slotmatch.data import SlotId
from slotmatch.exceptions import ConfigurationError
from slotmatch.influence import InfluenceEngine
from slotmatch.instances import random_engine
from slotmatch.selection import SelectionResult, SlotTagSelector, sample_size, stochastic_greedy_select


def plain_greedy(P, A, k, l, n_slots, n_tags):
    """Full greedy written against the reference formulas."""
    all_tags = list(range(n_tags))
    S = []
    for _ in range(min(k, n_slots)):
        cands = [s for s in range(n_slots) if s not in S]
        S.append(max(cands, key=lambda s: (oracles.conditional_influence(P, A, S + [s], all_tags), -s)))
    T = []
    for _ in range(min(l, n_tags)):
        cands = [t for t in range(n_tags) if t not in T]
        T.append(max(cands, key=lambda t: (oracles.conditional_influence(P, A, S, T + [t]), -t)))
    return S, T


def test_sample_size():
    assert sample_size(100, 10, 0.01) == math.ceil(10 * math.log(100))
    assert sample_size(100, 10, 0) == 100
    assert sample_size(3, 100, 0.9) == 1


@pytest.mark.parametrize("seed", range(10))
def test_full_greedy_equivalence(seed):
    eng = random_engine(100 + seed, 6, 5, 3)
    P, A = eng.exposure.tolist(), eng.affinity.tolist()
    got = stochastic_greedy_select(eng, 3, 2, epsilon=0, seed=seed)
    S, T = plain_greedy(P, A, 3, 2, 5, 3)
    assert got.slots == [eng.slots[s] for s in S]
    assert got.tags == [eng.tags[t] for t in T]


def test_small_ground_set_equals_full_greedy():
    # ceil((n/k) ln(1/eps)) >= n once k = 1 and eps < 1/e: every step samples everything
    eng = random_engine(4, 8, 4, 2)
    a = stochastic_greedy_select(eng, 1, 1, epsilon=0.01, seed=1)
    b = stochastic_greedy_select(eng, 1, 1, epsilon=0, seed=2)
    assert (a.slots, a.tags) == (b.slots, b.tags)


def test_dominating_slot_chosen():
    exposure = np.full((5, 4), 0.1)
    exposure[:, 2] = 0.95
    eng = InfluenceEngine(exposure, np.full((5, 2), 0.5))
    assert stochastic_greedy_select(eng, 1, 1, seed=0).slots == [2]


def test_ties_go_to_lowest_id():
    eng = InfluenceEngine(np.full((3, 4), 0.5), np.full((3, 3), 0.5), slots=["d", "b", "c", "a"], tags=["z", "y", "x"])
    res = stochastic_greedy_select(eng, 2, 2, epsilon=0)
    assert res.slots == ["a", "b"]
    assert res.tags == ["x", "y"]


def test_full_greedy_gains_non_increasing():
    eng = random_engine(9, 20, 12, 5)
    res = stochastic_greedy_select(eng, 8, 4, epsilon=0)
    for phase in ("slot", "tag"):
        gains = [st.gain for st in res.trace if st.phase == phase]
        assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_within_greedy_guarantee_of_exhaustive(seed):
    eng = random_engine(200 + seed, 6, 5, 3)
    P, A = eng.exposure.tolist(), eng.affinity.tolist()
    res = stochastic_greedy_select(eng, 2, 1, epsilon=0)
    best = max(
        oracles.conditional_influence(P, A, S, T)
        for S in itertools.combinations(range(5), 2)
        for T in itertools.combinations(range(3), 1)
    )
    assert res.influence >= (1 - 1 / math.e) * best - 1e-12


def test_budgets_clamped_and_unique():
    eng = random_engine(1, 10, 4, 2)
    res = stochastic_greedy_select(eng, 50, 50, seed=0)
    assert sorted(res.slots) == sorted(eng.slots)
    assert sorted(res.tags) == sorted(eng.tags)


def test_determinism_and_json_round_trip():
    eng = random_engine(2, 40, 30, 6)
    a = stochastic_greedy_select(eng, 10, 3, epsilon=0.1, seed=5)
    b = stochastic_greedy_select(eng, 10, 3, epsilon=0.1, seed=5)
    assert a.to_json() == b.to_json()
    assert len(set(a.slots)) == 10 and len(set(a.tags)) == 3
    back = SelectionResult.from_dict(json.loads(a.to_json()))
    assert back.to_json() == a.to_json()


def test_slot_ids_round_trip():
    res = SelectionResult([SlotId("b1", 2)], ["t"], influence=1.5)
    back = SelectionResult.from_dict(json.loads(res.to_json()), SlotId.parse)
    assert back.slots == [SlotId("b1", 2)]


@pytest.mark.parametrize("kwargs", [{"k": 0}, {"n_tags": -1}, {"epsilon": 1.0}, {"epsilon": -0.1}, {"k": 2.5}])
def test_invalid_config(kwargs):
    params = dict(k=2, n_tags=1, epsilon=0.1) | kwargs
    with pytest.raises(ConfigurationError):
        stochastic_greedy_select(random_engine(0, 3, 3, 2), **params)


def test_empty_inventory_or_catalog():
    with pytest.raises(ConfigurationError):
        stochastic_greedy_select(InfluenceEngine(np.zeros((2, 0)), np.ones((2, 1))), 1, 1)
    with pytest.raises(ConfigurationError):
        stochastic_greedy_select(InfluenceEngine(np.ones((2, 1)), np.zeros((2, 0))), 1, 1)


def test_estimator_wrapper():
    eng = random_engine(3, 10, 8, 3)
    sel = SlotTagSelector(k=3, n_tags=2, epsilon=0.05, random_state=7)
    assert clone(sel).get_params() == sel.get_params()
    sel.fit(eng)
    direct = stochastic_greedy_select(eng, 3, 2, 0.05, 7)
    assert sel.slots_ == direct.slots and sel.tags_ == direct.tags
    assert sel.influence_ == direct.influence
    assert list(sel.slot_indices_) == sorted(eng.slot_indices(direct.slots))
