"""Stochastic greedy selection of the k most influential slots and l tags."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_random_state
from .exceptions import ConfigurationError


class TraceStep(NamedTuple):
    phase: str  # "slot" or "tag"
    step: int
    item: object
    gain: float


@dataclass
class SelectionResult:
    slots: list
    tags: list
    trace: List[TraceStep] = field(default_factory=list)
    influence: float = 0.0

    def to_dict(self):
        return {
            "slots": [str(s) for s in self.slots],
            "tags": [str(t) for t in self.tags],
            "influence": self.influence,
            "trace": [
                {"phase": st.phase, "step": st.step, "item": str(st.item), "gain": st.gain}
                for st in self.trace
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, payload, slot_parser=str):
        trace = [
            TraceStep(
                st["phase"],
                st["step"],
                slot_parser(st["item"]) if st["phase"] == "slot" else st["item"],
                st["gain"],
            )
            for st in payload.get("trace", [])
        ]
        return cls(
            [slot_parser(s) for s in payload["slots"]],
            list(payload["tags"]),
            trace,
            payload.get("influence", 0.0),
        )


def sample_size(n, budget, epsilon):
    """Per-step sample size ``ceil((n / budget) * ln(1 / epsilon))``.

    ``epsilon == 0`` is the limit in which every remaining candidate is
    evaluated (plain greedy).
    """
    if epsilon == 0:
        return n
    return max(1, math.ceil((n / budget) * math.log(1.0 / epsilon)))


def _check_epsilon(epsilon):
    try:
        epsilon = float(epsilon)
    except (TypeError, ValueError):
        raise ConfigurationError(f"epsilon must be a real number, got {epsilon!r}") from None
    if not 0.0 <= epsilon < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1) (or 0 for full greedy), got {epsilon}")
    return epsilon


def _id_rank(ids):
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    rank = np.empty(len(ids), dtype=np.int64)
    rank[order] = np.arange(len(ids))
    return np.array(order, dtype=np.int64), rank


def _draw(rng, remaining, size, rank):
    if size >= len(remaining):
        return remaining
    sample = rng.choice(remaining, size=size, replace=False)
    return sample[np.argsort(rank[sample], kind="stable")]


def stochastic_greedy_select(engine, k, n_tags, epsilon=0.01, seed=None) -> SelectionResult:
    """Pick ``k`` slots, then ``n_tags`` tags, by stochastic greedy.

    Slots are chosen first against the whole tag catalog, then tags against
    the chosen slots. At every step a uniform sample of the remaining
    candidates is scored by marginal gain in ``I(S | T)`` and the best one
    is kept; ties go to the smallest id. Budgets larger than the ground set
    are clamped to it.
    """
    k = check_positive_int(k, "k")
    n_tags = check_positive_int(n_tags, "n_tags")
    epsilon = _check_epsilon(epsilon)
    if engine.n_slots == 0:
        raise ConfigurationError("the slot inventory is empty")
    if engine.n_tags == 0:
        raise ConfigurationError("the tag catalog is empty")
    rng = check_random_state(seed)
    trace = []

    # slot phase
    k_eff = min(k, engine.n_slots)
    size = sample_size(engine.n_slots, k_eff, epsilon)
    order, rank = _id_rank(engine.slots)
    remaining = order
    weight = engine.persuasion(np.arange(engine.n_tags)).copy()  # miss_u * q_u
    q = weight.copy()
    chosen_slots = []
    for step in range(k_eff):
        sample = _draw(rng, remaining, size, rank)
        gains = weight @ engine.exposure[:, sample]
        best = int(np.argmax(gains))
        pick = int(sample[best])
        chosen_slots.append(pick)
        trace.append(TraceStep("slot", step, engine.slots[pick], float(gains[best])))
        weight *= 1.0 - engine.exposure[:, pick] * q
        remaining = remaining[remaining != pick]

    # tag phase
    l_eff = min(n_tags, engine.n_tags)
    size = sample_size(engine.n_tags, l_eff, epsilon)
    order, rank = _id_rank(engine.tags)
    remaining = order
    p = engine.exposure[:, chosen_slots]
    q = np.zeros(engine.n_users)
    current = 0.0
    chosen_tags = []
    for step in range(l_eff):
        sample = _draw(rng, remaining, size, rank)
        values = np.empty(len(sample))
        for i, t in enumerate(sample):
            q_new = 1.0 - (1.0 - q) * (1.0 - engine.affinity[:, t])
            values[i] = np.sum(1.0 - np.prod(1.0 - p * q_new[:, None], axis=1))
        best = int(np.argmax(values))
        pick = int(sample[best])
        chosen_tags.append(pick)
        trace.append(TraceStep("tag", step, engine.tags[pick], float(values[best] - current)))
        current = float(values[best])
        q = 1.0 - (1.0 - q) * (1.0 - engine.affinity[:, pick])
        remaining = remaining[remaining != pick]

    influence = engine.influence_idx(np.array(sorted(chosen_slots)), np.array(sorted(chosen_tags)))
    return SelectionResult(
        [engine.slots[i] for i in chosen_slots],
        [engine.tags[i] for i in chosen_tags],
        trace,
        influence,
    )


class SlotTagSelector(BaseEstimator):
    """Estimator wrapper around :func:`stochastic_greedy_select`.

    ``fit(engine)`` stores ``slots_``, ``tags_`` (ids, in pick order),
    ``slot_indices_``/``tag_indices_`` (engine positions), ``trace_`` and
    ``influence_``.
    """

    def __init__(self, k=300, n_tags=100, epsilon=0.01, random_state=None):
        self.k = k
        self.n_tags = n_tags
        self.epsilon = epsilon
        self.random_state = random_state

    def fit(self, engine, y=None):
        result = stochastic_greedy_select(engine, self.k, self.n_tags, self.epsilon, self.random_state)
        self.result_ = result
        self.slots_ = result.slots
        self.tags_ = result.tags
        self.slot_indices_ = engine.slot_indices(result.slots)
        self.tag_indices_ = engine.tag_indices(result.tags)
        self.trace_ = result.trace
        self.influence_ = result.influence
        return self
