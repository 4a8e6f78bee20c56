"""Random small instances for property checks and the ``verify`` command."""

from __future__ import annotations

import numpy as np

from ._validation import check_random_state
from .graph import build_graph, prune
from .influence import InfluenceEngine
from .selection import SelectionResult

STANDARD_THETAS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def random_engine(seed, n_users, n_slots, n_tags, density=0.6, cache=True):
    """Engine over sparse random exposure and affinity matrices."""
    rng = check_random_state(seed)
    exposure = np.where(rng.random((n_users, n_slots)) < density, rng.uniform(0.05, 1.0, (n_users, n_slots)), 0.0)
    affinity = np.where(rng.random((n_users, n_tags)) < 0.7, rng.uniform(0.0, 1.0, (n_users, n_tags)), 0.0)
    return InfluenceEngine(
        exposure,
        affinity,
        slots=[f"s{j}" for j in range(n_slots)],
        tags=[f"t{t}" for t in range(n_tags)],
        users=[f"u{i}" for i in range(n_users)],
        cache=cache,
    )


def random_pruned_graph(seed, max_slots=8, max_tags=4, max_users=6, thetas=STANDARD_THETAS):
    """Complete tag-slot graph over a random engine, pruned at a random standard theta.

    Returns ``(engine, graph, theta)``.
    """
    rng = check_random_state(seed)
    n_slots = int(rng.integers(1, max_slots + 1))
    n_tags = int(rng.integers(1, max_tags + 1))
    n_users = int(rng.integers(1, max_users + 1))
    theta = float(thetas[int(rng.integers(len(thetas)))])
    engine = random_engine(rng, n_users, n_slots, n_tags)
    graph = build_graph(SelectionResult(list(engine.slots), list(engine.tags)), engine)
    return engine, prune(graph, theta), theta
