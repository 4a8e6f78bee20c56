import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slotmatch.graph import WeightedBipartiteGraph, prune  # noqa: E402

# Worked example: per-slot and per-tag stand-alone influences.
EXAMPLE_SLOT_INFLUENCE = [0.1, 0.2, 0.7, 0.1, 0.9, 0.4, 0.1, 0.5, 0.45, 0.7]
EXAMPLE_TAG_INFLUENCE = [0.1, 0.4, 0.5]
EXAMPLE_FINAL = [-1, -1, 0, -1, 2, 0, -1, 2, 1, 1]


def example_graph(theta=-1.0):
    weights = np.outer(EXAMPLE_TAG_INFLUENCE, EXAMPLE_SLOT_INFLUENCE)
    graph = WeightedBipartiteGraph(
        [f"t{i}" for i in range(3)],
        [f"b{j}" for j in range(10)],
        weights,
        slot_influence=np.array(EXAMPLE_SLOT_INFLUENCE),
    )
    return prune(graph, theta)


@pytest.fixture
def golden_graph():
    return example_graph()


def graph_from(weights, mask=None):
    weights = np.asarray(weights, dtype=float)
    return WeightedBipartiteGraph(
        [f"u{i}" for i in range(weights.shape[0])],
        [f"v{j}" for j in range(weights.shape[1])],
        weights,
        mask,
    )
