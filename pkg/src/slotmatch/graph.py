"""Tag-slot weighted bipartite graph and z-score edge pruning."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_finite
from .data import SlotId


@dataclass
class WeightedBipartiteGraph:
    """Tags on one side, slots on the other.

    ``weights[t, s]`` holds the weight of the tag/slot pair and ``mask[t, s]``
    whether that edge is present. Vertices are addressed by position; the
    ``tags`` and ``slots`` lists carry their ids. ``stats`` records the mean
    and population standard deviation of the edge weights the graph was
    built or pruned with, plus the pruning ``theta`` (None when unpruned).
    ``slot_influence`` optionally stores each slot's stand-alone influence.
    """

    tags: list
    slots: list
    weights: np.ndarray
    mask: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)
    slot_influence: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        shape = (len(self.tags), len(self.slots))
        if self.weights.shape != shape:
            raise ValueError(f"weights shape {self.weights.shape} does not match {shape}")
        if self.weights.size and self.weights.min() < 0:
            raise ValueError("edge weights must be non-negative")
        if self.mask is None:
            self.mask = np.ones(shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != shape:
            raise ValueError("mask shape does not match weights")
        if not self.stats:
            self.stats = dict(edge_stats(self.weights[self.mask]), theta=None)
        if self.slot_influence is not None:
            self.slot_influence = np.asarray(self.slot_influence, dtype=float)

    @property
    def n_tags(self):
        return len(self.tags)

    @property
    def n_slots(self):
        return len(self.slots)

    @property
    def n_edges(self):
        return int(self.mask.sum())

    def edges(self):
        """Present edges as ``(tag_pos, slot_pos, weight)``, row-major."""
        t, s = np.nonzero(self.mask)
        return [(int(a), int(b), float(self.weights[a, b])) for a, b in zip(t, s)]

    def edge_set(self):
        t, s = np.nonzero(self.mask)
        return set(zip(t.tolist(), s.tolist()))

    def degree(self):
        """Tag degrees in the present edge set."""
        return self.mask.sum(axis=1)

    # ------------------------------------------------------------ serialization

    def to_json(self):
        """JSON text; weights are written with 9 decimal places."""
        head = {
            "tags": [str(t) for t in self.tags],
            "slots": [str(s) for s in self.slots],
        }
        lines = ["{"]
        lines.append(f'  "tags": {json.dumps(head["tags"])},')
        lines.append(f'  "slots": {json.dumps(head["slots"])},')
        edges = ",\n".join(f'    {{"t": {t}, "s": {s}, "w": {w:.9f}}}' for t, s, w in self.edges())
        lines.append('  "edges": [' + ("\n" + edges + "\n  " if edges else "") + "],")
        stats = {k: self.stats.get(k) for k in ("mu", "sigma", "theta")}
        lines.append(f'  "stats": {json.dumps(stats)},')
        influence = None if self.slot_influence is None else [round(float(v), 9) for v in self.slot_influence]
        lines.append(f'  "slot_influence": {json.dumps(influence)}')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_dict(cls, payload):
        tags = list(payload["tags"])
        slots = [_parse_slot(s) for s in payload["slots"]]
        weights = np.zeros((len(tags), len(slots)))
        mask = np.zeros((len(tags), len(slots)), dtype=bool)
        for e in payload["edges"]:
            weights[e["t"], e["s"]] = e["w"]
            mask[e["t"], e["s"]] = True
        stats = dict(payload.get("stats") or {})
        influence = payload.get("slot_influence")
        return cls(tags, slots, weights, mask, stats or {}, None if influence is None else np.array(influence))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _parse_slot(text):
    try:
        return SlotId.parse(text)
    except ValueError:
        return text


def edge_stats(weights):
    """Mean and population standard deviation over an array of edge weights."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        return {"mu": 0.0, "sigma": 0.0}
    mu = float(w.sum() / w.size)
    sigma = float(np.sqrt(np.sum((w - mu) ** 2) / w.size))
    if w.max() == w.min():
        sigma = 0.0
    return {"mu": mu, "sigma": sigma}


def build_graph(selection, engine) -> WeightedBipartiteGraph:
    """Complete graph between the selected tags and slots.

    Vertices are listed in id order. Each weight is the tag-conditioned
    influence of the single slot under the single tag.
    """
    slots = sorted(selection.slots)
    tags = sorted(selection.tags)
    if not slots or not tags:
        raise ValueError("selection must contain at least one slot and one tag")
    slot_idx = np.array([engine._slot_pos[s] for s in slots], dtype=np.int64)
    tag_idx = np.array([engine._tag_pos[t] for t in tags], dtype=np.int64)
    weights = engine.edge_weights(slot_idx, tag_idx)
    influence = np.array([engine.influence_idx([j]) for j in slot_idx])
    return WeightedBipartiteGraph(tags, slots, weights, slot_influence=influence)


def prune(graph: WeightedBipartiteGraph, theta) -> WeightedBipartiteGraph:
    """Drop every edge whose weight is below ``mu + theta * sigma``.

    ``mu`` and ``sigma`` are taken over the edges of the input graph. When
    all weights are equal (``sigma == 0``) nothing is pruned. The input
    graph is left untouched and every vertex survives, isolated or not.
    """
    theta = check_finite(theta, "theta")
    present = graph.weights[graph.mask]
    stats = edge_stats(present)
    mu, sigma = stats["mu"], stats["sigma"]
    if sigma == 0.0:
        mask = graph.mask.copy()
    else:
        mask = graph.mask & (graph.weights >= mu + theta * sigma)
    return replace(
        graph,
        weights=graph.weights.copy(),
        mask=mask,
        stats={"mu": mu, "sigma": sigma, "theta": theta, "threshold": mu + theta * sigma},
    )


class ThetaPruner(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`prune`.

    ``fit`` records ``mu_``, ``sigma_`` and ``threshold_`` of the graph it
    sees; ``transform`` prunes a graph with those fitted statistics.
    """

    def __init__(self, theta=-1.0):
        self.theta = theta

    def fit(self, graph, y=None):
        theta = check_finite(self.theta, "theta")
        stats = edge_stats(graph.weights[graph.mask])
        self.mu_ = stats["mu"]
        self.sigma_ = stats["sigma"]
        self.threshold_ = self.mu_ + theta * self.sigma_
        return self

    def transform(self, graph):
        if not hasattr(self, "threshold_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("ThetaPruner is not fitted yet; call fit first")
        if self.sigma_ == 0.0:
            mask = graph.mask.copy()
        else:
            mask = graph.mask & (graph.weights >= self.threshold_)
        return replace(
            graph,
            weights=graph.weights.copy(),
            mask=mask,
            stats={"mu": self.mu_, "sigma": self.sigma_, "theta": float(self.theta), "threshold": self.threshold_},
        )
