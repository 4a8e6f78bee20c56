"""One-to-many bipartite matching of tags to slots by mutual-best edges.

Each slot carries at most one tag; a tag may take several slots up to its
bound. The matcher proceeds in passes. Within a pass every tag that still
has quota is *live*; repeatedly, each live tag and each open slot name
their best live counterpart, every mutually-best pair is matched, and the
matched tags leave the live set. When no live tag remains (or no mutual
pair exists) the pass ends, all tags with quota become live again, and a
new pass starts. Matching stops after a pass that assigns nothing.

Ties: a slot prefers the lowest-indexed tag among equals, a tag prefers
the highest-indexed slot among equals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_bounds

UNASSIGNED = -1


class Round(NamedTuple):
    """One dominating-edge sweep: the pass it belongs to, the edges matched
    in it and the assignment right after it."""

    pass_index: int
    edges: Tuple[Tuple[int, int], ...]
    assignment: Tuple[int, ...]


@dataclass
class Allocation:
    """Slot-to-tag assignment (``-1`` for open slots) with per-tag counts.

    ``bounds`` is None for allocators that do not enforce quotas.
    """

    assignment: np.ndarray
    counts: np.ndarray
    bounds: Optional[np.ndarray] = None
    rounds: List[Round] = field(default_factory=list)

    @classmethod
    def from_assignment(cls, assignment, n_tags, bounds=None, rounds=None):
        assignment = np.asarray(assignment, dtype=np.int64)
        counts = np.bincount(assignment[assignment >= 0], minlength=n_tags)[:n_tags] if n_tags else np.zeros(0, dtype=np.int64)
        return cls(assignment, counts.astype(np.int64), None if bounds is None else np.asarray(bounds), rounds or [])

    @property
    def matched_slots(self):
        return int(np.count_nonzero(self.assignment >= 0))

    @property
    def matched_tags(self):
        return int(np.unique(self.assignment[self.assignment >= 0]).size)

    def pairs(self):
        """Assigned ``(tag_pos, slot_pos)`` pairs, ordered by slot."""
        return [(int(t), int(s)) for s, t in enumerate(self.assignment) if t >= 0]

    def total_weight(self, graph):
        return float(sum(graph.weights[t, s] for t, s in self.pairs()))

    def first_pass_edges(self):
        return list(self.rounds[0].edges) if self.rounds else []

    def to_dict(self, graph=None):
        out = {
            "assignment": [int(v) for v in self.assignment],
            "counts": {str(i): int(c) for i, c in enumerate(self.counts)},
            "bounds": None if self.bounds is None else {str(i): int(b) for i, b in enumerate(self.bounds)},
        }
        if graph is not None:
            out["tags"] = [str(t) for t in graph.tags]
            out["slots"] = [str(s) for s in graph.slots]
        return out

    def to_json(self, graph=None):
        return json.dumps(self.to_dict(graph), indent=2) + "\n"

    def save(self, path, graph=None):
        Path(path).write_text(self.to_json(graph), encoding="utf-8")

    @classmethod
    def from_dict(cls, payload):
        assignment = payload["assignment"]
        counts = payload.get("counts") or {}
        bounds = payload.get("bounds")
        n_tags = len(counts) if counts else (max(assignment) + 1 if assignment else 0)
        b = None if bounds is None else [bounds[str(i)] for i in range(len(bounds))]
        return cls.from_assignment(assignment, n_tags, b)


# ---------------------------------------------------------------- lc()


def _live_matrix(graph, assignment, live_tags):
    live = graph.mask & (np.asarray(assignment) < 0)[None, :]
    if live_tags is not None:
        live &= np.asarray(live_tags, dtype=bool)[:, None]
    return np.where(live, graph.weights, -np.inf), live


def _slot_best(wm, live):
    best = np.argmax(wm, axis=0)  # first maximum: lowest tag index
    return np.where(live.any(axis=0), best, -1)


def _tag_best(wm, live):
    n_slots = wm.shape[1]
    best = n_slots - 1 - np.argmax(wm[:, ::-1], axis=1)  # last maximum: highest slot index
    return np.where(live.any(axis=1), best, -1)


def _default_live(allocation, n_tags):
    if allocation.bounds is None:
        return np.ones(n_tags, dtype=bool)
    return allocation.counts < allocation.bounds


def best_counterpart(graph, vertex, allocation, side="slot", live_tags=None):
    """Best live neighbour of ``vertex`` or None.

    ``side`` says whether ``vertex`` is a slot position (returns a tag
    position) or a tag position (returns a slot position). An edge is live
    when it survived pruning, its slot is open and its tag is in
    ``live_tags`` (default: tags below their bound).
    """
    if live_tags is None:
        live_tags = _default_live(allocation, graph.n_tags)
    wm, live = _live_matrix(graph, allocation.assignment, live_tags)
    if side == "slot":
        best = _slot_best(wm[:, [vertex]], live[:, [vertex]])[0]
    elif side == "tag":
        best = _tag_best(wm[[vertex]], live[[vertex]])[0]
    else:
        raise ValueError(f"side must be 'slot' or 'tag', got {side!r}")
    return None if best < 0 else int(best)


def find_dominating_edges(graph, allocation, live_tags=None):
    """Mutually-best live ``(tag, slot)`` pairs, ascending."""
    if live_tags is None:
        live_tags = _default_live(allocation, graph.n_tags)
    wm, live = _live_matrix(graph, allocation.assignment, live_tags)
    slot_best = _slot_best(wm, live)
    tag_best = _tag_best(wm, live)
    return sorted(
        (int(t), int(s)) for s, t in enumerate(slot_best) if t >= 0 and tag_best[t] == s
    )


def ombm_allocate(graph, bounds="auto") -> Allocation:
    """Match tags to slots; see the module docstring for the procedure.

    ``bounds`` is ``"auto"`` (``ceil(n_slots / n_tags)`` per tag), an int,
    a per-tag sequence or a ``{tag_pos: bound}`` mapping.
    """
    n_tags, n_slots = graph.n_tags, graph.n_slots
    bounds = check_bounds(bounds, n_tags, n_slots)
    alloc = Allocation(np.full(n_slots, UNASSIGNED, dtype=np.int64), np.zeros(n_tags, dtype=np.int64), bounds)
    pass_index = 0
    while True:
        live = alloc.counts < bounds
        added = 0
        while live.any():
            edges = find_dominating_edges(graph, alloc, live)
            if not edges:
                break
            for t, s in edges:
                alloc.assignment[s] = t
                alloc.counts[t] += 1
                live[t] = False
            added += len(edges)
            alloc.rounds.append(Round(pass_index, tuple(edges), tuple(int(v) for v in alloc.assignment)))
        if added == 0:
            return alloc
        pass_index += 1


class OMBMAllocator(BaseEstimator):
    """Estimator wrapper around :func:`ombm_allocate`.

    After ``fit(graph)``: ``allocation_``, ``assignment_``, ``counts_``,
    ``bounds_`` and ``rounds_``.
    """

    def __init__(self, bounds="auto"):
        self.bounds = bounds

    def fit(self, graph, y=None):
        alloc = ombm_allocate(graph, self.bounds)
        self.allocation_ = alloc
        self.assignment_ = alloc.assignment
        self.counts_ = alloc.counts
        self.bounds_ = alloc.bounds
        self.rounds_ = alloc.rounds
        return self

    def fit_predict(self, graph, y=None):
        return self.fit(graph).assignment_


# ---------------------------------------------------------------- guarantees


@dataclass
class LemmaReport:
    slot_uniqueness: bool
    bound_respect: bool
    quota_filled: Optional[bool]
    dominating_in_optimum: bool
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def verify_lemmas(allocation, graph, oracle=None) -> LemmaReport:
    """Check an OMBM allocation against the matcher's structural guarantees.

    * every slot holds at most one tag and only over a present edge;
    * no tag exceeds its bound, and on a complete graph with at least
      ``sum(bounds)`` slots every tag fills its bound exactly;
    * every edge matched in the first dominating sweep belongs to some
      maximum-weight bound-feasible assignment (needs ``oracle``, an
      :class:`~slotmatch.baselines.OracleResult`).
    """
    violations = []
    a = np.asarray(allocation.assignment)
    unique = a.ndim == 1 and a.shape[0] == graph.n_slots
    for s, t in enumerate(a):
        if t >= graph.n_tags or t < UNASSIGNED:
            unique = False
            violations.append(f"slot {s} holds invalid tag {t}")
        elif t >= 0 and not graph.mask[t, s]:
            unique = False
            violations.append(f"slot {s} assigned tag {t} over a pruned edge")
    counts = np.bincount(a[a >= 0], minlength=graph.n_tags)
    if not np.array_equal(counts, allocation.counts):
        violations.append("counts do not match the assignment")
        unique = False

    bounds_ok = True
    filled = None
    if allocation.bounds is not None:
        over = np.flatnonzero(counts > allocation.bounds)
        for t in over:
            violations.append(f"tag {t} holds {counts[t]} slots, bound {allocation.bounds[t]}")
        bounds_ok = over.size == 0
        if graph.mask.all() and graph.n_slots >= allocation.bounds.sum():
            filled = bool(np.array_equal(counts, allocation.bounds))
            if not filled:
                violations.append("complete graph with enough slots but some tag is below its bound")

    dominating_ok = True
    if oracle is not None:
        for t, s in allocation.first_pass_edges():
            if not oracle.edge_in_optimum(t, s):
                dominating_ok = False
                violations.append(
                    f"first-sweep edge (tag {t}, slot {s}) is in no optimal assignment "
                    f"(best with it {oracle.best_with(t, s):.9g} < optimum {oracle.best_total:.9g})"
                )
    return LemmaReport(unique, bounds_ok, filled, dominating_ok, violations)


@dataclass
class ApproximationReport:
    ratio: float
    per_tag: List[Tuple[int, int]]
    bound: float

    @property
    def holds(self):
        return self.ratio <= self.bound + 1e-9


def approximation_report(allocation, oracle_allocation, graph) -> ApproximationReport:
    """Ratio of the optimal to the achieved total edge weight.

    ``per_tag`` lists ``(K_i, delta_i)``: the number of slots tag ``i`` got
    and whether it filled its bound. ``bound`` is ``1 + max_i(K_i - delta_i)``.
    A zero achieved weight against a positive optimum gives ``inf``.
    """
    achieved = allocation.total_weight(graph)
    optimum = oracle_allocation.total_weight(graph)
    if achieved > 0:
        ratio = optimum / achieved
    else:
        ratio = math.inf if optimum > 0 else 1.0
    counts = np.asarray(allocation.counts)
    if allocation.bounds is None:
        deltas = np.zeros_like(counts)
    else:
        deltas = (counts == np.asarray(allocation.bounds)).astype(int)
    per_tag = [(int(k), int(d)) for k, d in zip(counts, deltas)]
    bound = 1.0 + max((k - d for k, d in per_tag), default=0)
    return ApproximationReport(ratio, per_tag, float(bound))
