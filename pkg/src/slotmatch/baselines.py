"""Baseline allocators and the exhaustive small-instance oracle.

The baselines do not enforce per-tag bounds; only OMBM and the oracle do.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_bounds, check_random_state
from .exceptions import SizeError
from .matcher import UNASSIGNED, Allocation

MAX_ORACLE_SLOTS = 10
MAX_ORACLE_TAGS = 4


class BaselineKind(str, Enum):
    BRUTE_FORCE_BEST_EDGE = "bm"
    MAX_DEGREE = "mda"
    TOPK_SLOT_RANDOM_TAG = "tsrt"
    RANDOM = "ra"


def allocate_bm(graph) -> Allocation:
    """Every slot takes its heaviest incident tag (lowest index on ties)."""
    wm = np.where(graph.mask, graph.weights, -np.inf)
    best = np.argmax(wm, axis=0) if graph.n_tags else np.zeros(graph.n_slots, dtype=np.int64)
    assignment = np.where(graph.mask.any(axis=0), best, UNASSIGNED)
    return Allocation.from_assignment(assignment, graph.n_tags)


def allocate_mda(graph) -> Allocation:
    """Every slot takes its incident tag of largest degree (lowest index on ties)."""
    degree = graph.degree()
    scored = np.where(graph.mask, degree[:, None], -1)
    best = np.argmax(scored, axis=0) if graph.n_tags else np.zeros(graph.n_slots, dtype=np.int64)
    assignment = np.where(graph.mask.any(axis=0), best, UNASSIGNED)
    return Allocation.from_assignment(assignment, graph.n_tags)


def _random_fill(graph, order, rng):
    assignment = np.full(graph.n_slots, UNASSIGNED, dtype=np.int64)
    for s in order:
        incident = np.flatnonzero(graph.mask[:, s])
        if incident.size:
            assignment[s] = incident[rng.integers(incident.size)]
    return Allocation.from_assignment(assignment, graph.n_tags)


def allocate_tsrt(graph, slot_influences=None, seed=None) -> Allocation:
    """Slots in descending stand-alone influence each get a uniform random incident tag."""
    if slot_influences is None:
        slot_influences = graph.slot_influence
    if slot_influences is None:
        raise ValueError("TSRT needs per-slot influences (graph.slot_influence or slot_influences=)")
    order = np.argsort(-np.asarray(slot_influences, dtype=float), kind="stable")
    return _random_fill(graph, order, check_random_state(seed))


def allocate_random(graph, seed=None) -> Allocation:
    """Slots in index order each get a uniform random incident tag."""
    return _random_fill(graph, range(graph.n_slots), check_random_state(seed))


# ---------------------------------------------------------------- oracle


@dataclass
class OracleResult:
    """Outcome of exhaustive enumeration.

    ``best_total`` is the optimum total edge weight, ``allocation`` the
    lexicographically first assignment attaining it. ``best_with[t, s]``
    is the best total over feasible assignments that put tag ``t`` on slot
    ``s`` (``-inf`` if none).
    """

    allocation: Allocation
    best_total: float
    best_with_table: np.ndarray
    n_feasible: int

    def best_with(self, t, s):
        return float(self.best_with_table[t, s])

    def edge_in_optimum(self, t, s, atol=1e-9):
        return self.best_with_table[t, s] >= self.best_total - atol


def _enumerate_chunks(options, chunk=1 << 20):
    """Yield blocks of assignment rows in lexicographic order."""
    sizes = np.array([len(o) for o in options], dtype=np.int64)
    total = int(np.prod(sizes)) if len(sizes) else 1
    strides = np.ones(len(sizes), dtype=np.int64)
    for j in range(len(sizes) - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        block = np.empty((codes.size, len(sizes)), dtype=np.int64)
        for j, opts in enumerate(options):
            block[:, j] = np.asarray(opts, dtype=np.int64)[(codes // strides[j]) % sizes[j]]
        yield block


def oracle_optimal(graph, bounds="auto", return_result=False):
    """Maximum-weight bound-feasible assignment by full enumeration.

    Every slot may stay open or take any tag it has an edge to; an
    assignment is feasible when no tag exceeds its bound. Limited to
    ``MAX_ORACLE_SLOTS`` slots and ``MAX_ORACLE_TAGS`` tags.
    """
    if graph.n_slots > MAX_ORACLE_SLOTS or graph.n_tags > MAX_ORACLE_TAGS:
        raise SizeError(
            f"oracle limited to {MAX_ORACLE_SLOTS} slots x {MAX_ORACLE_TAGS} tags, "
            f"got {graph.n_slots} x {graph.n_tags}"
        )
    bounds = check_bounds(bounds, graph.n_tags, graph.n_slots)
    options = [[UNASSIGNED] + np.flatnonzero(graph.mask[:, s]).tolist() for s in range(graph.n_slots)]
    # row 0 of padded weights stands for "open"
    padded = np.vstack([np.zeros((1, graph.n_slots)), graph.weights])
    cols = np.arange(graph.n_slots)
    best_total = -np.inf
    best_row = None
    best_with = np.full((graph.n_tags, graph.n_slots), -np.inf)
    n_feasible = 0
    for block in _enumerate_chunks(options):
        feasible = np.ones(block.shape[0], dtype=bool)
        for t in range(graph.n_tags):
            feasible &= (block == t).sum(axis=1) <= bounds[t]
        block = block[feasible]
        n_feasible += block.shape[0]
        if not block.size and graph.n_slots:
            continue
        totals = padded[block + 1, cols].sum(axis=1) if graph.n_slots else np.zeros(block.shape[0])
        i = int(np.argmax(totals))
        if totals[i] > best_total:
            best_total = float(totals[i])
            best_row = block[i].copy()
        for s in range(graph.n_slots):
            for t in options[s][1:]:
                hit = block[:, s] == t
                if hit.any():
                    best_with[t, s] = max(best_with[t, s], float(totals[hit].max()))
    allocation = Allocation.from_assignment(best_row, graph.n_tags, bounds)
    if return_result:
        return OracleResult(allocation, best_total, best_with, n_feasible)
    return allocation


# ---------------------------------------------------------------- estimators


class _Allocator(BaseEstimator):
    def _store(self, alloc):
        self.allocation_ = alloc
        self.assignment_ = alloc.assignment
        self.counts_ = alloc.counts
        return self

    def fit_predict(self, graph, y=None):
        return self.fit(graph).assignment_


class BestEdgeAllocator(_Allocator):
    """Brute-force best edge per slot (BM)."""

    def fit(self, graph, y=None):
        return self._store(allocate_bm(graph))


class MaxDegreeAllocator(_Allocator):
    """Highest-degree incident tag per slot (MDA)."""

    def fit(self, graph, y=None):
        return self._store(allocate_mda(graph))


class TopSlotRandomTagAllocator(_Allocator):
    """Slots by descending influence, each with a random incident tag (TSRT)."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, graph, y=None, slot_influences=None):
        return self._store(allocate_tsrt(graph, slot_influences, self.random_state))


class RandomAllocator(_Allocator):
    """A uniform random incident tag per slot (RA)."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, graph, y=None):
        return self._store(allocate_random(graph, self.random_state))


class ExhaustiveOracle(_Allocator):
    """Exact optimum by enumeration; small graphs only."""

    def __init__(self, bounds="auto"):
        self.bounds = bounds

    def fit(self, graph, y=None):
        result = oracle_optimal(graph, self.bounds, return_result=True)
        self.result_ = result
        self.best_total_ = result.best_total
        return self._store(result.allocation)


def allocate_baseline(kind, graph, seed=None) -> Allocation:
    kind = BaselineKind(kind)
    if kind is BaselineKind.BRUTE_FORCE_BEST_EDGE:
        return allocate_bm(graph)
    if kind is BaselineKind.MAX_DEGREE:
        return allocate_mda(graph)
    if kind is BaselineKind.TOPK_SLOT_RANDOM_TAG:
        return allocate_tsrt(graph, seed=seed)
    return allocate_random(graph, seed=seed)
