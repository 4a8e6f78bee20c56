"""Slot influence, tag-specific persuasion and tag-conditioned slot influence.

All quantities are expected numbers of influenced users::

    slot influence          I(S)     = sum_u 1 - prod_{s in S} (1 - P[u, s])
    tag probability         q_u(T)   = 1 - prod_{t in T} (1 - A[u, t])
    conditional influence   I(S | T) = sum_u 1 - prod_{s in S} (1 - P[u, s] * q_u(T))

where ``P`` is the user-by-slot exposure matrix and ``A`` the user-by-tag
affinity matrix.
"""

from __future__ import annotations

from typing import Dict, Hashable, Iterable

import numpy as np

from .exceptions import ContractError


class InfluenceEngine:
    """Evaluate influence queries over a fixed slot inventory and tag catalog.

    Parameters
    ----------
    exposure : array of shape (n_users, n_slots)
        Base probability that each slot reaches each user.
    affinity : array of shape (n_users, n_tags)
        Probability that each tag persuades each user; missing pairs are 0.
    slots, tags, users : sequences, optional
        Identifiers for the columns/rows. Default to ``range``.
    cache : bool, default True
        Memoize per-tag-set persuasion vectors. Results are identical with
        the cache on or off.
    """

    def __init__(self, exposure, affinity, slots=None, tags=None, users=None, cache=True):
        self.exposure = np.ascontiguousarray(exposure, dtype=float)
        self.affinity = np.ascontiguousarray(affinity, dtype=float)
        if self.exposure.ndim != 2 or self.affinity.ndim != 2:
            raise ValueError("exposure and affinity must be 2-D")
        if self.exposure.shape[0] != self.affinity.shape[0]:
            raise ValueError(
                f"exposure has {self.exposure.shape[0]} users, affinity has {self.affinity.shape[0]}"
            )
        for name, mat in (("exposure", self.exposure), ("affinity", self.affinity)):
            if mat.size and (mat.min() < 0.0 or mat.max() > 1.0):
                raise ValueError(f"{name} probabilities must lie in [0, 1]")
        n_users, n_slots = self.exposure.shape
        self.slots = list(range(n_slots)) if slots is None else list(slots)
        self.tags = list(range(self.affinity.shape[1])) if tags is None else list(tags)
        self.users = list(range(n_users)) if users is None else list(users)
        if len(self.slots) != n_slots or len(self.tags) != self.affinity.shape[1] or len(self.users) != n_users:
            raise ValueError("identifier lists do not match matrix shapes")
        self._slot_pos = {s: i for i, s in enumerate(self.slots)}
        self._tag_pos = {t: i for i, t in enumerate(self.tags)}
        self._user_pos = {u: i for i, u in enumerate(self.users)}
        self.cache = cache
        self._q_cache: Dict[frozenset, np.ndarray] = {}

    @classmethod
    def from_inventory(cls, inventory, affinities, tags=None, cache=True):
        """Build from a :class:`~slotmatch.data.SlotInventory` and affinity rows.

        The tag catalog defaults to the sorted distinct tag ids in
        ``affinities``. Affinities of users absent from the trajectory
        database are ignored since no slot can reach them.
        """
        users = list(inventory.users)
        if tags is None:
            tags = sorted({a.tag_id for a in affinities})
        tag_pos = {t: i for i, t in enumerate(tags)}
        user_pos = {u: i for i, u in enumerate(users)}
        affinity = np.zeros((len(users), len(tags)))
        for a in affinities:
            if a.user_id in user_pos and a.tag_id in tag_pos:
                affinity[user_pos[a.user_id], tag_pos[a.tag_id]] = a.probability
        return cls(inventory.exposure_matrix(users), affinity, inventory.slots, tags, users, cache=cache)

    @property
    def n_users(self):
        return self.exposure.shape[0]

    @property
    def n_slots(self):
        return self.exposure.shape[1]

    @property
    def n_tags(self):
        return self.affinity.shape[1]

    # ------------------------------------------------------------ id lookup

    def slot_indices(self, slots: Iterable[Hashable]) -> np.ndarray:
        try:
            return np.array(sorted({self._slot_pos[s] for s in slots}), dtype=np.int64)
        except KeyError as exc:
            raise KeyError(f"unknown slot {exc.args[0]!r}") from None

    def tag_indices(self, tags: Iterable[Hashable]) -> np.ndarray:
        try:
            return np.array(sorted({self._tag_pos[t] for t in tags}), dtype=np.int64)
        except KeyError as exc:
            raise KeyError(f"unknown tag {exc.args[0]!r}") from None

    # ------------------------------------------------------------ index-level kernels

    def persuasion(self, tag_idx) -> np.ndarray:
        """Vector of ``q_u(T)`` over users for a set of tag indices."""
        key = frozenset(int(t) for t in tag_idx)
        if self.cache and key in self._q_cache:
            return self._q_cache[key]
        cols = np.array(sorted(key), dtype=np.int64)
        if cols.size == 0:
            q = np.zeros(self.n_users)
        else:
            q = 1.0 - np.prod(1.0 - self.affinity[:, cols], axis=1)
        if self.cache:
            q.setflags(write=False)
            self._q_cache[key] = q
        return q

    def _miss(self, slot_idx, q=None):
        """Per-user probability that none of the slots influences the user."""
        cols = np.asarray(slot_idx, dtype=np.int64)
        if cols.size == 0:
            return np.ones(self.n_users)
        p = self.exposure[:, cols]
        if q is not None:
            p = p * q[:, None]
        return np.prod(1.0 - p, axis=1)

    def influence_idx(self, slot_idx, tag_idx=None) -> float:
        """``I(S)`` when ``tag_idx`` is None, else ``I(S | T)``; index arguments."""
        if tag_idx is None:
            return float(np.sum(1.0 - self._miss(slot_idx)))
        tag_idx = np.asarray(tag_idx, dtype=np.int64)
        if tag_idx.size == 0 or len(slot_idx) == 0:
            return 0.0
        return float(np.sum(1.0 - self._miss(slot_idx, self.persuasion(tag_idx))))

    # ------------------------------------------------------------ public queries

    def tag_probability(self, user, tags) -> float:
        """Probability that ``user`` is persuaded by at least one tag in ``tags``."""
        try:
            row = self._user_pos[user]
        except KeyError:
            raise KeyError(f"unknown user {user!r}") from None
        idx = self.tag_indices(tags)
        if idx.size == 0:
            return 0.0
        return float(1.0 - np.prod(1.0 - self.affinity[row, idx]))

    def slot_influence(self, slots) -> float:
        return self.influence_idx(self.slot_indices(slots))

    def conditional_influence(self, slots, tags) -> float:
        return self.influence_idx(self.slot_indices(slots), self.tag_indices(tags))

    def marginal_gain(self, slots, tags, candidate) -> float:
        """Increase of ``I(slots | tags)`` from adding ``candidate``.

        ``candidate`` may be a slot id or a tag id and must not already be in
        the corresponding base set.
        """
        slots, tags = set(slots), set(tags)
        if candidate in self._slot_pos:
            if candidate in slots:
                raise ContractError(f"slot {candidate!r} already in the base set")
            bigger = (slots | {candidate}, tags)
        elif candidate in self._tag_pos:
            if candidate in tags:
                raise ContractError(f"tag {candidate!r} already in the base set")
            bigger = (slots, tags | {candidate})
        else:
            raise KeyError(f"unknown slot or tag {candidate!r}")
        return self.conditional_influence(*bigger) - self.conditional_influence(slots, tags)

    def edge_weights(self, slot_idx, tag_idx) -> np.ndarray:
        """``(len(tag_idx), len(slot_idx))`` matrix of singleton ``I({s} | {t})``."""
        slot_idx = np.asarray(slot_idx, dtype=np.int64)
        p = self.exposure[:, slot_idx]
        out = np.empty((len(tag_idx), len(slot_idx)))
        for row, t in enumerate(tag_idx):
            q = self.persuasion([t])
            out[row] = np.sum(1.0 - (1.0 - p * q[:, None]), axis=0)
        return out

    def allocation_influence(self, slot_idx, assignment, tag_idx) -> float:
        """Influence of an allocation: sum over tags of ``I(slots shown t | {t})``.

        ``assignment[j]`` is a position into ``tag_idx`` (or -1) for the slot
        ``slot_idx[j]``. Slots carrying different tags are treated as
        separate displays, so the per-tag influences add.
        """
        slot_idx = np.asarray(slot_idx, dtype=np.int64)
        assignment = np.asarray(assignment, dtype=np.int64)
        total = 0.0
        for pos, t in enumerate(tag_idx):
            group = slot_idx[assignment == pos]
            if group.size:
                total += self.influence_idx(group, [t])
        return total

    def clear_cache(self):
        self._q_cache.clear()
