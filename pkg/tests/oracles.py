"""Reference computations written straight from the definitions.

Plain Python loops over users, slots and tags: no numpy, no caching, no
shared code with the package.
"""

import itertools
import math


def tag_prob(A, u, T):
    miss = 1.0
    for t in T:
        miss *= 1.0 - A[u][t]
    return 1.0 - miss if T else 0.0


def slot_influence(P, S):
    total = 0.0
    for u in range(len(P)):
        miss = 1.0
        for s in S:
            miss *= 1.0 - P[u][s]
        total += 1.0 - miss
    return total


def conditional_influence(P, A, S, T):
    if not S or not T:
        return 0.0
    total = 0.0
    for u in range(len(P)):
        q = tag_prob(A, u, T)
        miss = 1.0
        for s in S:
            miss *= 1.0 - P[u][s] * q
        total += 1.0 - miss
    return total


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def best_assignment(W, mask, bounds):
    """Brute-force max-weight assignment: returns (total, assignment tuple)."""
    n_tags, n_slots = len(W), len(W[0]) if W else 0
    options = [[-1] + [t for t in range(n_tags) if mask[t][s]] for s in range(n_slots)]
    best = (-math.inf, None)
    for assign in itertools.product(*options):
        if any(sum(1 for a in assign if a == t) > bounds[t] for t in range(n_tags)):
            continue
        total = sum(W[a][s] for s, a in enumerate(assign) if a >= 0)
        if total > best[0]:
            best = (total, assign)
    return best


def is_dominating(W, mask, t, s):
    """Strict mutual-best test on present edges."""
    if not mask[t][s]:
        return False
    w = W[t][s]
    for s2 in range(len(W[0])):
        if s2 != s and mask[t][s2] and W[t][s2] >= w:
            return False
    for t2 in range(len(W)):
        if t2 != t and mask[t2][s] and W[t2][s] >= w:
            return False
    return True
