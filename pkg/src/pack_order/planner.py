"""Sequence planners: exact maximum-consistency search, heuristics, random baseline.

All planners return a bottom-first permutation of the input items. Candidate
orders are compared with the key (-zero_probability_pairs, finite_log_sum),
so -inf-scoring orders stay comparable (fewer impossible pairs wins). Ties
break toward the lexicographically smallest sequence of catalog indices,
making every planner deterministic.
"""

from __future__ import annotations

import math
import random

from .errors import CapacityError, ScoringError
from .preference import PreferenceMatrix
from .scoring import PackingSequence, score_key

EXACT_MAX_ITEMS = 10
LOCAL_SEARCH_RESTARTS = 8

Key = tuple[int, float]


def _catalog_indices(items, m: PreferenceMatrix) -> list[int]:
    indices = []
    seen = set()
    for label in items:
        idx = m.index_of(label)
        if idx is None:
            raise ScoringError(f"label {label!r} is not in the model's class catalog")
        if idx in seen:
            raise ScoringError(f"duplicate item {label!r} in plan request")
        seen.add(idx)
        indices.append(idx)
    if not indices:
        raise ScoringError("plan request needs at least one item")
    return sorted(indices)


def _pair_key(m: PreferenceMatrix, below: int, above_set: list[int]) -> Key:
    zeros = 0
    finite = 0.0
    for k in above_set:
        prob = m.prob[below, k]
        if prob > 0:
            finite += math.log(prob)
        else:
            zeros += 1
    return (-zeros, finite)


def _add(a: Key, b: Key) -> Key:
    return (a[0] + b[0], a[1] + b[1])


def plan_exact(items, m: PreferenceMatrix, exact_max_items: int = EXACT_MAX_ITEMS) -> PackingSequence:
    """Exhaustive maximum-consistency ordering via dynamic programming over subsets.

    Exact for the pairwise objective: placing an item at the bottom of a
    remaining set contributes a fixed sum of pair terms regardless of how the
    rest is ordered, so the optimum over 2^n subsets equals the optimum over
    n! permutations. Reconstruction prefers the lexicographically smallest
    catalog-index sequence among optimal orders.
    """
    idx = _catalog_indices(items, m)
    n = len(idx)
    if n > exact_max_items:
        raise CapacityError(
            f"exact planning caps at {exact_max_items} items, got {n}; "
            f"use local_search or greedy instead"
        )

    full = (1 << n) - 1
    # best[mask] = best within-score key for arranging the item subset `mask`
    best: list[Key] = [(0, 0.0)] * (1 << n)
    for mask in range(1, full + 1):
        cand_best = None
        for j in range(n):
            if not (mask >> j & 1):
                continue
            sub = mask & ~(1 << j)
            above = [idx[t] for t in range(n) if sub >> t & 1]
            cand = _add(best[sub], _pair_key(m, idx[j], above))
            if cand_best is None or cand > cand_best:
                cand_best = cand
        best[mask] = cand_best

    # Walk from the bottom: at each step take the smallest catalog index
    # among items achieving the optimal key for the remaining set.
    order: list[int] = []
    mask = full
    while mask:
        chosen = None
        for j in range(n):  # idx is sorted, so first achiever is lexicographically smallest
            if not (mask >> j & 1):
                continue
            sub = mask & ~(1 << j)
            above = [idx[t] for t in range(n) if sub >> t & 1]
            cand = _add(best[sub], _pair_key(m, idx[j], above))
            if cand == best[mask]:
                chosen = j
                break
        assert chosen is not None
        order.append(idx[chosen])
        mask &= ~(1 << chosen)

    return PackingSequence(tuple(m.classes[i] for i in order))


def plan_greedy(items, m: PreferenceMatrix) -> PackingSequence:
    """Sort items by their propensity to sit below the others.

    Weight of item i = sum over other requested items k of prob[i, k];
    descending, ties toward smaller catalog index.
    """
    idx = _catalog_indices(items, m)
    weights = {i: sum(m.prob[i, k] for k in idx if k != i) for i in idx}
    order = sorted(idx, key=lambda i: (-weights[i], i))
    return PackingSequence(tuple(m.classes[i] for i in order))


def _best_insertion_pass(seq: list[str], m: PreferenceMatrix, current: Key) -> tuple[list[str], Key] | None:
    """One steepest-descent step: best (remove item, reinsert) move, or None."""
    best_move = None
    best_key = current
    for p in range(len(seq)):
        rest = seq[:p] + seq[p + 1:]
        for q in range(len(seq)):
            if q == p:
                continue
            cand = rest[:q] + [seq[p]] + rest[q:]
            key = score_key(PackingSequence(tuple(cand)), m)
            if key > best_key:
                best_key = key
                best_move = cand
    if best_move is None:
        return None
    return best_move, best_key


def plan_local_search(
    items,
    m: PreferenceMatrix,
    seed: int | None = None,
    restarts: int = LOCAL_SEARCH_RESTARTS,
) -> PackingSequence:
    """Best-insertion local search from a greedy start plus seeded random restarts."""
    rng = random.Random(seed)
    starts = [list(plan_greedy(items, m).items)]
    base = list(starts[0])
    for _ in range(max(0, restarts - 1)):
        perm = base[:]
        rng.shuffle(perm)
        starts.append(perm)

    best_seq: list[str] | None = None
    best_key: Key | None = None
    for start in starts:
        seq = start
        key = score_key(PackingSequence(tuple(seq)), m)
        while True:
            step = _best_insertion_pass(seq, m, key)
            if step is None:
                break
            seq, key = step
        if best_key is None or key > best_key:
            best_key = key
            best_seq = seq
    assert best_seq is not None
    return PackingSequence(tuple(best_seq))


def plan_random(items, seed: int | None = None) -> PackingSequence:
    """Uniform random permutation from a seeded generator."""
    pool = list(dict.fromkeys(items))
    if not pool:
        raise ScoringError("plan request needs at least one item")
    rng = random.Random(seed)
    rng.shuffle(pool)
    return PackingSequence(tuple(pool))


PLANNERS = ("exact", "greedy", "local_search", "random")


def plan(
    method: str,
    items,
    m: PreferenceMatrix | None = None,
    seed: int | None = None,
    restarts: int = LOCAL_SEARCH_RESTARTS,
    exact_max_items: int = EXACT_MAX_ITEMS,
) -> PackingSequence:
    """Dispatch to one planning method by name."""
    if method == "exact":
        return plan_exact(items, m, exact_max_items)
    if method == "greedy":
        return plan_greedy(items, m)
    if method == "local_search":
        return plan_local_search(items, m, seed, restarts)
    if method == "random":
        return plan_random(items, seed)
    raise ValueError(f"unknown planning method {method!r}")
