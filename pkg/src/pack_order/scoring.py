"""Packing Consistency Score: log-likelihood of a bottom-first sequence
under the pairwise placement model.

A sequence scores the sum of ln prob[below, above] over all strict position
pairs p < q. A zero-probability pair drives the score to -inf, which is kept
as a first-class float('-inf'), never a sentinel. Repeated classes within a
sequence contribute nothing (model outputs may repeat items).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AggregationError, ScoringError
from .labels import resolve_label
from .preference import PreferenceMatrix


@dataclass(frozen=True)
class PackingSequence:
    """Ordered class labels, bottom-first: items[0] is the lowest in the box."""

    items: tuple[str, ...]

    def __post_init__(self):
        if not self.items:
            raise ScoringError("a packing sequence needs at least one item")

    @classmethod
    def from_labels(cls, labels, aliases: dict[str, str] | None = None) -> "PackingSequence":
        return cls(tuple(resolve_label(x, aliases) for x in labels))


@dataclass(frozen=True)
class ConsistencyScore:
    """Score value (finite or -inf) plus the per-pair log contributions."""

    value: float
    pair_terms: tuple[tuple[str, str, float], ...]

    @property
    def zero_pair_count(self) -> int:
        return sum(1 for _, _, t in self.pair_terms if t == -math.inf)


def _resolve_indices(s: PackingSequence, m: PreferenceMatrix) -> list[int]:
    indices = []
    for label in s.items:
        idx = m.index_of(label)
        if idx is None:
            raise ScoringError(f"label {label!r} is not in the model's class catalog")
        indices.append(idx)
    return indices


def score(s: PackingSequence, m: PreferenceMatrix) -> ConsistencyScore:
    """Consistency score of a bottom-first sequence against the model.

    Same-class position pairs are skipped (contribution 0); a single-item
    sequence scores exactly 0 (empty product).
    """
    indices = _resolve_indices(s, m)
    terms = []
    total = 0.0
    for p in range(len(indices)):
        for q in range(p + 1, len(indices)):
            i, k = indices[p], indices[q]
            if i == k:
                continue
            prob = m.prob[i, k]
            term = math.log(prob) if prob > 0 else -math.inf
            terms.append((s.items[p], s.items[q], term))
            total += term
    return ConsistencyScore(total, tuple(terms))


def score_key(s: PackingSequence, m: PreferenceMatrix) -> tuple[int, float]:
    """Ordering key for planners: (-zero_probability_pairs, finite_log_sum).

    Larger is better. Keeps -inf candidates comparable: fewer impossible
    pairs wins, then the finite part of the sum decides.
    """
    indices = _resolve_indices(s, m)
    zeros = 0
    finite = 0.0
    for p in range(len(indices)):
        for q in range(p + 1, len(indices)):
            i, k = indices[p], indices[q]
            if i == k:
                continue
            prob = m.prob[i, k]
            if prob > 0:
                finite += math.log(prob)
            else:
                zeros += 1
    return (-zeros, finite)


@dataclass(frozen=True)
class AverageScore:
    value: float
    infinite_count: int


def average_score(scores: list[ConsistencyScore]) -> AverageScore:
    """Arithmetic mean of score values; -inf if any element is -inf."""
    if not scores:
        raise AggregationError("cannot average an empty list of scores")
    infinite = sum(1 for s in scores if s.value == -math.inf)
    if infinite:
        return AverageScore(-math.inf, infinite)
    return AverageScore(sum(s.value for s in scores) / len(scores), 0)


def constraint_satisfaction_rate(s: PackingSequence, m: PreferenceMatrix) -> float:
    """Fraction of distinct-class position pairs agreeing with the majority preference.

    A pair (p below q) counts as satisfied when prob[p, q] >= 0.5.
    """
    indices = _resolve_indices(s, m)
    satisfied = 0
    pairs = 0
    for p in range(len(indices)):
        for q in range(p + 1, len(indices)):
            i, k = indices[p], indices[q]
            if i == k:
                continue
            pairs += 1
            if m.prob[i, k] >= 0.5:
                satisfied += 1
    if pairs == 0:
        raise ScoringError("constraint satisfaction rate needs at least 2 distinct classes")
    return satisfied / pairs
