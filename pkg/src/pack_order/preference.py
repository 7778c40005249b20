"""Pairwise placement-probability model built from human packing surveys.

The model stores, for every pair of grocery classes (i, k), the probability
that humans place class i below class k in the container. Sequences are kept
bottom-first internally: index 0 is the lowest item. Survey data collected
top-first is reversed at ingestion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelBuildError, SchemaError
from .labels import normalize_label

COMPLEMENTARITY_TOL = 1e-9
# imported tables rounded to 3 decimals: worst-case pair gap is exactly 1e-3,
# padded slightly so float addition noise cannot tip it over the bound
LEGACY_COMPLEMENTARITY_TOL = 1.5e-3

DIRECTIONS = ("top_first", "bottom_first")


@dataclass(frozen=True)
class SurveySequence:
    participant: str
    items: tuple[str, ...]


@dataclass(frozen=True)
class SurveyCorpus:
    """A set of human-annotated packing sequences with a declared direction."""

    sequences: tuple[SurveySequence, ...]
    direction: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise SchemaError(f"unknown direction {self.direction!r}")


def normalize_corpus(corpus: SurveyCorpus) -> SurveyCorpus:
    """Canonicalize a survey corpus to bottom-first, deduplicated, normalized labels.

    Duplicate classes within one sequence collapse to their first occurrence
    (in the original reading direction, so the stronger placement signal wins).
    Sequences with fewer than 2 distinct items are rejected.
    """
    out = []
    for seq in corpus.sequences:
        items = []
        seen = set()
        for raw in seq.items:
            label = normalize_label(raw)
            if label not in seen:
                seen.add(label)
                items.append(label)
        if len(items) < 2:
            raise SchemaError(
                f"sequence from participant {seq.participant!r} has fewer than "
                f"2 distinct items after deduplication"
            )
        if corpus.direction == "top_first":
            items.reverse()
        out.append(SurveySequence(seq.participant, tuple(items)))
    return SurveyCorpus(tuple(out), "bottom_first")


@dataclass(frozen=True)
class PreferenceMatrix:
    """Immutable pairwise model: prob[i, k] = P(class i placed below class k)."""

    classes: tuple[str, ...]
    alpha: float
    prob: np.ndarray
    count: np.ndarray
    observed: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.prob, self.count, self.observed):
            arr.setflags(write=False)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.classes)})

    def index_of(self, label: str) -> int | None:
        return self._index.get(label)

    @property
    def size(self) -> int:
        return len(self.classes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PreferenceMatrix):
            return NotImplemented
        return (
            self.classes == other.classes
            and self.alpha == other.alpha
            and np.array_equal(self.prob, other.prob)
            and np.array_equal(self.count, other.count)
            and np.array_equal(self.observed, other.observed)
        )


def build_matrix(corpus: SurveyCorpus, alpha: float = 0.0) -> PreferenceMatrix:
    """Tally pairwise precedences over a bottom-first corpus into a PreferenceMatrix.

    count[i, k] = number of sequences in which i precedes (sits below) k.
    prob[i, k] = (count[i, k] + alpha) / (count[i, k] + count[k, i] + 2 * alpha)
    for observed pairs; 0.5 with observed=False for pairs never co-occurring.
    """
    if alpha < 0:
        raise ModelBuildError(f"smoothing alpha must be non-negative, got {alpha}")
    corpus = normalize_corpus(corpus)
    if not corpus.sequences:
        raise ModelBuildError("cannot build a model from an empty corpus")

    classes = tuple(sorted({c for seq in corpus.sequences for c in seq.items}))
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)

    count = np.zeros((n, n), dtype=np.int64)
    for seq in corpus.sequences:
        idx = [index[c] for c in seq.items]
        for p in range(len(idx)):
            for q in range(p + 1, len(idx)):
                count[idx[p], idx[q]] += 1

    totals = count + count.T
    observed = totals > 0
    prob = np.full((n, n), 0.5, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        smoothed = (count + alpha) / (totals + 2.0 * alpha)
    prob[observed] = smoothed[observed]
    np.fill_diagonal(prob, 0.0)
    np.fill_diagonal(observed, False)

    return PreferenceMatrix(classes, float(alpha), prob, count, observed)


def _validate_matrix_arrays(classes, prob, count, observed, tol):
    n = len(classes)
    for name, arr in (("prob", prob), ("count", count), ("observed", observed)):
        if arr.shape != (n, n):
            raise SchemaError(f"{name} must be {n}x{n}, got {arr.shape}")
    if np.any(prob < 0) or np.any(prob > 1):
        i, k = np.argwhere((prob < 0) | (prob > 1))[0]
        raise SchemaError(f"prob[{i}][{k}] = {prob[i, k]} outside [0, 1]")
    if np.any(count < 0):
        i, k = np.argwhere(count < 0)[0]
        raise SchemaError(f"count[{i}][{k}] = {count[i, k]} is negative")
    off = ~np.eye(n, dtype=bool)
    gap = np.abs(prob + prob.T - 1.0)
    bad = off & (gap > tol)
    if np.any(bad):
        i, k = np.argwhere(bad)[0]
        raise SchemaError(
            f"prob[{i}][{k}] + prob[{k}][{i}] = {prob[i, k] + prob[k, i]} "
            f"violates complementarity (tolerance {tol})"
        )


def serialize_matrix(m: PreferenceMatrix) -> dict:
    """Render the matrix as a JSON-ready document (probabilities bit-exact)."""
    return {
        "classes": list(m.classes),
        "alpha": m.alpha,
        "prob": [[float(x) for x in row] for row in m.prob],
        "count": [[int(x) for x in row] for row in m.count],
        "observed": [[bool(x) for x in row] for row in m.observed],
    }


def deserialize_matrix(doc: dict, complementarity_tol: float = COMPLEMENTARITY_TOL) -> PreferenceMatrix:
    """Rebuild a PreferenceMatrix from its document form, validating invariants.

    Use complementarity_tol=LEGACY_COMPLEMENTARITY_TOL for tables imported from
    3-decimal published values; self-produced files are held to 1e-9.
    """
    try:
        classes = tuple(normalize_label(c) for c in doc["classes"])
        alpha = float(doc["alpha"])
        prob = np.asarray(doc["prob"], dtype=np.float64)
        count = np.asarray(doc["count"], dtype=np.int64)
        observed = np.asarray(doc["observed"], dtype=bool)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed matrix document: {exc}") from exc
    if len(set(classes)) != len(classes):
        raise SchemaError("duplicate classes in matrix document")
    if alpha < 0:
        raise SchemaError(f"alpha must be non-negative, got {alpha}")
    _validate_matrix_arrays(classes, prob, count, observed, complementarity_tol)
    return PreferenceMatrix(classes, alpha, prob, count, observed)


def save_matrix(m: PreferenceMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(serialize_matrix(m), f, indent=2)
        f.write("\n")


def load_matrix(path, complementarity_tol: float = COMPLEMENTARITY_TOL) -> PreferenceMatrix:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    return deserialize_matrix(doc, complementarity_tol)
