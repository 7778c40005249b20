import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pack_order.errors import ModelBuildError, SchemaError
from pack_order.preference import (
    LEGACY_COMPLEMENTARITY_TOL,
    SurveyCorpus,
    SurveySequence,
    build_matrix,
    deserialize_matrix,
    normalize_corpus,
    serialize_matrix,
)


def corpus(direction, *seqs):
    return SurveyCorpus(
        tuple(SurveySequence(f"p{i}", tuple(s)) for i, s in enumerate(seqs)),
        direction,
    )


class TestNormalizeCorpus:
    def test_top_first_is_reversed(self):
        out = normalize_corpus(corpus("top_first", ["eggs", "canned beans"]))
        assert out.direction == "bottom_first"
        assert out.sequences[0].items == ("canned beans", "eggs")

    def test_bottom_first_unchanged(self):
        out = normalize_corpus(corpus("bottom_first", ["bottle", "apples"]))
        assert out.sequences[0].items == ("bottle", "apples")

    def test_dedup_then_reverse(self):
        out = normalize_corpus(corpus("top_first", ["Eggs", "eggs", "Bricks"]))
        assert out.sequences[0].items == ("bricks", "eggs")

    def test_too_few_distinct_items_names_participant(self):
        with pytest.raises(SchemaError, match="p0"):
            normalize_corpus(corpus("top_first", ["eggs", "EGGS"]))


class TestBuildMatrix:
    def test_single_observation(self):
        m = build_matrix(corpus("bottom_first", ["A", "B"]), alpha=0)
        a, b = m.index_of("a"), m.index_of("b")
        assert m.prob[a, b] == 1.0
        assert m.prob[b, a] == 0.0
        assert m.count[a, b] == 1

    def test_hand_counted_precedences(self):
        m = build_matrix(corpus("bottom_first", ["A", "B", "C"], ["B", "A", "C"]), alpha=0)
        a, b, c = (m.index_of(x) for x in "abc")
        assert m.prob[a, b] == 0.5
        assert m.prob[a, c] == 1.0
        assert m.prob[b, c] == 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ModelBuildError):
            build_matrix(SurveyCorpus((), "bottom_first"))

    def test_negative_alpha_rejected(self):
        with pytest.raises(ModelBuildError):
            build_matrix(corpus("bottom_first", ["a", "b"]), alpha=-1)

    def test_unobserved_pairs_default_half(self):
        m = build_matrix(corpus("bottom_first", ["a", "b"], ["c", "d"]), alpha=0)
        a, c = m.index_of("a"), m.index_of("c")
        assert m.prob[a, c] == 0.5
        assert not m.observed[a, c]

    def test_diagonal_zero(self):
        m = build_matrix(corpus("bottom_first", ["a", "b"]), alpha=0)
        assert np.all(np.diag(m.prob) == 0)
        assert not np.any(np.diag(m.observed))

    def test_count_symmetry_counts_cooccurring_sequences(self):
        m = build_matrix(
            corpus("bottom_first", ["a", "b"], ["b", "a"], ["a", "c"]), alpha=0
        )
        a, b = m.index_of("a"), m.index_of("b")
        assert m.count[a, b] + m.count[b, a] == 2


def random_corpus(rng, n_classes, n_sequences):
    labels = [f"g{i}" for i in range(n_classes)]
    seqs = []
    for i in range(n_sequences):
        size = rng.randint(2, n_classes)
        seqs.append(SurveySequence(f"p{i}", tuple(rng.sample(labels, size))))
    return SurveyCorpus(tuple(seqs), "bottom_first")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(0, 5, allow_nan=False))
def test_complementarity_property(seed, alpha):
    import random
    rng = random.Random(seed)
    m = build_matrix(random_corpus(rng, rng.randint(2, 8), rng.randint(1, 12)), alpha)
    off = ~np.eye(m.size, dtype=bool)
    gap = np.abs(m.prob + m.prob.T - 1.0)
    assert np.all(gap[off & m.observed] < 1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(0.01, 5, allow_nan=False))
def test_alpha_pulls_toward_half_without_crossing(seed, alpha):
    import random
    rng = random.Random(seed)
    corpus_ = random_corpus(rng, rng.randint(2, 6), rng.randint(1, 10))
    raw = build_matrix(corpus_, 0.0)
    smoothed = build_matrix(corpus_, alpha)
    obs = raw.observed
    assert np.all(np.abs(smoothed.prob[obs] - 0.5) <= np.abs(raw.prob[obs] - 0.5) + 1e-15)
    fair = obs & np.isclose(raw.prob, 0.5)
    assert np.allclose(smoothed.prob[fair], 0.5)


def test_sequence_order_permutation_invariant():
    import random
    rng = random.Random(7)
    c = random_corpus(rng, 5, 8)
    shuffled = SurveyCorpus(tuple(reversed(c.sequences)), c.direction)
    assert build_matrix(c, 0.3) == build_matrix(shuffled, 0.3)


def test_reversing_corpus_transposes_matrix():
    import random
    rng = random.Random(11)
    c = random_corpus(rng, 5, 8)
    reversed_c = SurveyCorpus(
        tuple(SurveySequence(s.participant, tuple(reversed(s.items))) for s in c.sequences),
        "bottom_first",
    )
    m = build_matrix(c, 0.0)
    mr = build_matrix(reversed_c, 0.0)
    off = ~np.eye(m.size, dtype=bool)
    assert np.array_equal(m.prob[off], mr.prob.T[off])
    assert np.array_equal(m.count, mr.count.T)


class TestSerialization:
    def test_round_trip_identity(self):
        m = build_matrix(corpus("bottom_first", ["a", "b"], ["b", "a"], ["a", "c"]), alpha=0.5)
        assert deserialize_matrix(serialize_matrix(m)) == m

    def test_round_trip_bit_exact_probabilities(self):
        m = build_matrix(corpus("bottom_first", ["a", "b", "c"], ["c", "b", "a"]), alpha=0.25)
        doc = json.loads(json.dumps(serialize_matrix(m)))
        m2 = deserialize_matrix(doc)
        assert np.array_equal(m.prob, m2.prob)

    def test_complementarity_violation_rejected_with_path(self):
        doc = serialize_matrix(build_matrix(corpus("bottom_first", ["a", "b"]), 0))
        doc["prob"][0][1] = 0.7
        doc["prob"][1][0] = 0.7
        with pytest.raises(SchemaError, match=r"prob\[0\]\[1\]"):
            deserialize_matrix(doc)

    def test_probability_out_of_range_rejected(self):
        doc = serialize_matrix(build_matrix(corpus("bottom_first", ["a", "b"]), 0))
        doc["prob"][0][1] = 1.5
        with pytest.raises(SchemaError, match="outside"):
            deserialize_matrix(doc)

    def test_legacy_table_accepted_with_rounding_slack(self, table1_matrix):
        # pairs like 0.964/0.035 sum to 0.999 due to 3-decimal rounding
        doc = serialize_matrix(table1_matrix)
        with pytest.raises(SchemaError):
            deserialize_matrix(doc)  # strict 1e-9 rejects
        m = deserialize_matrix(doc, LEGACY_COMPLEMENTARITY_TOL)
        assert m.classes == ("bottle", "apples", "bananas", "bell pepper")

    def test_matrix_is_immutable(self):
        m = build_matrix(corpus("bottom_first", ["a", "b"]), 0)
        with pytest.raises(ValueError):
            m.prob[0, 1] = 0.3
