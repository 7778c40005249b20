import itertools
import math
import random
from pathlib import Path

import numpy as np
import pytest

from pack_order.preference import LEGACY_COMPLEMENTARITY_TOL, PreferenceMatrix, load_matrix

DATA_DIR = Path(__file__).parent / "fixtures"
PACKAGE_DATA = Path(__file__).parents[1] / "src" / "pack_order" / "data"


@pytest.fixture
def table1_matrix() -> PreferenceMatrix:
    """The paper's published 4-class example table (3-decimal rounding)."""
    return load_matrix(PACKAGE_DATA / "example_matrix.json", LEGACY_COMPLEMENTARITY_TOL)


def make_matrix(classes, prob, alpha=0.0) -> PreferenceMatrix:
    prob = np.asarray(prob, dtype=np.float64)
    n = len(classes)
    observed = ~np.eye(n, dtype=bool)
    return PreferenceMatrix(tuple(classes), alpha, prob,
                            np.zeros((n, n), dtype=np.int64), observed)


def random_matrix(rng: random.Random, n: int, low=0.05, high=0.95) -> PreferenceMatrix:
    """Complementary random matrix with all probabilities strictly inside (0, 1)."""
    prob = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            p = rng.uniform(low, high)
            prob[i, k] = p
            prob[k, i] = 1.0 - p
    classes = tuple(f"c{i:02d}" for i in range(n))
    return make_matrix(classes, prob)


def oracle_score(items, m: PreferenceMatrix) -> float:
    """Independent brute-force oracle: materialize every position pair,
    multiply the raw probabilities, log once at the end."""
    idx = [m.index_of(label) for label in items]
    pairs = list(itertools.combinations(range(len(idx)), 2))
    product = 1.0
    for p, q in pairs:
        if idx[p] == idx[q]:
            continue
        product *= m.prob[idx[p], idx[q]]
    if product == 0.0:
        return -math.inf
    return math.log(product)


def oracle_exact(items, m: PreferenceMatrix):
    """Brute force over all permutations with the planners' comparison key
    and lexicographic catalog-index tie-break."""
    idx = sorted(m.index_of(label) for label in items)
    best = None
    best_key = None
    for perm in itertools.permutations(idx):
        zeros = 0
        finite = 0.0
        for p in range(len(perm)):
            for q in range(p + 1, len(perm)):
                v = m.prob[perm[p], perm[q]]
                if v > 0:
                    finite += math.log(v)
                else:
                    zeros += 1
        key = (-zeros, finite)
        if best_key is None or key > best_key:
            best_key = key
            best = perm
    return tuple(m.classes[i] for i in best), best_key
