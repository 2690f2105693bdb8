"""Independent reference implementations and shared constants for the tests.

Only constants (hinge words, lexicon categories) come from the package;
every computation is written out independently.
"""

import itertools
import math
import random

import mpmath
import numpy as np
from scipy import sparse

from finsent.lexicon import HINGE_WORDS, SentimentCategory

# 10 items rated by 14 raters into 5 categories (the standard worked example)
WORKED = np.array(
    [
        [0, 0, 0, 0, 14],
        [0, 2, 6, 4, 2],
        [0, 0, 3, 5, 6],
        [0, 3, 9, 2, 0],
        [2, 2, 8, 1, 1],
        [7, 7, 0, 0, 0],
        [3, 2, 6, 3, 0],
        [2, 5, 3, 2, 2],
        [6, 5, 2, 1, 0],
        [0, 2, 2, 3, 7],
    ]
)
# hand-computed: column totals 20, 28, 39, 21, 32 over 140 ratings;
# per-item agreement (sum n^2 - 14) / 182 gives
# 1.000 .253 .308 .440 .330 .462 .242 .176 .286 .286
HAND_P_ITEMS = [182 / 182, 46 / 182, 56 / 182, 80 / 182, 60 / 182, 84 / 182, 44 / 182, 32 / 182, 52 / 182, 52 / 182]
HAND_P_BAR = sum(HAND_P_ITEMS) / 10  # 0.378
HAND_P_E = sum((c / 140) ** 2 for c in (20, 28, 39, 21, 32))  # 0.213
HAND_KAPPA = (HAND_P_BAR - HAND_P_E) / (1 - HAND_P_E)


def brute_force_kappa(matrix):
    """Fleiss' kappa from explicit rater-pair enumeration."""
    matrix = np.asarray(matrix)
    n_items, n_cat = matrix.shape
    ratings = [[c for c in range(n_cat) for _ in range(int(matrix[i, c]))] for i in range(n_items)]
    n = len(ratings[0])
    p_items = []
    for r in ratings:
        agree = sum(1 for a, b in itertools.permutations(range(n), 2) if r[a] == r[b])
        p_items.append(agree / (n * (n - 1)))
    p_bar = sum(p_items) / n_items
    totals = [sum(1 for r in ratings for v in r if v == c) for c in range(n_cat)]
    p_e = sum((t / (n_items * n)) ** 2 for t in totals)
    if p_bar == 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)


def random_matrix(rng, n_items, n_raters, n_cat=4):
    out = np.zeros((n_items, n_cat), dtype=int)
    for i in range(n_items):
        for c in rng.integers(0, n_cat, n_raters):
            out[i, c] += 1
    return out


def brute_force_tfidf(corpus, query):
    """Textbook evaluation of the smoothed TF-IDF formula, term by term."""
    n = len(corpus)
    vocab = []
    for doc in corpus:
        for t in doc:
            if t not in vocab:
                vocab.append(t)
    weights = []
    for t in vocab:
        df = sum(1 for doc in corpus if t in doc)
        idf = math.log((1 + n) / (1 + df)) + 1
        weights.append(query.count(t) * idf)
    norm = math.sqrt(sum(w * w for w in weights))
    return vocab, [w / norm if norm else 0.0 for w in weights]



def random_sparse(seed, shape=(50, 200), density=0.05):
    return sparse.random(*shape, density=density, random_state=seed, format="csr")


def dense_loss(X, W, H):
    D = (X.toarray() if sparse.issparse(X) else X) - W @ H
    return float(np.sum(D * D))


mpmath.mp.dps = 50


def mp_loss(m, y):
    p = 1 / (1 + mpmath.exp(-m))
    return -(y * mpmath.log(p) + (1 - y) * mpmath.log(1 - p))


CURATED_BIGRAMS = {
    "record low": SentimentCategory.NEGATIVE,
    "record lows": SentimentCategory.NEGATIVE,
    "back foot": SentimentCategory.NEGATIVE,
    "price halves": SentimentCategory.NEGATIVE,
    "new record": SentimentCategory.POSITIVE,
    "record high": SentimentCategory.POSITIVE,
    "record highs": SentimentCategory.POSITIVE,
    "record production": SentimentCategory.POSITIVE,
    "on track": SentimentCategory.POSITIVE,
}
REMOVALS = ["break", "closed", "closing", "despite"]




VOCAB = (
    "sasol jse rand oil shares profit record low high new production on track back foot price halves "
    "fall falls fell rise rose gains surge warning could may lawsuit risks closed closing break the of "
    "for to in investors market"
).split()


def random_headline(rng: random.Random) -> str:
    words = [rng.choice(VOCAB) for _ in range(rng.randint(1, 10))]
    out = []
    for w in words:
        r = rng.random()
        if r < 0.12:
            out.append(rng.choice(HINGE_WORDS))
        elif r < 0.18 and out:
            out[-1] += ","
        if rng.random() < 0.2:
            w = w.capitalize()
        out.append(w)
    return " ".join(out)
