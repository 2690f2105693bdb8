"""Seeded synthetic datasets shared by the unit and acceptance tests."""

import datetime as dt

import numpy as np

from finsent.labels import Label
from finsent.market import AlignedRow, AlignedTable
from finsent.vectorizer import SparseVector


def one_d_separable(n: int = 20):
    """Feature 0 on an even grid in [0.05, 1]; label is ``x > 0.5``."""
    xs = np.linspace(0.05, 1.0, n)
    feats = [SparseVector((0,), (float(x),), 1) for x in xs]
    return feats, [int(x > 0.5) for x in xs]


def sparse_linear(n: int = 500, dim: int = 60, n_informative: int = 12, density: float = 0.08, margin: float = 0.25, seed: int = 0):
    """Sparse nonnegative vectors labelled by the sign of a hidden linear score.

    Informative weights are +-U(0.5, 1.5); the rest are zero. Samples whose
    score lies within ``margin`` of zero are rejected, so the classes are
    linearly separable with a gap.
    """
    rng = np.random.default_rng(seed)
    w = np.zeros(dim)
    w[:n_informative] = rng.uniform(0.5, 1.5, n_informative) * rng.choice([-1.0, 1.0], n_informative)
    feats, labels = [], []
    while len(feats) < n:
        mask = rng.random(dim) < density
        if not mask.any():
            continue
        x = np.where(mask, rng.uniform(0.1, 1.0, dim), 0.0)
        s = float(x @ w)
        if abs(s) < margin:
            continue
        idx = np.flatnonzero(x)
        feats.append(SparseVector(tuple(int(i) for i in idx), tuple(float(v) for v in x[idx]), dim))
        labels.append(int(s > 0))
    return feats, labels


def monotone_table(n: int = 30, start=dt.date(2020, 1, 1)) -> AlignedTable:
    """Strictly rising closes with Positive sentiment on every day."""
    rows = [
        AlignedRow(start + dt.timedelta(days=i), 100.0 + i, Label.POSITIVE, 1, 0, 0)
        for i in range(n)
    ]
    return AlignedTable(tuple(rows))
