"""Vocabulary and smooth-idf TF-IDF weighting."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Vocabulary",
    "TfidfModel",
    "SparseVector",
    "fit_tfidf",
    "transform",
    "vocabulary_overlap",
    "to_csr",
]


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    document_frequency: tuple[int, ...]
    n_documents: int

    def __post_init__(self) -> None:
        if len(self.terms) != len(self.document_frequency):
            raise ValueError("terms and document_frequency differ in length")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate vocabulary term")
        for term, df in zip(self.terms, self.document_frequency):
            if not 1 <= df <= self.n_documents:
                raise ValueError(f"document frequency of {term!r} out of range: {df}")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    @property
    def term_to_index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.term_to_index


@dataclass(frozen=True)
class SparseVector:
    """Sorted ``(index, weight)`` pairs of a length-``dimension`` vector."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.dimension:
                raise ValueError("indices must be strictly increasing and < dimension")
            prev = i
        if not all(math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")

    @classmethod
    def from_dict(cls, entries: dict[int, float], dimension: int) -> "SparseVector":
        keys = sorted(entries)
        return cls(tuple(keys), tuple(float(entries[k]) for k in keys), dimension)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.weights))

    def __len__(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for w in self.weights))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[list(self.indices)] = self.weights
        return out

    def with_dimension(self, dimension: int) -> "SparseVector":
        return SparseVector(self.indices, self.weights, dimension)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Vocabulary
    idf: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def to_json(self) -> dict:
        return {
            "n_documents": self.vocabulary.n_documents,
            "terms": list(self.vocabulary.terms),
            "df": list(self.vocabulary.document_frequency),
            "idf": list(self.idf),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TfidfModel":
        vocab = Vocabulary(tuple(data["terms"]), tuple(int(x) for x in data["df"]), int(data["n_documents"]))
        idf = tuple(float(x) for x in data["idf"])
        if len(idf) != len(vocab):
            raise ValueError("idf length does not match vocabulary")
        return cls(vocab, idf)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def smooth_idf(n_documents: int, df: int) -> float:
    return math.log((1 + n_documents) / (1 + df)) + 1.0


def fit_tfidf(token_lists: Sequence[Sequence[str]], min_df: int = 1) -> TfidfModel:
    """Fit vocabulary and idf weights.

    Terms are indexed in order of first occurrence across the corpus and
    kept only when they occur in at least ``min_df`` documents.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if not any(token_lists):
        raise ValueError("cannot fit TF-IDF: all documents are empty")
    df: Counter[str] = Counter()
    order: dict[str, None] = {}
    for tokens in token_lists:
        for tok in tokens:
            order.setdefault(tok, None)
        df.update(set(tokens))
    n = len(token_lists)
    terms = tuple(t for t in order if df[t] >= min_df)
    if not terms:
        raise ValueError(f"no term reaches min_df={min_df}; vocabulary would be empty")
    dfs = tuple(df[t] for t in terms)
    vocab = Vocabulary(terms, dfs, n)
    return TfidfModel(vocab, tuple(smooth_idf(n, d) for d in dfs))


def transform(tokens: Iterable[str], model: TfidfModel) -> SparseVector:
    index = model.vocabulary.term_to_index
    counts: Counter[int] = Counter(index[t] for t in tokens if t in index)
    if not counts:
        return SparseVector((), (), model.dimension)
    keys = sorted(counts)
    raw = [counts[k] * model.idf[k] for k in keys]
    norm = math.sqrt(math.fsum(w * w for w in raw))
    return SparseVector(tuple(keys), tuple(w / norm for w in raw), model.dimension)


def vocabulary_overlap(a: Vocabulary | Iterable[str], b: Vocabulary | Iterable[str]) -> float:
    """Fraction of ``b``'s terms that ``a`` also knows."""
    terms_a = set(a.terms if isinstance(a, Vocabulary) else a)
    terms_b = set(b.terms if isinstance(b, Vocabulary) else b)
    if not terms_a or not terms_b:
        raise ValueError("vocabulary_overlap needs two non-empty vocabularies")
    return len(terms_a & terms_b) / len(terms_b)


def to_csr(vectors: Sequence[SparseVector], dimension: int | None = None):
    """Stack sparse vectors into a ``scipy.sparse.csr_matrix``."""
    from scipy import sparse

    if dimension is None:
        if not vectors:
            raise ValueError("cannot infer dimension of an empty vector list")
        dimension = vectors[0].dimension
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for v in vectors:
        if v.dimension != dimension:
            raise ValueError("vector dimensions differ")
        indices.extend(v.indices)
        data.extend(v.weights)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(vectors), dimension),
    )
