"""NMF topic model over TF-IDF document vectors, used to filter the corpus."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import DocumentSet
from .vectorizer import SparseVector, to_csr

__all__ = [
    "TopicModel",
    "fit_nmf",
    "top_terms",
    "assign_topic",
    "filter_by_topics",
    "topic_report",
    "EPS",
]

EPS = 1e-12


@dataclass(frozen=True, eq=False)
class TopicModel:
    """Nonnegative factors ``X ~ W @ H`` plus the loss trace of the fit.

    ``loss_trace[0]`` is the loss at initialization, followed by one value per
    completed iteration.
    """

    W: np.ndarray
    H: np.ndarray
    seed: int
    loss_trace: tuple[float, ...]
    terms: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        for name in ("W", "H"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.W.shape[1] != self.H.shape[0]:
            raise ValueError("W and H inner dimensions differ")
        if self.terms is not None and len(self.terms) != self.H.shape[1]:
            raise ValueError("terms length does not match H")

    @property
    def k(self) -> int:
        return self.H.shape[0]

    @property
    def n_docs(self) -> int:
        return self.W.shape[0]

    def assign_topic(self, doc_index: int) -> int:
        return assign_topic(self, doc_index)

    def assignments(self) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. lowest topic index on ties
        return np.argmax(self.W, axis=1)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "terms": list(self.terms) if self.terms is not None else None,
            "W": self.W.tolist(),
            "H": self.H.tolist(),
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TopicModel":
        k = int(data["k"])
        W = np.asarray(data["W"], dtype=float).reshape(-1, k)
        H = np.asarray(data["H"], dtype=float).reshape(k, -1)
        terms = tuple(data["terms"]) if data.get("terms") is not None else None
        return cls(W, H, int(data["seed"]), tuple(data["loss_trace"]), terms)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TopicModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _frobenius_loss(X, W: np.ndarray, H: np.ndarray, x_sq: float) -> float:
    # ||X - WH||^2 = ||X||^2 - 2<X, WH> + <W'W, HH'>, without forming WH
    if sparse.issparse(X):
        cross = float(np.sum((X @ H.T) * W))
    else:
        cross = float(np.sum(X * (W @ H)))
    gram = float(np.sum((W.T @ W) * (H @ H.T)))
    return max(x_sq - 2.0 * cross + gram, 0.0)


def fit_nmf(
    vectors: Sequence[SparseVector] | np.ndarray | sparse.spmatrix,
    k: int = 10,
    seed: int = 0,
    max_iters: int = 300,
    rel_tol: float = 1e-5,
    terms: Sequence[str] | None = None,
) -> TopicModel:
    """Lee-Seung multiplicative updates for ``min ||X - WH||_F^2``.

    ``X`` is the document-term matrix built from ``vectors`` (rows are
    documents).  Iteration stops after ``max_iters`` updates or once the
    relative loss improvement drops below ``rel_tol``.
    """
    if isinstance(vectors, np.ndarray) or sparse.issparse(vectors):
        X = vectors
        if isinstance(X, np.ndarray):
            X = np.asarray(X, dtype=float)
    else:
        if len(vectors) == 0:
            raise ValueError("fit_nmf needs at least one document")
        X = to_csr(vectors)
    if sparse.issparse(X):
        X = sparse.csr_matrix(X, dtype=float)
        x_sq = float(X.multiply(X).sum())
        x_mean = float(X.sum()) / (X.shape[0] * X.shape[1]) if X.shape[0] * X.shape[1] else 0.0
        if X.nnz and X.data.min() < 0:
            raise ValueError("NMF input must be nonnegative")
    else:
        x_sq = float(np.sum(X * X))
        x_mean = float(X.mean()) if X.size else 0.0
        if X.size and X.min() < 0:
            raise ValueError("NMF input must be nonnegative")
    n_docs, n_terms = X.shape
    if n_docs == 0 or n_terms == 0:
        raise ValueError("fit_nmf needs a non-empty document-term matrix")
    if not 1 <= k <= min(n_docs, n_terms):
        raise ValueError(f"k={k} out of range [1, {min(n_docs, n_terms)}]")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if terms is not None and len(terms) != n_terms:
        raise ValueError("terms length does not match the matrix width")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(x_mean / k) if x_mean > 0 else 1.0
    # 1 - U[0, 1) lies in (0, 1]
    W = (1.0 - rng.random((n_docs, k))) * scale
    H = (1.0 - rng.random((k, n_terms))) * scale

    trace = [_frobenius_loss(X, W, H, x_sq)]
    for _ in range(max_iters):
        H *= np.asarray(X.T @ W).T / ((W.T @ W) @ H + EPS)
        W *= np.asarray(X @ H.T) / (W @ (H @ H.T) + EPS)
        loss = _frobenius_loss(X, W, H, x_sq)
        prev = trace[-1]
        trace.append(loss)
        if prev <= 0.0 or (prev - loss) / prev < rel_tol:
            break
    return TopicModel(W, H, seed, tuple(trace), tuple(terms) if terms is not None else None)


def top_terms(model: TopicModel, topic: int, n: int = 15) -> list[str]:
    """The ``n`` heaviest terms of a topic; ties go to the lower term index."""
    if not 0 <= topic < model.k:
        raise IndexError(f"topic {topic} out of range [0, {model.k})")
    if n <= 0:
        return []
    row = model.H[topic]
    order = np.lexsort((np.arange(row.size), -row))[:n]
    if model.terms is None:
        return [str(i) for i in order]
    return [model.terms[i] for i in order]


def assign_topic(model: TopicModel, doc_index: int) -> int:
    if not 0 <= doc_index < model.n_docs:
        raise IndexError(f"document index {doc_index} out of range [0, {model.n_docs})")
    return int(np.argmax(model.W[doc_index]))


def filter_by_topics(docs: DocumentSet, model: TopicModel, keep: Iterable[int]) -> DocumentSet:
    keep = set(keep)
    if not keep:
        raise ValueError("keep set must not be empty")
    bad = sorted(t for t in keep if not 0 <= t < model.k)
    if bad:
        raise ValueError(f"topic indices out of range: {bad}")
    if len(docs) != model.n_docs:
        raise ValueError(f"model was fit on {model.n_docs} documents, got {len(docs)}")
    assigned = model.assignments()
    return docs.subset(i for i in range(len(docs)) if int(assigned[i]) in keep)


def topic_report(model: TopicModel, n_terms: int = 15) -> list[dict]:
    counts = np.bincount(model.assignments(), minlength=model.k)
    return [
        {"topic": t, "documents": int(counts[t]), "top_terms": top_terms(model, t, n_terms)}
        for t in range(model.k)
    ]


def format_topic_report(report: list[dict]) -> str:
    lines = []
    for row in report:
        lines.append(f"topic {row['topic']:>2}  docs={row['documents']:<5} {' '.join(row['top_terms'])}")
    return "\n".join(lines)
