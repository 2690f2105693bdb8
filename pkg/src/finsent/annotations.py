"""Human annotations: loading, majority-vote ground truth and Fleiss' kappa."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .labels import Label, parse_label

__all__ = [
    "ANNOTATION_LABELS",
    "AnnotationSet",
    "GroundTruth",
    "majority_label",
    "fleiss_kappa",
    "vote_matrix",
    "load_annotations",
    "ground_truth",
]

ANNOTATION_LABELS = (Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL, Label.NONE)


@dataclass(frozen=True)
class AnnotationSet:
    """``labels[doc_id][annotator_id] -> Label``."""

    labels: Mapping[str, Mapping[str, Label]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        frozen = {doc: MappingProxyType(dict(votes)) for doc, votes in self.labels.items()}
        object.__setattr__(self, "labels", MappingProxyType(frozen))

    def __len__(self) -> int:
        return len(self.labels)

    def votes(self, doc_id: str) -> list[Label]:
        return list(self.labels[doc_id].values())

    def annotators(self) -> list[str]:
        return sorted({a for votes in self.labels.values() for a in votes})


@dataclass(frozen=True)
class GroundTruth:
    labels: Mapping[str, Label] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, doc_id: str) -> Label:
        return self.labels[doc_id]

    def items(self):
        return self.labels.items()

    def restricted(self, classes: Iterable[Label]) -> "GroundTruth":
        classes = set(classes)
        return GroundTruth({d: lab for d, lab in self.labels.items() if lab in classes})

    def distribution(self) -> dict[str, int]:
        counts = Counter(self.labels.values())
        return {lab.value: counts.get(lab, 0) for lab in (Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL)}

    def to_json(self) -> dict:
        return {doc: lab.value for doc, lab in self.labels.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "GroundTruth":
        return cls({doc: parse_label(lab) for doc, lab in data.items()})


def majority_label(votes: Sequence[Label]) -> Label | None:
    """The label with strictly more votes than any other; ``None`` on a tie."""
    if not votes:
        raise ValueError("majority_label needs at least one vote")
    ranked = Counter(votes).most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]


def fleiss_kappa(matrix, n_raters: int | None = None) -> float:
    """Fleiss' kappa of an items x categories count matrix.

    Every row must sum to the same number of raters.  Returns exactly 1.0
    when observed agreement is perfect (this also covers the degenerate
    case where every vote falls in one category).
    """
    counts = np.asarray(matrix, dtype=float)
    if counts.ndim != 2:
        raise ValueError("vote matrix must be 2-D")
    n_items = counts.shape[0]
    if n_items < 2:
        raise ValueError("fleiss_kappa needs at least two items")
    if np.any(counts < 0):
        raise ValueError("vote counts must be nonnegative")
    row_sums = counts.sum(axis=1)
    n = float(row_sums[0]) if n_raters is None else float(n_raters)
    if not np.all(row_sums == n):
        raise ValueError("every item must be rated by the same number of raters")
    if n < 2:
        raise ValueError("fleiss_kappa needs at least two raters")
    per_item = (np.sum(counts * counts, axis=1) - n) / (n * (n - 1))
    p_bar = float(np.mean(per_item))
    if p_bar == 1.0:
        return 1.0
    p_cat = counts.sum(axis=0) / (n_items * n)
    p_e = float(np.sum(p_cat * p_cat))
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return min(1.0, max(-1.0, kappa))


def vote_matrix(annotations: AnnotationSet, categories: Sequence[Label] = ANNOTATION_LABELS) -> tuple[list[str], np.ndarray]:
    """Per-document vote counts over ``categories`` (rows in sorted doc-id order)."""
    col = {lab: j for j, lab in enumerate(categories)}
    docs = sorted(annotations.labels)
    out = np.zeros((len(docs), len(categories)), dtype=np.int64)
    for i, doc in enumerate(docs):
        for lab in annotations.labels[doc].values():
            out[i, col[lab]] += 1
    return docs, out


def load_annotations(path: str | Path, known_ids: Iterable[str] | None = None) -> AnnotationSet:
    """Read ``doc_id,annotator_id,label`` rows.

    Unknown labels, repeated (doc, annotator) pairs and -- when
    ``known_ids`` is given -- documents outside the corpus raise ValueError.
    """
    path = Path(path)
    known = set(known_ids) if known_ids is not None else None
    labels: dict[str, dict[str, Label]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return AnnotationSet()
        missing = {"doc_id", "annotator_id", "label"} - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: header lacks {sorted(missing)}")
        for row in reader:
            doc, annotator = row["doc_id"].strip(), row["annotator_id"].strip()
            label = parse_label(row["label"] or "")
            if label not in ANNOTATION_LABELS:
                raise ValueError(f"{path}:{reader.line_num}: label {row['label']!r} not allowed")
            if known is not None and doc not in known:
                raise ValueError(f"{path}:{reader.line_num}: unknown document id {doc!r}")
            votes = labels.setdefault(doc, {})
            if annotator in votes:
                raise ValueError(f"{path}:{reader.line_num}: duplicate label for ({doc!r}, {annotator!r})")
            votes[annotator] = label
    return AnnotationSet(labels)


def ground_truth(annotations: AnnotationSet) -> GroundTruth:
    """Strict-majority labels; ties and 'None' majorities are left out."""
    out = {}
    for doc in sorted(annotations.labels):
        lab = majority_label(annotations.votes(doc))
        if lab is not None and lab is not Label.NONE:
            out[doc] = lab
    return GroundTruth(out)


def write_ground_truth(truth: GroundTruth, path: str | Path, extra: Mapping | None = None) -> None:
    payload = {"labels": truth.to_json(), **(extra or {})}
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
