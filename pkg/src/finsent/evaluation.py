"""Scoring predictions against ground truth and comparing methods."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .annotations import GroundTruth
from .labels import Label, POLAR

__all__ = [
    "NEUTRAL_BAND",
    "ConfusionMatrix",
    "Metrics",
    "band_to_label",
    "load_scores",
    "scores_to_labels",
    "score",
    "agreement_rate",
    "compare_methods",
    "MethodComparison",
    "label_distribution",
]

NEUTRAL_BAND = 0.05


def band_to_label(score: float, band: float = NEUTRAL_BAND) -> Label:
    """Map a [-1, 1] polarity score to a label; ``[-band, band]`` is Neutral."""
    if not (-1.0 <= score <= 1.0):
        raise ValueError(f"score {score!r} outside [-1, 1]")
    if -band <= score <= band:
        return Label.NEUTRAL
    return Label.POSITIVE if score > 0 else Label.NEGATIVE


def load_scores(path: str | Path) -> dict[str, float]:
    """Read an external analyzer's ``doc_id,score`` file."""
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return out
        if not {"doc_id", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'doc_id,score'")
        for row in reader:
            doc = row["doc_id"].strip()
            if doc in out:
                raise ValueError(f"{path}:{reader.line_num}: duplicate doc_id {doc!r}")
            value = float(row["score"])
            if not math.isfinite(value):
                raise ValueError(f"{path}:{reader.line_num}: non-finite score")
            out[doc] = value
    return out


def scores_to_labels(scores: Mapping[str, float], band: float = NEUTRAL_BAND) -> dict[str, Label]:
    return {doc: band_to_label(s, band) for doc, s in scores.items()}


@dataclass
class ConfusionMatrix:
    """In-class counts keyed ``(actual, predicted)`` plus out-of-band tallies.

    Out-of-band predictions (Neutral, NotDetected, Other) are keyed the same
    way but kept apart; they always count as errors.
    """

    classes: tuple[Label, ...]
    counts: dict[tuple[Label, Label], int] = field(default_factory=dict)
    out_of_band: dict[tuple[Label, Label], int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + sum(self.out_of_band.values())

    @property
    def correct(self) -> int:
        return sum(self.counts.get((c, c), 0) for c in self.classes)

    def actual_total(self, cls: Label) -> int:
        return sum(n for (a, _), n in self.counts.items() if a is cls) + sum(
            n for (a, _), n in self.out_of_band.items() if a is cls
        )

    def predicted_total(self, cls: Label) -> int:
        return sum(n for (_, p), n in self.counts.items() if p is cls)

    def out_of_band_by_prediction(self) -> dict[str, int]:
        tally: Counter[str] = Counter()
        for (_, pred), n in self.out_of_band.items():
            key = "not_detected_or_other" if pred in (Label.NOT_DETECTED, Label.OTHER) else pred.value
            tally[key] += n
        return dict(sorted(tally.items()))

    def to_json(self) -> dict:
        cols = list(self.classes) + sorted({p for (_, p) in self.out_of_band}, key=lambda l: l.value)
        return {
            "columns": [c.value for c in cols],
            "rows": {
                a.value: [self.counts.get((a, p), 0) + self.out_of_band.get((a, p), 0) for p in cols]
                for a in self.classes
            },
        }


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: dict[str, float]
    precision: dict[str, float]
    f1: dict[str, float]

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "recall": self.recall, "precision": self.precision, "f1": self.f1}


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def score(
    predictions: Mapping[str, Label],
    truth: GroundTruth | Mapping[str, Label],
    classes: Sequence[Label] = POLAR,
    ids: Iterable[str] | None = None,
) -> tuple[ConfusionMatrix, Metrics]:
    """Confusion matrix and metrics over truth documents labelled in ``classes``.

    ``ids`` optionally restricts scoring to a subset (e.g. a held-out split).
    """
    classes = tuple(classes)
    truth_map = truth.labels if isinstance(truth, GroundTruth) else truth
    selected = [d for d, lab in truth_map.items() if lab in classes]
    if ids is not None:
        wanted = set(ids)
        selected = [d for d in selected if d in wanted]
    missing = [d for d in selected if d not in predictions]
    if missing:
        raise ValueError(f"no prediction for {len(missing)} truth document(s), e.g. {missing[0]!r}")
    cm = ConfusionMatrix(classes)
    for doc in selected:
        actual, pred = truth_map[doc], predictions[doc]
        target = cm.counts if pred in classes else cm.out_of_band
        target[(actual, pred)] = target.get((actual, pred), 0) + 1
    total = cm.total
    recall, precision, f1 = {}, {}, {}
    for c in classes:
        tp = cm.counts.get((c, c), 0)
        n_actual = cm.actual_total(c)
        n_pred = cm.predicted_total(c)
        r = tp / n_actual if n_actual else 0.0
        p = tp / n_pred if n_pred else 0.0
        recall[c.value], precision[c.value], f1[c.value] = r, p, _f1(p, r)
    metrics = Metrics(cm.correct / total if total else 0.0, recall, precision, f1)
    return cm, metrics


def agreement_rate(a: Mapping[str, Label], b: Mapping[str, Label]) -> float:
    if set(a) != set(b):
        raise ValueError("agreement_rate needs identical id sets")
    if not a:
        raise ValueError("agreement_rate of empty labelings is undefined")
    return sum(a[k] == b[k] for k in a) / len(a)


def label_distribution(predictions: Mapping[str, Label]) -> dict[str, int]:
    counts = Counter(predictions.values())
    return {lab.value: counts[lab] for lab in sorted(counts, key=lambda l: list(Label).index(l))}


@dataclass
class MethodComparison:
    classes: tuple[Label, ...]
    rows: dict[str, tuple[ConfusionMatrix, Metrics]]

    def to_json(self) -> dict:
        return {
            name: {"n": cm.total, **m.to_json(), "confusion": cm.to_json(), "out_of_band": cm.out_of_band_by_prediction()}
            for name, (cm, m) in self.rows.items()
        }

    def to_text(self) -> str:
        cls = [c.value for c in self.classes]
        header = ["method", "n", "accuracy"] + [f"recall_{c}" for c in cls] + [f"f1_{c}" for c in cls]
        table = [header]
        for name, (cm, m) in self.rows.items():
            table.append(
                [name, str(cm.total), f"{m.accuracy:.3f}"]
                + [f"{m.recall[c]:.3f}" for c in cls]
                + [f"{m.f1[c]:.3f}" for c in cls]
            )
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = []
        for r in table:
            cells = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def compare_methods(
    truth: GroundTruth | Mapping[str, Label],
    methods: Mapping[str, Mapping[str, Label]],
    classes: Sequence[Label] = POLAR,
    ids: Iterable[str] | None = None,
) -> MethodComparison:
    if not methods:
        raise ValueError("compare_methods needs at least one prediction set")
    ids = list(ids) if ids is not None else None
    return MethodComparison(
        tuple(classes), {name: score(preds, truth, classes, ids) for name, preds in methods.items()}
    )


def write_json(payload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
