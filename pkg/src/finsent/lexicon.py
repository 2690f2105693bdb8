"""Categorized sentiment dictionary and the hinge-structure headline predictor.

Dictionary staging is data-driven:

* experiment 1 -- the base word list as loaded;
* experiment 2 -- base + synonyms for every category + the bigram list;
* experiment 3 -- base + synonyms except for modal categories + bigrams,
  then a removal list applied.
"""

from __future__ import annotations

import csv
import enum
import json
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .corpus import tokenize
from .labels import Label
from .lemmatize import lemma_candidates

__all__ = [
    "SentimentCategory",
    "Provenance",
    "LexiconEntry",
    "Lexicon",
    "LexiconWarning",
    "HeadlineSplit",
    "LexiconPrediction",
    "HINGE_WORDS",
    "MODAL_CATEGORIES",
    "load_lexicon",
    "save_lexicon",
    "load_synonyms",
    "expand_with_synonyms",
    "remove_terms",
    "merge",
    "build_experiment",
    "split_on_hinge",
    "predict_lexicon",
]

HINGE_WORDS = ("as", "but", "amid", "after", "ahead", "while", "despite")
COMMA = ","

_TOKEN_CHARS = r"[^\W_]|['’\-]"
_HINGE_RE = re.compile(
    rf"(?<!{_TOKEN_CHARS})(?:{'|'.join(HINGE_WORDS)})(?!{_TOKEN_CHARS})", re.IGNORECASE
)


class LexiconWarning(UserWarning):
    pass


class SentimentCategory(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCERTAINTY = "uncertainty"
    WEAK_MODAL = "weak_modal"
    STRONG_MODAL = "strong_modal"
    LITIGIOUS = "litigious"
    CONSTRAINING = "constraining"


MODAL_CATEGORIES = frozenset({SentimentCategory.WEAK_MODAL, SentimentCategory.STRONG_MODAL})


class Provenance(str, enum.Enum):
    ORIGINAL = "original"
    SYNONYM = "synonym"
    MANUAL = "manual"


def _normalize_term(term: str) -> str:
    return " ".join(term.lower().split())


@dataclass(frozen=True)
class LexiconEntry:
    term: str
    category: SentimentCategory
    provenance: Provenance = Provenance.ORIGINAL

    def __post_init__(self) -> None:
        if not self.term or self.term != _normalize_term(self.term):
            raise ValueError(f"lexicon term must be lowercase and trimmed: {self.term!r}")
        if self.term.count(" ") > 1:
            raise ValueError(f"lexicon terms are unigrams or bigrams: {self.term!r}")

    @property
    def is_bigram(self) -> bool:
        return " " in self.term


@dataclass(frozen=True)
class Lexicon:
    """Immutable term -> entry maps; every operation returns a new Lexicon."""

    unigrams: Mapping[str, LexiconEntry] = field(default_factory=dict)
    bigrams: Mapping[str, LexiconEntry] = field(default_factory=dict)
    version: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "unigrams", MappingProxyType(dict(self.unigrams)))
        object.__setattr__(self, "bigrams", MappingProxyType(dict(self.bigrams)))

    @classmethod
    def from_entries(cls, entries: Iterable[LexiconEntry], version: str = "") -> "Lexicon":
        uni: dict[str, LexiconEntry] = {}
        bi: dict[str, LexiconEntry] = {}
        for e in entries:
            target = bi if e.is_bigram else uni
            if e.term in target:
                warnings.warn(f"duplicate term {e.term!r}: later row wins", LexiconWarning, stacklevel=2)
            target[e.term] = e
        return cls(uni, bi, version)

    def __len__(self) -> int:
        return len(self.unigrams) + len(self.bigrams)

    def __contains__(self, term: object) -> bool:
        return term in self.unigrams or term in self.bigrams

    def get(self, term: str) -> LexiconEntry | None:
        return self.bigrams.get(term) if " " in term else self.unigrams.get(term)

    def entries(self) -> list[LexiconEntry]:
        return list(self.unigrams.values()) + list(self.bigrams.values())

    def counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in SentimentCategory}
        for e in self.entries():
            out[e.category.value] += 1
        return out


def load_lexicon(path: str | Path, version: str | None = None) -> Lexicon:
    """Read a ``term,category[,provenance]`` CSV.

    A repeated term replaces the earlier row and emits a ``LexiconWarning``.
    Unknown categories and malformed rows raise ``ValueError``.
    """
    path = Path(path)
    entries: list[LexiconEntry] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return Lexicon(version=version or path.stem)
        header = [h.strip().lower() for h in header]
        if header[:2] != ["term", "category"]:
            raise ValueError(f"{path}: expected header 'term,category[,provenance]'")
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 2 or len(row) > 3:
                raise ValueError(f"{path}:{reader.line_num}: malformed row {row!r}")
            term = _normalize_term(row[0])
            try:
                category = SentimentCategory(row[1].strip().lower())
            except ValueError:
                raise ValueError(f"{path}:{reader.line_num}: unknown category {row[1]!r}") from None
            prov_text = row[2].strip().lower() if len(row) == 3 and row[2].strip() else "original"
            try:
                provenance = Provenance(prov_text)
            except ValueError:
                raise ValueError(f"{path}:{reader.line_num}: unknown provenance {row[2]!r}") from None
            try:
                entries.append(LexiconEntry(term, category, provenance))
            except ValueError as exc:
                raise ValueError(f"{path}:{reader.line_num}: {exc}") from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LexiconWarning)
        lex = Lexicon.from_entries(entries, version=version or path.stem)
    for w in caught:
        warnings.warn(f"{path}: {w.message}", LexiconWarning, stacklevel=2)
    return lex


def save_lexicon(lex: Lexicon, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["term", "category", "provenance"])
        for e in sorted(lex.entries(), key=lambda e: e.term):
            writer.writerow([e.term, e.category.value, e.provenance.value])


def load_synonyms(path: str | Path) -> dict[str, list[str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: synonym map must be a JSON object")
    out: dict[str, list[str]] = {}
    for key, values in data.items():
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise ValueError(f"{path}: synonyms of {key!r} must be a list of strings")
        out[_normalize_term(key)] = [_normalize_term(v) for v in values]
    return out


def expand_with_synonyms(
    lex: Lexicon,
    synmap: Mapping[str, Sequence[str]],
    exclude: Iterable[SentimentCategory] = (),
) -> Lexicon:
    """Add absent synonyms of entries with the entry's category.

    Entries are visited in lexicon order and synonyms in list order, so when
    two entries propose the same new term the first one wins.  Existing
    entries are never changed.
    """
    exclude = frozenset(exclude)
    uni = dict(lex.unigrams)
    bi = dict(lex.bigrams)
    for entry in lex.entries():
        if entry.category in exclude:
            continue
        for syn in synmap.get(entry.term, ()):
            syn = _normalize_term(syn)
            if not syn or syn.count(" ") > 1:
                continue
            target = bi if " " in syn else uni
            if syn not in target:
                target[syn] = LexiconEntry(syn, entry.category, Provenance.SYNONYM)
    return Lexicon(uni, bi, lex.version)


def remove_terms(lex: Lexicon, terms: Iterable[str]) -> Lexicon:
    uni = dict(lex.unigrams)
    bi = dict(lex.bigrams)
    for term in dict.fromkeys(_normalize_term(t) for t in terms):
        target = bi if " " in term else uni
        if target.pop(term, None) is None:
            warnings.warn(f"remove_terms: {term!r} not in lexicon", LexiconWarning, stacklevel=2)
    return Lexicon(uni, bi, lex.version)


def merge(lex: Lexicon, extra: Lexicon) -> Lexicon:
    """Add ``extra``'s entries whose terms ``lex`` does not already hold."""
    uni = dict(lex.unigrams)
    bi = dict(lex.bigrams)
    for e in extra.entries():
        (bi if e.is_bigram else uni).setdefault(e.term, e)
    return Lexicon(uni, bi, lex.version)


def build_experiment(
    level: int,
    base: Lexicon,
    synmap: Mapping[str, Sequence[str]] | None = None,
    bigrams: Lexicon | None = None,
    removals: Iterable[str] = (),
) -> Lexicon:
    if level == 1:
        return replace(base, version=f"{base.version}+exp1")
    if level not in (2, 3):
        raise ValueError(f"experiment level must be 1, 2 or 3, got {level}")
    exclude = MODAL_CATEGORIES if level == 3 else frozenset()
    lex = expand_with_synonyms(base, synmap or {}, exclude)
    if bigrams is not None:
        lex = merge(lex, bigrams)
    if level == 3:
        lex = remove_terms(lex, removals)
    return replace(lex, version=f"{base.version}+exp{level}")


@dataclass(frozen=True)
class HeadlineSplit:
    first_segment: str
    remainder: str = ""
    hinge: str | None = None

    def __post_init__(self) -> None:
        if not self.first_segment:
            raise ValueError("first_segment must be nonempty")


def split_on_hinge(headline: str) -> HeadlineSplit:
    """Split at the first hinge word, else the first comma, else not at all.

    A hinge (or comma) with nothing before it cannot start the first
    segment, so the search moves on to the next occurrence.
    """
    if not headline.strip():
        raise ValueError("headline must be nonempty")
    for pattern in (_HINGE_RE, re.compile(COMMA)):
        for m in pattern.finditer(headline):
            first = headline[: m.start()].strip()
            if first:
                return HeadlineSplit(first, headline[m.end():].strip(), m.group())
    return HeadlineSplit(headline.strip())


@dataclass(frozen=True)
class LexiconPrediction:
    """``category`` is set only for ``Label.OTHER`` predictions."""

    label: Label
    trigger: str | None
    split: HeadlineSplit
    category: SentimentCategory | None = None

    def __post_init__(self) -> None:
        if (self.trigger is None) != (self.label is Label.NOT_DETECTED):
            raise ValueError("trigger must be present iff a term was detected")


_POLAR = {SentimentCategory.POSITIVE: Label.POSITIVE, SentimentCategory.NEGATIVE: Label.NEGATIVE}


def _unigram_match(token: str, lex: Lexicon) -> LexiconEntry | None:
    entry = lex.unigrams.get(token)
    if entry is not None:
        return entry
    for cand in sorted(lemma_candidates(token)):
        entry = lex.unigrams.get(cand)
        if entry is not None:
            return entry
    return None


def predict_lexicon(headline: str, lex: Lexicon) -> LexiconPrediction:
    """First Positive/Negative dictionary hit in the headline's first segment.

    Tokens are scanned left to right.  At each position a bigram on the raw
    lowercase token pair wins over a unigram; unigrams are looked up by
    surface form, then by lemma candidates.  Other categories only decide
    the label if no polar term occurs.
    """
    split = split_on_hinge(headline)
    tokens = tokenize(split.first_segment)
    other: LexiconEntry | None = None
    i = 0
    while i < len(tokens):
        entry = None
        width = 1
        if i + 1 < len(tokens):
            entry = lex.bigrams.get(f"{tokens[i]} {tokens[i + 1]}")
            width = 2 if entry is not None else 1
        if entry is None:
            entry = _unigram_match(tokens[i], lex)
        if entry is not None:
            if entry.category in _POLAR:
                return LexiconPrediction(_POLAR[entry.category], entry.term, split)
            if other is None:
                other = entry
        i += width
    if other is not None:
        return LexiconPrediction(Label.OTHER, other.term, split, other.category)
    return LexiconPrediction(Label.NOT_DETECTED, None, split)
