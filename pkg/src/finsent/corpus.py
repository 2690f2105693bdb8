"""Document ingestion and the text-normalization chain."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .lemmatize import best_lemma, lemma_candidates

__all__ = [
    "Document",
    "DocumentSet",
    "DocumentKind",
    "load_documents",
    "write_documents",
    "tokenize",
    "expand_contractions",
    "remove_stopwords",
    "lemma_candidates",
    "normalize_headline",
    "stopwords",
    "contractions",
]

log = logging.getLogger(__name__)

# letters and digits (any script), apostrophes (straight or curly), hyphens
_TOKEN_RE = re.compile(r"(?:[^\W_]|['’\-])+")
CSV_FIELDS = ("id", "headline", "body", "date", "source", "kind")


class DocumentKind(str, enum.Enum):
    NEWS = "news"
    SENS = "sens"


@dataclass(frozen=True)
class Document:
    id: str
    headline: str
    date: dt.date
    body: str = ""
    source: str = ""
    kind: DocumentKind = DocumentKind.NEWS

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be nonempty")
        if not self.headline.strip():
            raise ValueError(f"document {self.id!r} has an empty headline")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "headline": self.headline,
            "body": self.body,
            "date": self.date.isoformat(),
            "source": self.source,
            "kind": self.kind.value,
        }


@dataclass(frozen=True)
class DocumentSet:
    """Ordered, id-unique collection of documents.

    ``skipped`` counts malformed records dropped while loading.
    """

    documents: tuple[Document, ...] = ()
    skipped: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValueError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, index: int) -> Document:
        return self.documents[index]

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}

    def subset(self, keep: Iterable[int]) -> "DocumentSet":
        return DocumentSet(tuple(self.documents[i] for i in keep))


def _record_to_document(rec: dict) -> Document:
    def text(key: str) -> str:
        value = rec.get(key)
        if value is None:
            return ""
        if not isinstance(value, str):
            raise ValueError(f"field {key!r} must be a string")
        return value

    doc_id = text("id").strip()
    headline = text("headline").strip()
    if not doc_id:
        raise ValueError("missing id")
    if not headline:
        raise ValueError("missing headline")
    date = dt.date.fromisoformat(text("date").strip())
    kind = DocumentKind(text("kind").strip().lower() or "news")
    return Document(
        id=doc_id,
        headline=headline,
        body=text("body"),
        date=date,
        source=text("source"),
        kind=kind,
    )


def _iter_records(path: Path, fmt: str) -> Iterator[tuple[int, dict | None]]:
    with open(path, newline="", encoding="utf-8") as fh:
        if fmt == "jsonl":
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    yield lineno, None
                    continue
                yield lineno, rec if isinstance(rec, dict) else None
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return
            missing = set(CSV_FIELDS) - set(reader.fieldnames)
            if missing:
                raise ValueError(f"{path}: CSV header lacks {sorted(missing)}")
            for rec in reader:
                yield reader.line_num, rec


def load_documents(path: str | Path, format: str = "jsonl") -> DocumentSet:
    """Load a JSONL or CSV document file.

    Records with a missing id/headline, a bad kind or a date that is not
    ISO-8601 are skipped with a warning; the skip count is available as
    ``DocumentSet.skipped``.  A duplicate id is a hard error.
    """
    path = Path(path)
    fmt = format.lower()
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown document format {format!r}")
    docs: list[Document] = []
    seen: set[str] = set()
    skipped = 0
    for lineno, rec in _iter_records(path, fmt):
        if rec is None:
            log.warning("%s:%d: unparseable record skipped", path, lineno)
            skipped += 1
            continue
        try:
            doc = _record_to_document(rec)
        except ValueError as exc:
            log.warning("%s:%d: record skipped (%s)", path, lineno, exc)
            skipped += 1
            continue
        if doc.id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    return DocumentSet(tuple(docs), skipped=skipped)


def write_documents(docs: DocumentSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    text = resources.files("finsent.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=None)
def contractions() -> dict[str, tuple[str, ...]]:
    text = resources.files("finsent.data").joinpath("contractions.json").read_text("utf-8")
    return {k: tuple(v.split()) for k, v in json.loads(text).items()}


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of letters, digits, apostrophes and hyphens.

    Lowercasing happens before matching so that case mappings which change
    the character class (e.g. dotted capital I) cannot leak separators into
    a token.  Curly apostrophes are folded to ``'``.
    """
    return [m.group().replace("’", "'") for m in _TOKEN_RE.finditer(text.lower())]


def expand_contractions(tokens: Sequence[str]) -> list[str]:
    table = contractions()
    out: list[str] = []
    for tok in tokens:
        out.extend(table.get(tok, (tok,)))
    return out


def remove_stopwords(tokens: Sequence[str]) -> list[str]:
    stop = stopwords()
    return [t for t in tokens if t not in stop]


def _has_alnum(token: str) -> bool:
    return any(ch.isalnum() for ch in token)


def normalize_headline(text: str) -> list[str]:
    """tokenize -> expand contractions -> drop stopwords -> lemmatize.

    Tokens made only of apostrophes/hyphens are dropped as punctuation.
    When a token's lemma would itself be a stopword or a contraction the
    surface form is kept instead, which keeps the chain idempotent.
    """
    stop = stopwords()
    table = contractions()
    out = []
    for tok in remove_stopwords(expand_contractions(tokenize(text))):
        if not _has_alnum(tok):
            continue
        lemma = best_lemma(tok)
        if lemma in stop or lemma in table or not _has_alnum(lemma):
            lemma = tok
        out.append(lemma)
    return out
