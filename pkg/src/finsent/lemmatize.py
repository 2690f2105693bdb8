"""Rule-based English lemmatizer.

Each paradigm (noun, verb, adjective) is an ordered list of suffix rules
backed by an exception table.  No lexical database is consulted, so the
rules carry their own guards (minimum stem length, protected endings) and
a small restore-final-``e`` heuristic for ``-ed``/``-ing`` stems.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

VOWELS = frozenset("aeiou")
_UNDOUBLE = frozenset("bdgmnprt")
# endings that look plural but are not (bonus, crisis, class, ...)
_S_PROTECTED = ("ss", "us", "is", "'s")


@lru_cache(maxsize=None)
def _tables() -> dict:
    text = resources.files("finsent.data").joinpath("lemma_exceptions.json").read_text("utf-8")
    raw = json.loads(text)
    return {
        "noun": dict(raw["noun"]),
        "verb": dict(raw["verb"]),
        "adj": dict(raw["adj"]),
        "invariant": frozenset(raw["invariant"]),
        "adjective_bases": frozenset(raw["adjective_bases"]),
    }


def _vowel_groups(stem: str) -> int:
    groups, prev = 0, False
    for ch in stem:
        cur = ch in VOWELS
        if cur and not prev:
            groups += 1
        prev = cur
    return groups


def _is_consonant(ch: str) -> bool:
    return ch.isalpha() and ch not in VOWELS


def _restore_e(stem: str) -> bool:
    """Guess whether an ``-ed``/``-ing`` stem lost a silent final ``e``."""
    if len(stem) < 2 or not stem.isalpha():
        return False
    last, prev = stem[-1], stem[-2]
    if last == "e":
        return False
    if last in "vzu":
        return True
    if last == "c":
        return prev in VOWELS or prev in "nr"
    if last == "l":
        return _is_consonant(prev) and prev not in "lrw"
    if last == "g":
        if prev in "rdl":
            return True
        if prev == "n":
            return len(stem) >= 5 and stem[-3] in "aeiu"
        return prev == "a" and len(stem) >= 5
    if last == "s":
        if prev == "s":
            return False
        if prev == "u":
            return len(stem) >= 3 and stem[-3] == "a"
        return True
    if last == "d" and prev in "iuoa" and len(stem) >= 4 and _is_consonant(stem[-3]):
        return True
    if last == "t" and prev in "au" and len(stem) >= 4 and _is_consonant(stem[-3]):
        return True
    if last == "r" and prev in "aiu" and len(stem) >= 4:
        return _is_consonant(stem[-3]) or stem[-3:] == "uir"
    if last == "n" and prev == "i" and len(stem) >= 4 and _is_consonant(stem[-3]):
        return True
    # monosyllabic consonant-vowel-consonant: mak(e), slid(e), vot(e)
    if (
        _is_consonant(last)
        and last not in "wxy"
        and prev in VOWELS
        and _vowel_groups(stem) == 1
        and not stem[0] in VOWELS
        and (len(stem) < 3 or stem[-3] not in VOWELS)
    ):
        return True
    return False


def _fix_stem(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] in _UNDOUBLE:
        return stem[:-1]
    if _restore_e(stem):
        return stem + "e"
    return stem


def noun_lemma(word: str) -> str | None:
    """Singular form, or ``None`` when no noun rule fires."""
    tables = _tables()
    if word in tables["noun"]:
        return tables["noun"][word]
    if word in tables["invariant"]:
        return None
    if word.endswith("'s") and len(word) > 2:
        return word[:-2]
    if word.endswith("s'") and len(word) > 3:
        return word[:-1]
    if len(word) >= 5 and word.endswith("ies") and word[-4] not in VOWELS:
        return word[:-3] + "y"
    for suffix in ("sses", "xes", "zzes", "ches", "shes"):
        if word.endswith(suffix) and len(word) > len(suffix):
            return word[:-2]
    if len(word) >= 4 and word.endswith("s") and not word.endswith(_S_PROTECTED):
        return word[:-1]
    return None


def verb_lemma(word: str) -> str | None:
    """Base form, or ``None`` when no verb rule fires."""
    tables = _tables()
    if word in tables["verb"]:
        return tables["verb"][word]
    if word in tables["invariant"]:
        return None
    if len(word) >= 5 and word.endswith("ies") and word[-4] not in VOWELS:
        return word[:-3] + "y"
    for suffix in ("sses", "xes", "zzes", "ches", "shes"):
        if word.endswith(suffix) and len(word) > len(suffix):
            return word[:-2]
    if len(word) >= 4 and word.endswith("s") and not word.endswith(_S_PROTECTED):
        return word[:-1]
    if len(word) >= 5 and word.endswith("ied") and word[-4] not in VOWELS:
        return word[:-3] + "y"
    if len(word) >= 5 and word.endswith("eed"):
        return word[:-1]
    for suffix in ("ed", "ing"):
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if len(stem) >= 2 and any(ch in VOWELS or ch == "y" for ch in stem):
                if stem.endswith("e"):
                    return stem
                return _fix_stem(stem)
    return None


def adjective_lemma(word: str) -> str | None:
    """Positive degree for comparatives/superlatives of known adjectives."""
    tables = _tables()
    if word in tables["adj"]:
        return tables["adj"][word]
    if word in tables["invariant"]:
        return None
    bases = tables["adjective_bases"]
    for suffix in ("est", "er"):
        if not word.endswith(suffix) or len(word) <= len(suffix) + 1:
            continue
        stem = word[: -len(suffix)]
        options = [stem, stem + "e"]
        if stem.endswith("i"):
            options.insert(0, stem[:-1] + "y")
        if len(stem) >= 3 and stem[-1] == stem[-2]:
            options.append(stem[:-1])
        for option in options:
            if option in bases:
                return option
    return None


_PARADIGMS = (noun_lemma, verb_lemma, adjective_lemma)


def lemma_candidates(token: str) -> set[str]:
    """The surface form plus every paradigm's lemma."""
    out = {token}
    for paradigm in _PARADIGMS:
        lemma = paradigm(token)
        if lemma:
            out.add(lemma)
    return out


def _step(word: str) -> str:
    for paradigm in _PARADIGMS:
        lemma = paradigm(word)
        if lemma and lemma != word:
            return lemma
    return word


def best_lemma(token: str) -> str:
    """Single lemma: noun rules first, then verb, then adjective.

    The first-firing rule is re-applied until nothing changes so that
    ``best_lemma(best_lemma(w)) == best_lemma(w)``.  Every suffix rule
    shortens the word and exception targets are fixed points, so the loop
    terminates.
    """
    word = token
    for _ in range(len(token) + 2):
        nxt = _step(word)
        if nxt == word:
            return word
        word = nxt
    return word
