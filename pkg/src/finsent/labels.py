"""Sentiment labels shared by every stage."""

from __future__ import annotations

import enum

__all__ = ["Label", "POLAR", "parse_label"]


class Label(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    # annotators may mark a headline as carrying no sentiment at all
    NONE = "none"
    # lexicon outcomes
    NOT_DETECTED = "not_detected"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


POLAR = (Label.POSITIVE, Label.NEGATIVE)


def parse_label(text: str) -> Label:
    key = text.strip().lower().replace(" ", "_").replace("-", "_")
    if key == "notdetected":
        key = "not_detected"
    try:
        return Label(key)
    except ValueError:
        raise ValueError(f"unknown label {text!r}") from None
