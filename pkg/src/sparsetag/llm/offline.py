"""Deterministic rule-based completions for network-free runs.

These are pure functions of their inputs: first-sentences summaries,
frequency-ranked keywords, token-overlap soft labels, and Jaccard edge
scores. They stand in for the remote model so the whole pipeline can be
exercised offline and reproducibly.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Sequence

from ..text import tokenize

__all__ = [
    "offline_summarize",
    "offline_keywords",
    "offline_soft_label",
    "offline_edge_score",
]

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def offline_summarize(text: str) -> str:
    """First min(3, all) sentences of the text."""
    stripped = text.strip()
    if not stripped:
        return ""
    sentences = [s for s in _SENTENCE_SPLIT.split(stripped) if s]
    return " ".join(sentences[:3])


def offline_keywords(text: str) -> str:
    """Top-5 tokens by term frequency (ties lexicographic), comma-joined."""
    counts = Counter(tokenize(text))
    ranked = sorted(counts, key=lambda tok: (-counts[tok], tok))
    return ", ".join(ranked[:5])


def offline_soft_label(text: str, class_names: Sequence[str]) -> str:
    """Class name with the largest token overlap with the text.

    Ties (including the all-zero overlap of empty text) resolve to the
    earliest class in ``class_names``.
    """
    if not class_names:
        return ""
    text_tokens = set(tokenize(text))
    best_name, best_overlap = class_names[0], -1
    for name in class_names:
        overlap = len(set(tokenize(name)) & text_tokens)
        if overlap > best_overlap:
            best_name, best_overlap = name, overlap
    return best_name


def offline_edge_score(text_a: str, text_b: str) -> str:
    """Jaccard similarity of the two token sets, rendered as a decimal."""
    set_a, set_b = set(tokenize(text_a)), set(tokenize(text_b))
    union = set_a | set_b
    score = len(set_a & set_b) / len(union) if union else 0.0
    return str(score)
