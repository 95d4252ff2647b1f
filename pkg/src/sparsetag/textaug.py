"""Text propagation over edges, LLM augmentation, and aggregation.

Propagation concatenates each node's own text with its neighbors' texts
so nodes whose text was removed recover a usable signal from adjacent
nodes. Augmentation asks the completion gateway for a summary, keyword
list, and soft label per node; aggregation assembles the final per-node
text fed to the embedder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError, TransportError
from .graph import TextAttributedGraph
from .llm.gateway import CompletionGateway
from .llm.prompts import PromptKind, render_prompt

__all__ = [
    "AugmentedNodeText",
    "AGGREGATION_MODES",
    "NEIGHBOR_SEPARATOR",
    "propagate_texts",
    "augment",
    "parse_soft_label",
    "aggregate",
    "save_augmented",
    "load_augmented",
]

NEIGHBOR_SEPARATOR = "\n[NBR] "
AGGREGATION_MODES = ("OT", "OT+Su", "OT+KW", "OT+SL", "OT+SKWSL")

DEFAULT_CHAR_BUDGET = 4000


@dataclass(frozen=True)
class AugmentedNodeText:
    """Per-node original/propagated/summary/keywords/soft-label texts."""

    original: str | None
    propagated: str
    summary: str = ""
    keywords: str = ""
    soft_label: int | None = None  # None = unknown
    soft_label_raw: str = ""
    soft_label_name: str = ""


def propagate_texts(
    g: TextAttributedGraph, char_budget: int = DEFAULT_CHAR_BUDGET
) -> list[str]:
    """Own text followed by neighbor texts (ascending node id).

    Each neighbor block is ``NEIGHBOR_SEPARATOR + text``; blocks are
    truncated so the total stays within ``char_budget``. The own text is
    cut only when it alone exceeds the budget.
    """
    if char_budget < 0:
        raise ConfigError("char_budget must be non-negative")
    out: list[str] = []
    for i in range(g.num_nodes):
        own = g.texts[i] or ""
        parts = [own[:char_budget]]
        remaining = char_budget - len(parts[0])
        for j in g.neighbors(i):
            if remaining <= 0:
                break
            t_j = g.texts[j]
            if t_j is None:
                continue
            block = (NEIGHBOR_SEPARATOR + t_j)[:remaining]
            parts.append(block)
            remaining -= len(block)
        out.append("".join(parts))
    return out


def parse_soft_label(raw: str, class_names: Sequence[str]) -> int | None:
    """Map a raw completion to a class id.

    Case-insensitive exact match on the trimmed text wins; otherwise a
    class name occurring as a substring wins if it is the only one;
    otherwise unknown (``None``).
    """
    trimmed = raw.strip().lower()
    lowered = [name.lower() for name in class_names]
    for idx, name in enumerate(lowered):
        if trimmed == name:
            return idx
    haystack = raw.lower()
    hits = [idx for idx, name in enumerate(lowered) if name and name in haystack]
    if len(hits) == 1:
        return hits[0]
    return None


def augment(
    g: TextAttributedGraph,
    propagated: Sequence[str],
    gateway: CompletionGateway,
    dataset_desc: str,
) -> list[AugmentedNodeText]:
    """One summary, keywords, and soft-label completion per node.

    Nodes with an empty propagated text skip the gateway entirely and
    get empty augmentations with an unknown soft label. Transport errors
    propagate with the node id attached.
    """
    class_names = g.class_names
    prompts = {}
    for i, text in enumerate(propagated):
        if not text:
            continue
        for kind in (PromptKind.SUMMARY, PromptKind.KEYWORDS, PromptKind.SOFT_LABEL):
            prompts[(i, kind)] = render_prompt(kind, dataset_desc, (text,), class_names)
    try:
        completions = gateway.complete_many(prompts)
    except TransportError:
        # batch path lost the node attribution; redo serially to find it
        completions = {}
        for key, prompt in prompts.items():
            try:
                completions[key] = gateway.complete(prompt)
            except TransportError as exc:
                raise TransportError(
                    f"augmentation failed for node {key[0]}: {exc}",
                    request_hash=exc.request_hash,
                ) from exc

    out: list[AugmentedNodeText] = []
    for i, text in enumerate(propagated):
        if not text:
            out.append(AugmentedNodeText(original=g.texts[i], propagated=text))
            continue
        raw_label = completions[(i, PromptKind.SOFT_LABEL)]
        label_id = parse_soft_label(raw_label, class_names)
        out.append(
            AugmentedNodeText(
                original=g.texts[i],
                propagated=text,
                summary=completions[(i, PromptKind.SUMMARY)],
                keywords=completions[(i, PromptKind.KEYWORDS)],
                soft_label=label_id,
                soft_label_raw=raw_label,
                soft_label_name=class_names[label_id] if label_id is not None else "",
            )
        )
    return out


def aggregate(a: AugmentedNodeText, mode: str = "OT+SKWSL") -> str:
    """Assemble the final node text for ``mode``.

    Order is fixed: propagated text, then summary, keywords, and
    soft-label sections, each with its marker, including only the parts
    the mode names.
    """
    if mode not in AGGREGATION_MODES:
        raise ConfigError(f"unknown aggregation mode {mode!r}; expected one of {AGGREGATION_MODES}")
    parts = [a.propagated]
    if mode in ("OT+Su", "OT+SKWSL"):
        parts.append("\n[SUMMARY] " + a.summary)
    if mode in ("OT+KW", "OT+SKWSL"):
        parts.append("\n[KEYWORDS] " + a.keywords)
    if mode in ("OT+SL", "OT+SKWSL"):
        parts.append("\n[LABEL] " + a.soft_label_name)
    return "".join(parts)


def save_augmented(items: Sequence[AugmentedNodeText], path: str | Path) -> None:
    """Persist the expensive LLM outputs as JSONL for reuse across runs."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for i, a in enumerate(items):
            rec = {
                "id": i,
                "propagated": a.propagated,
                "summary": a.summary,
                "keywords": a.keywords,
                "soft_label": a.soft_label_raw,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_augmented(
    path: str | Path,
    g: TextAttributedGraph,
) -> list[AugmentedNodeText]:
    """Reload persisted augmentations, reparsing soft labels."""
    path = Path(path)
    records: dict[int, Mapping] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                records[rec["id"]] = rec
    out: list[AugmentedNodeText] = []
    for i in range(g.num_nodes):
        rec = records[i]
        raw_label = rec["soft_label"]
        label_id = parse_soft_label(raw_label, g.class_names) if raw_label else None
        out.append(
            AugmentedNodeText(
                original=g.texts[i],
                propagated=rec["propagated"],
                summary=rec["summary"],
                keywords=rec["keywords"],
                soft_label=label_id,
                soft_label_raw=raw_label,
                soft_label_name=g.class_names[label_id] if label_id is not None else "",
            )
        )
    return out
