"""Prompt rendering for the four completion tasks.

Every prompt is "dataset description + question". The question templates
expose a single generic text slot (citation-style title/abstract inputs
are concatenated by the caller before rendering).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ..errors import ConfigError

__all__ = ["PromptKind", "RenderedPrompt", "render_prompt", "default_dataset_description"]


class PromptKind(Enum):
    SUMMARY = "summary"
    KEYWORDS = "keywords"
    SOFT_LABEL = "soft_label"
    EDGE_JUDGE = "edge_judge"


_SUMMARY_TEMPLATE = (
    "Please summarize the title and abstract to improve their suitability for the "
    "classification task. Output only the summary text, without including any "
    "irrelevant content. The title and abstract of the paper are as follows:{text}"
)

_KEYWORDS_TEMPLATE = (
    "Please help me identify the five keywords from its title and abstract that are "
    "most relevant for classification, and directly output the keywords. The title "
    "and abstract of the paper are as follows:{text}"
)

_SOFT_LABEL_TEMPLATE = (
    "Based on its title and abstract, please predict the most appropriate label for "
    "this paper and provide only the label as your response. The title and abstract "
    "of the paper are as follows:{text}"
)

_EDGE_JUDGE_TEMPLATE = (
    "You are provided with the text information of two nodes and their predicted "
    "category pseudo-label. Use this information to evaluate whether an edge should "
    "exist between the two nodes, and return a probability value between 0 and 1 "
    "representing the likelihood of the edge's existence. Only output the "
    "probability value, without any additional or irrelevant content. "
    "As for Node 1: {text_a}. Your prediction label is {label_a}; "
    "As for Node 2: {text_b}. Your prediction label is {label_b}."
)


@dataclass(frozen=True)
class RenderedPrompt:
    """A prompt ready to send: ``full_text = dataset_description + question``.

    ``kind``, ``payload`` and ``class_names`` ride along so the offline
    provider can answer without re-parsing the prompt text.
    """

    kind: PromptKind
    dataset_description: str
    question: str
    payload: tuple[str, ...]
    class_names: tuple[str, ...]

    @property
    def full_text(self) -> str:
        return self.dataset_description + self.question


def render_prompt(
    kind: PromptKind,
    dataset_desc: str,
    payload: Sequence[str],
    class_names: Sequence[str],
) -> RenderedPrompt:
    """Instantiate the template for ``kind`` with the payload texts.

    Payload arity: one text for SUMMARY/KEYWORDS/SOFT_LABEL; for
    EDGE_JUDGE four strings ``(text_a, label_a, text_b, label_b)``.
    """
    payload = tuple(payload)
    if kind is PromptKind.EDGE_JUDGE:
        if len(payload) != 4:
            raise ConfigError(
                f"edge-judge prompt needs (text_a, label_a, text_b, label_b), got {len(payload)} items"
            )
        question = _EDGE_JUDGE_TEMPLATE.format(
            text_a=payload[0], label_a=payload[1], text_b=payload[2], label_b=payload[3]
        )
    else:
        if len(payload) != 1:
            raise ConfigError(f"{kind.value} prompt needs exactly one text, got {len(payload)}")
        template = {
            PromptKind.SUMMARY: _SUMMARY_TEMPLATE,
            PromptKind.KEYWORDS: _KEYWORDS_TEMPLATE,
            PromptKind.SOFT_LABEL: _SOFT_LABEL_TEMPLATE,
        }[kind]
        question = template.format(text=payload[0])
    return RenderedPrompt(
        kind=kind,
        dataset_description=dataset_desc,
        question=question,
        payload=payload,
        class_names=tuple(class_names),
    )


def default_dataset_description(class_names: Sequence[str], corpus_name: str = "corpus") -> str:
    """Generic description for datasets that do not ship one."""
    names = list(class_names)
    listing = ", ".join(names[:-1]) + (" and " + names[-1] if len(names) > 1 else names[0] if names else "")
    return (
        f"Now, here is a document from the {corpus_name} dataset. This document falls "
        f"into one of {len(names)} categories: {listing}. "
    )
