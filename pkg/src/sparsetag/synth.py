"""Planted-partition generator for desk-scale text-attributed graphs.

Nodes fall into equal-size blocks; same-block pairs are wired with the
intra-class probability and cross-block pairs with the (strictly
smaller) inter-class probability. Each node's text samples mostly from
its class vocabulary (which includes the class name itself) plus a
shared noise vocabulary, so texts are predictive of labels the way
abstracts are predictive of research areas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import SplitMasks, TextAttributedGraph
from .llm.prompts import default_dataset_description
from .text import substream_rng

__all__ = ["SyntheticSpec", "gen_synthetic", "CLASS_NAME_POOL"]

CLASS_NAME_POOL = (
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliett", "kilo", "lima", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu",
)


@dataclass(frozen=True)
class SyntheticSpec:
    nodes: int = 600
    classes: int = 4
    intra: float = 0.05
    inter: float = 0.005
    vocab_per_class: int = 30
    words_per_node: int = 40
    seed: int = 7
    noise: float = 0.1
    noise_vocab: int = 3000
    train_frac: float = 0.6
    val_frac: float = 0.2

    def __post_init__(self):
        if self.nodes < self.classes or self.classes < 2:
            raise ConfigError("need at least 2 classes and nodes >= classes")
        if self.classes > len(CLASS_NAME_POOL):
            raise ConfigError(f"at most {len(CLASS_NAME_POOL)} classes supported")
        if not (0.0 <= self.inter < self.intra <= 1.0):
            raise ConfigError(
                f"intra-class probability ({self.intra}) must exceed inter-class ({self.inter})"
            )
        if self.vocab_per_class < 1 or self.words_per_node < 1:
            raise ConfigError("vocabulary and text sizes must be positive")
        if self.noise_vocab < 1:
            raise ConfigError("noise vocabulary size must be positive")
        if not (0.0 <= self.noise < 1.0):
            raise ConfigError("noise fraction must be in [0, 1)")
        if not (0.0 < self.train_frac and 0.0 <= self.val_frac
                and self.train_frac + self.val_frac < 1.0):
            raise ConfigError("split fractions must leave room for a test set")


def gen_synthetic(spec: SyntheticSpec) -> TextAttributedGraph:
    """Deterministic graph for the given spec (same spec+seed, same graph)."""
    n, k = spec.nodes, spec.classes
    class_names = tuple(CLASS_NAME_POOL[:k])
    vocab = [
        [name] + [f"{name}{i:02d}" for i in range(1, spec.vocab_per_class)]
        for name in class_names
    ]
    noise_vocab = [f"noise{i:04d}" for i in range(spec.noise_vocab)]

    # contiguous near-equal blocks
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    labels = tuple(c for c, size in enumerate(sizes) for _ in range(size))
    label_arr = np.asarray(labels)

    edge_rng = substream_rng(spec.seed, "synth-edges")
    prob = np.where(label_arr[:, None] == label_arr[None, :], spec.intra, spec.inter)
    draws = edge_rng.random((n, n))
    iu, ju = np.triu_indices(n, k=1)
    hit = draws[iu, ju] < prob[iu, ju]
    edges = tuple(zip(iu[hit].tolist(), ju[hit].tolist()))

    text_rng = substream_rng(spec.seed, "synth-texts")
    texts = []
    for i in range(n):
        words = []
        for _ in range(spec.words_per_node):
            if spec.noise > 0 and text_rng.random() < spec.noise:
                words.append(noise_vocab[int(text_rng.integers(spec.noise_vocab))])
            else:
                words.append(vocab[labels[i]][int(text_rng.integers(spec.vocab_per_class))])
        texts.append(" ".join(words))

    split_rng = substream_rng(spec.seed, "synth-splits")
    order = split_rng.permutation(n)
    n_train = int(spec.train_frac * n)
    n_val = int(spec.val_frac * n)
    splits = SplitMasks(
        train=frozenset(order[:n_train].tolist()),
        val=frozenset(order[n_train : n_train + n_val].tolist()),
        test=frozenset(order[n_train + n_val :].tolist()),
    )

    return TextAttributedGraph(
        num_nodes=n,
        edges=edges,
        texts=tuple(texts),
        labels=labels,
        class_names=class_names,
        splits=splits,
        description=default_dataset_description(class_names, "synthetic planted-partition"),
    )
