"""Sparsity simulator: random removal of node texts and edges.

Removal counts are exact (``floor``) and the text and edge draws come
from two independent named substreams of the seed, so changing one side
never perturbs the other. Labels and splits are untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .graph import TextAttributedGraph
from .text import substream_rng

__all__ = ["SparsityConfig", "sparsify"]


@dataclass(frozen=True)
class SparsityConfig:
    ratio: float
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.ratio <= 1.0):
            raise ConfigError(f"sparsity ratio must be in [0, 1], got {self.ratio}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


def sparsify(g: TextAttributedGraph, cfg: SparsityConfig) -> TextAttributedGraph:
    """Remove exactly ``floor(ratio*N)`` texts and ``floor(ratio*|E|)`` edges.

    Both sets are drawn uniformly without replacement; the same
    ``(graph, cfg)`` always yields the same output.
    """
    n_texts = math.floor(cfg.ratio * g.num_nodes)
    n_edges = math.floor(cfg.ratio * g.num_edges)

    text_rng = substream_rng(cfg.seed, "sparsify-texts")
    edge_rng = substream_rng(cfg.seed, "sparsify-edges")

    removed_nodes = set(
        text_rng.choice(g.num_nodes, size=n_texts, replace=False).tolist()
    ) if n_texts else set()
    removed_edge_idx = set(
        edge_rng.choice(g.num_edges, size=n_edges, replace=False).tolist()
    ) if n_edges else set()

    texts = tuple(
        None if i in removed_nodes else t for i, t in enumerate(g.texts)
    )
    edges = tuple(e for i, e in enumerate(g.edges) if i not in removed_edge_idx)
    return g.with_(texts=texts, edges=edges)
