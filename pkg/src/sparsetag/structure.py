"""Structure augmentation: virtual edges, PageRank selection, edge re-judgment.

Virtual edges connect same-soft-label nodes with high embedding cosine
and exist only to compute PageRank importance. The top-scoring nodes
form the selected set; every pair inside it is re-judged by the
completion gateway, so edges there can be both added and deleted. Pairs
with an endpoint outside the selected set always keep the base
adjacency.
"""

from __future__ import annotations

import csv
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embed import EmbeddingMatrix
from .errors import ConfigError, TransportError
from .llm.gateway import CompletionGateway
from .llm.prompts import PromptKind, render_prompt

__all__ = [
    "AdjacencyStage",
    "PageRankResult",
    "EdgeConfidence",
    "virtual_edges",
    "pagerank",
    "select_top_k",
    "reconfigure_edges",
    "save_edges",
    "load_edges",
    "save_confidences",
]

EdgeSet = frozenset  # of (u, v) tuples with u < v


@dataclass(frozen=True)
class EdgeConfidence:
    score: float
    source: str  # "llm" | "fallback"


@dataclass(frozen=True)
class PageRankResult:
    scores: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class AdjacencyStage:
    """The adjacency states of one run, kept as separate artifacts."""

    base: frozenset[tuple[int, int]]
    virtual: frozenset[tuple[int, int]]
    reconfigured: frozenset[tuple[int, int]]
    selected: frozenset[int]
    confidences: dict[tuple[int, int], EdgeConfidence] = field(default_factory=dict)

    def __post_init__(self):
        if not self.virtual >= self.base:
            raise ConfigError("virtual edge set must contain every base edge")
        for u, v in self.confidences:
            if u not in self.selected or v not in self.selected:
                raise ConfigError(f"confidence pair ({u}, {v}) outside the selected set")


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def virtual_edges(
    H: EmbeddingMatrix,
    soft_labels: Sequence[int | None],
    base_edges: Iterable[tuple[int, int]],
    tau1: float,
) -> frozenset[tuple[int, int]]:
    """Base edges plus all same-label pairs with cosine above ``tau1``.

    Pairs with an unknown soft label on either side are never added.
    Within-class similarity is computed exactly (no approximate search).
    """
    n = H.rows
    if len(soft_labels) != n:
        raise ConfigError(f"need one soft label per row, got {len(soft_labels)} for {n}")
    edges = {_canon(u, v) for u, v in base_edges}

    groups: dict[int, list[int]] = {}
    for i, label in enumerate(soft_labels):
        if label is not None:
            groups.setdefault(label, []).append(i)

    values = H.values
    for members in groups.values():
        if len(members) < 2:
            continue
        sub = values[members]
        sims = sub @ sub.T
        idx_a, idx_b = np.nonzero(np.triu(sims > tau1, k=1))
        for a, b in zip(idx_a.tolist(), idx_b.tolist()):
            edges.add(_canon(members[a], members[b]))
    return frozenset(edges)


def pagerank(
    edges: Iterable[tuple[int, int]],
    n: int,
    damping: float = 0.85,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> PageRankResult:
    """Power iteration with uniform teleport on the undirected graph.

    Isolated (dangling) nodes redistribute their mass uniformly. Starts
    from the uniform vector and stops when the L1 change drops below
    ``tol``; non-convergence is flagged, not raised.
    """
    if not (0.0 < damping < 1.0):
        raise ConfigError(f"damping must be in (0, 1), got {damping}")
    edge_list = sorted({_canon(u, v) for u, v in edges})
    degree = np.zeros(n, dtype=np.float64)
    for u, v in edge_list:
        if not (0 <= u < n and 0 <= v < n):
            raise ConfigError(f"edge ({u}, {v}) out of range for n={n}")
        degree[u] += 1.0
        degree[v] += 1.0

    if n == 0:
        return PageRankResult(np.zeros(0), 0, True)

    src = np.fromiter((u for u, _ in edge_list), dtype=np.int64, count=len(edge_list))
    dst = np.fromiter((v for _, v in edge_list), dtype=np.int64, count=len(edge_list))
    dangling = degree == 0.0
    inv_degree = np.zeros(n, dtype=np.float64)
    inv_degree[~dangling] = 1.0 / degree[~dangling]

    v = np.full(n, 1.0 / n, dtype=np.float64)
    teleport = (1.0 - damping) / n
    for iteration in range(1, max_iter + 1):
        contrib = v * inv_degree
        flow = np.zeros(n, dtype=np.float64)
        np.add.at(flow, dst, contrib[src])
        np.add.at(flow, src, contrib[dst])
        dangling_mass = float(v[dangling].sum()) / n
        new_v = teleport + damping * (flow + dangling_mass)
        delta = float(np.abs(new_v - v).sum())
        v = new_v
        if delta < tol:
            return PageRankResult(v, iteration, True)
    return PageRankResult(v, max_iter, False)


def select_top_k(scores: Sequence[float], k: int) -> frozenset[int]:
    """Ids of the k largest scores; ties broken by ascending node id."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if not (1 <= k <= n):
        raise ConfigError(f"k must be in [1, {n}], got {k}")
    order = np.lexsort((np.arange(n), -scores))
    return frozenset(order[:k].tolist())


_NUMBER_RE = re.compile(r"-?(?:\d+\.\d+|\.\d+|\d+)")


def parse_confidence(raw: str) -> float | None:
    """First decimal number in [0, 1] appearing in the completion."""
    for match in _NUMBER_RE.finditer(raw):
        value = float(match.group())
        if 0.0 <= value <= 1.0:
            return value
    return None


def reconfigure_edges(
    Vc: Iterable[int],
    aggregated_texts: Sequence[str],
    soft_label_names: Sequence[str],
    base_edges: Iterable[tuple[int, int]],
    tau2: float,
    gateway: CompletionGateway,
    dataset_desc: str = "",
) -> tuple[frozenset[tuple[int, int]], dict[tuple[int, int], EdgeConfidence]]:
    """Re-judge every pair inside ``Vc``; copy the base adjacency elsewhere.

    A pair is an edge iff its judged confidence exceeds ``tau2``. An
    unparsable completion is retried once past the cache; if that also
    fails to parse, the pair falls back to its base adjacency value.
    """
    if not (0.0 <= tau2 <= 1.0):
        raise ConfigError(f"tau2 must be in [0, 1], got {tau2}")
    selected = sorted(set(Vc))
    base = {_canon(u, v) for u, v in base_edges}
    pairs = list(combinations(selected, 2))

    confidences: dict[tuple[int, int], EdgeConfidence] = {}
    lock = threading.Lock()

    def judge(pair: tuple[int, int]) -> None:
        u, v = pair
        prompt = render_prompt(
            PromptKind.EDGE_JUDGE,
            dataset_desc,
            (aggregated_texts[u], soft_label_names[u], aggregated_texts[v], soft_label_names[v]),
            (),
        )
        try:
            raw = gateway.complete(prompt)
            value = parse_confidence(raw)
            if value is None:
                raw = gateway.complete(prompt, bypass_cache=True)
                value = parse_confidence(raw)
        except TransportError as exc:
            raise TransportError(
                f"edge judgment failed for pair ({u}, {v}): {exc}", request_hash=exc.request_hash
            ) from exc
        if value is None:
            conf = EdgeConfidence(score=1.0 if pair in base else 0.0, source="fallback")
        else:
            conf = EdgeConfidence(score=value, source="llm")
        with lock:
            confidences[pair] = conf

    workers = gateway.cfg.workers
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(judge, pairs))
    else:
        for pair in pairs:
            judge(pair)

    selected_set = set(selected)
    edges = {e for e in base if not (e[0] in selected_set and e[1] in selected_set)}
    for pair, conf in confidences.items():
        if conf.source == "fallback":
            if pair in base:
                edges.add(pair)
        elif conf.score > tau2:
            edges.add(pair)
    return frozenset(edges), confidences


def save_edges(edges: Iterable[tuple[int, int]], path: str | Path) -> None:
    """One `u v` pair per line with u < v, sorted."""
    lines = [f"{u} {v}" for u, v in sorted(_canon(u, v) for u, v in edges)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_edges(path: str | Path) -> frozenset[tuple[int, int]]:
    edges = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            u, v = line.split()
            edges.add(_canon(int(u), int(v)))
    return frozenset(edges)


def save_confidences(
    confidences: dict[tuple[int, int], EdgeConfidence], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "score", "source"])
        for (u, v) in sorted(confidences):
            conf = confidences[(u, v)]
            writer.writerow([u, v, repr(conf.score), conf.source])
