"""Text-attributed graph data model, JSONL ingestion, and evaluation.

Graphs are undirected and simple: edges are unordered pairs with no
self-loops and no duplicates. Node texts are optional (``None`` marks a
removed/missing text, distinct from the empty string), labels are
optional class ids, and the train/val/test/out splits are disjoint
node-id sets. Instances are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

from .errors import DatasetError

__all__ = [
    "SplitMasks",
    "TextAttributedGraph",
    "load_dataset",
    "save_dataset",
    "accuracy",
]

SPLIT_NAMES = ("train", "val", "test", "out")


@dataclass(frozen=True)
class SplitMasks:
    """Disjoint train/val/test/out node-id sets."""

    train: frozenset[int] = frozenset()
    val: frozenset[int] = frozenset()
    test: frozenset[int] = frozenset()
    out: frozenset[int] = frozenset()

    def named(self) -> dict[str, frozenset[int]]:
        return {name: getattr(self, name) for name in SPLIT_NAMES}

    def split_of(self, node: int) -> str | None:
        for name, members in self.named().items():
            if node in members:
                return name
        return None


@dataclass(frozen=True)
class TextAttributedGraph:
    """Immutable graph with per-node optional texts and labels.

    ``edges`` is a sorted tuple of ``(u, v)`` pairs with ``u < v``.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    texts: tuple[str | None, ...]
    labels: tuple[int | None, ...]
    class_names: tuple[str, ...]
    splits: SplitMasks = field(default_factory=SplitMasks)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        self.validate()

    def validate(self) -> None:
        if len(self.texts) != self.num_nodes or len(self.labels) != self.num_nodes:
            raise DatasetError(
                f"texts/labels length must equal num_nodes={self.num_nodes}"
            )
        seen: set[tuple[int, int]] = set()
        for u, v in self.edges:
            if u == v:
                raise DatasetError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise DatasetError(f"dangling edge ({u}, {v})")
            if u > v:
                raise DatasetError(f"edge ({u}, {v}) not canonically ordered")
            if (u, v) in seen:
                raise DatasetError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        for i, label in enumerate(self.labels):
            if label is not None and not (0 <= label < len(self.class_names)):
                raise DatasetError(f"node {i}: unknown class id {label}")
        named = self.splits.named()
        all_ids = [i for members in named.values() for i in members]
        if len(all_ids) != len(set(all_ids)):
            raise DatasetError("split masks overlap")
        for name, members in named.items():
            for i in members:
                if not (0 <= i < self.num_nodes):
                    raise DatasetError(f"split '{name}' references node {i} out of range")
        for i in named["train"]:
            if self.labels[i] is None:
                raise DatasetError(f"train node {i} has no label")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(set(nbrs))) for nbrs in adj)

    def neighbors(self, node_id: int) -> list[int]:
        """Sorted, deduplicated adjacency list of ``node_id``."""
        if not (0 <= node_id < self.num_nodes):
            raise DatasetError(f"node id {node_id} out of range [0, {self.num_nodes})")
        return list(self._adjacency[node_id])

    def text_present(self) -> frozenset[int]:
        return frozenset(i for i, t in enumerate(self.texts) if t is not None)

    def with_(self, **changes) -> "TextAttributedGraph":
        return replace(self, **changes)


def neighbors(g: TextAttributedGraph, node_id: int) -> list[int]:
    return g.neighbors(node_id)


def _canonical_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def load_dataset(path: str | Path) -> TextAttributedGraph:
    """Load a JSONL dataset.

    The first record must be ``{"type": "meta", "classes": [...]}``;
    node records carry dense ids in ``[0, N)`` plus text/label/split,
    and edge records carry ``u``/``v``. Duplicate edges are collapsed.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")

    classes: list[str] | None = None
    description = ""
    nodes: dict[int, dict] = {}
    raw_edges: set[tuple[int, int]] = set()

    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            kind = rec.get("type")
            if kind == "meta":
                if classes is not None:
                    raise DatasetError(f"{path}:{lineno}: duplicate meta record")
                classes = list(rec.get("classes", []))
                description = rec.get("description", "")
            elif kind == "node":
                if "id" not in rec:
                    raise DatasetError(f"{path}:{lineno}: node record without id")
                nid = rec["id"]
                if not isinstance(nid, int):
                    raise DatasetError(f"{path}:{lineno}: node id must be int")
                if nid in nodes:
                    raise DatasetError(f"{path}:{lineno}: duplicate node id {nid}")
                split = rec.get("split")
                if split is not None and split not in SPLIT_NAMES:
                    raise DatasetError(f"{path}:{lineno}: unknown split {split!r}")
                nodes[nid] = {
                    "text": rec.get("text"),
                    "label": rec.get("label"),
                    "split": split,
                }
            elif kind == "edge":
                u, v = rec.get("u"), rec.get("v")
                if not isinstance(u, int) or not isinstance(v, int):
                    raise DatasetError(f"{path}:{lineno}: edge endpoints must be ints")
                if u == v:
                    raise DatasetError(f"{path}:{lineno}: self-loop ({u}, {v})")
                raw_edges.add(_canonical_edge(u, v))
            else:
                raise DatasetError(f"{path}:{lineno}: unknown record type {kind!r}")

    if classes is None:
        raise DatasetError(f"{path}: missing meta record")
    n = len(nodes)
    if sorted(nodes) != list(range(n)):
        raise DatasetError(f"{path}: node ids must be dense in [0, {n})")

    texts = tuple(nodes[i]["text"] for i in range(n))
    labels = tuple(nodes[i]["label"] for i in range(n))
    split_sets: dict[str, set[int]] = {name: set() for name in SPLIT_NAMES}
    for i in range(n):
        split = nodes[i]["split"]
        if split is not None:
            split_sets[split].add(i)
    masks = SplitMasks(**{k: frozenset(v) for k, v in split_sets.items()})

    return TextAttributedGraph(
        num_nodes=n,
        edges=tuple(sorted(raw_edges)),
        texts=texts,
        labels=labels,
        class_names=tuple(classes),
        splits=masks,
        description=description,
    )


def save_dataset(g: TextAttributedGraph, path: str | Path) -> None:
    """Serialize to the JSONL format accepted by :func:`load_dataset`."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        meta = {"type": "meta", "classes": list(g.class_names), "description": g.description}
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for i in range(g.num_nodes):
            rec = {
                "type": "node",
                "id": i,
                "text": g.texts[i],
                "label": g.labels[i],
                "split": g.splits.split_of(i),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        for u, v in g.edges:
            fh.write(json.dumps({"type": "edge", "u": u, "v": v}, sort_keys=True) + "\n")


def accuracy(predictions, g: TextAttributedGraph, mask) -> float:
    """Fraction of masked nodes whose prediction matches their label."""
    mask = sorted(mask)
    if not mask:
        raise DatasetError("accuracy over an empty mask is undefined")
    correct = 0
    for i in mask:
        if g.labels[i] is None:
            raise DatasetError(f"node {i} in evaluation mask has no label")
        pred = predictions[i]
        if pred is None:
            raise DatasetError(f"node {i} in evaluation mask has no prediction")
        if int(pred) == g.labels[i]:
            correct += 1
    return correct / len(mask)
