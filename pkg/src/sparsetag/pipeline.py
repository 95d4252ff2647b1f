"""End-to-end orchestration: stage execution, caching, reports, sweeps.

One run executes, per seed: sparsify -> propagate -> augment ->
aggregate -> embed -> structure augmentation -> training -> test
accuracy. Ablation flags swap stages out: without text augmentation the
aggregated text is the propagated text; without structure augmentation
the judged adjacency is the sparsified one and no nodes are selected;
without structure learning a single plain GCN replaces the dual model.

Expensive stage artifacts (augmented texts, embeddings, adjacency
stages) are cached on disk keyed by a content hash of everything that
determines them, so repeated runs and ablation variants sharing a cache
directory skip completed LLM work.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .config import PipelineConfig, variant_config
from .embed import EmbeddingMatrix, embed, load_embeddings, save_embeddings
from .errors import ConfigError, SparseTagError
from .gnn.model import (
    TrainConfig,
    predict,
    save_checkpoint,
    save_history,
    train_dual,
    train_gcn,
    train_mlp,
)
from .graph import TextAttributedGraph, accuracy, load_dataset
from .llm.gateway import CompletionGateway
from .sparsify import SparsityConfig, sparsify
from .structure import (
    AdjacencyStage,
    load_edges,
    pagerank,
    reconfigure_edges,
    save_confidences,
    save_edges,
    select_top_k,
    virtual_edges,
)
from .synth import gen_synthetic
from .textaug import (
    AugmentedNodeText,
    aggregate,
    augment,
    load_augmented,
    propagate_texts,
    save_augmented,
)

__all__ = ["RunReport", "SeedResult", "run_pipeline", "run_sweep", "emit_report", "load_graph"]

VOLATILE_FILES = ("timings.json",)  # wall-clock data, excluded from determinism claims


# -- reporting types -----------------------------------------------------


@dataclass
class SeedResult:
    seed: int
    accuracy: float | None = None
    best_epoch: int | None = None
    llm_text_fresh: int = 0
    llm_text_cached: int = 0
    llm_edge_fresh: int = 0
    llm_edge_cached: int = 0
    fallback_pairs: int = 0
    selected_count: int = 0
    error: str | None = None
    error_kind: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    history: Any = None  # TrainHistory, not serialized


@dataclass
class RunReport:
    header: str
    variant: str
    ratio: float
    per_seed: list[SeedResult]
    config_echo: dict[str, Any]
    dataset_id: str

    @property
    def accuracies(self) -> list[float]:
        return [r.accuracy for r in self.per_seed if r.accuracy is not None]

    @property
    def mean(self) -> float:
        acc = self.accuracies
        return float(np.mean(acc)) if acc else float("nan")

    @property
    def std(self) -> float:
        acc = self.accuracies
        if len(acc) < 2:
            return 0.0
        return float(np.std(acc, ddof=1))

    @property
    def partial(self) -> bool:
        return any(r.error is not None for r in self.per_seed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "header": self.header,
            "variant": self.variant,
            "ratio": self.ratio,
            "dataset_id": self.dataset_id,
            "mean": self.mean,
            "std": self.std,
            "partial": self.partial,
            "config": self.config_echo,
            "per_seed": [
                {
                    "seed": r.seed,
                    "accuracy": r.accuracy,
                    "best_epoch": r.best_epoch,
                    "llm_text_calls": {"fresh": r.llm_text_fresh, "cached": r.llm_text_cached},
                    "llm_edge_calls": {"fresh": r.llm_edge_fresh, "cached": r.llm_edge_cached},
                    "fallback_pairs": r.fallback_pairs,
                    "selected_count": r.selected_count,
                    "error": r.error,
                }
                for r in self.per_seed
            ],
        }


# -- stage cache ---------------------------------------------------------


class StageCache:
    """Content-addressed directories for completed stage artifacts."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def lookup(self, stage: str, key_material: Mapping[str, Any]) -> tuple[Path, bool]:
        canon = json.dumps({"stage": stage, **key_material}, sort_keys=True)
        digest = hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]
        entry = self.root / f"{stage}-{digest}"
        return entry, (entry / "_complete").exists()

    @staticmethod
    def mark_complete(entry: Path) -> None:
        (entry / "_complete").write_text("", encoding="utf-8")


def _publish(entry: Path, seed_dir: Path, names: Sequence[str]) -> None:
    """Copy stage artifacts from the cache entry into the seed directory."""
    seed_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        src = entry / name
        if src.exists():
            shutil.copyfile(src, seed_dir / name)


# -- helpers -------------------------------------------------------------


def load_graph(cfg: PipelineConfig) -> tuple[TextAttributedGraph, str]:
    """The configured dataset plus a stable content identity string."""
    if cfg.dataset is not None:
        path = Path(cfg.dataset)
        graph = load_dataset(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
        return graph, f"file:{digest}"
    assert cfg.synth is not None
    graph = gen_synthetic(cfg.synth)
    spec = cfg.synth
    ident = (
        f"synth:{spec.nodes}n{spec.classes}c-intra{spec.intra}-inter{spec.inter}"
        f"-v{spec.vocab_per_class}-w{spec.words_per_node}-noise{spec.noise}"
        f"-tr{spec.train_frac}-va{spec.val_frac}-s{spec.seed}"
    )
    return graph, ident


def _empty_augmented(g: TextAttributedGraph, propagated: Sequence[str]) -> list[AugmentedNodeText]:
    return [
        AugmentedNodeText(original=g.texts[i], propagated=propagated[i])
        for i in range(g.num_nodes)
    ]


class _StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name: str, fn):
        start = time.perf_counter()
        result = fn()
        self.timings[name] = time.perf_counter() - start
        return result


# -- the per-seed run ----------------------------------------------------


AUGMENT_FILES = ("augmented.jsonl",)
EMBED_FILES = ("embeddings.bin", "embeddings.bin.sha256")
STRUCT_FILES = (
    "base.edges",
    "virtual.edges",
    "reconfigured.edges",
    "selected.txt",
    "confidences.csv",
)


def _run_seed(
    graph: TextAttributedGraph,
    dataset_id: str,
    cfg: PipelineConfig,
    seed: int,
    seed_dir: Path,
    cache: StageCache,
    gateway: CompletionGateway,
) -> SeedResult:
    result = SeedResult(seed=seed)
    timer = _StageTimer()
    result.timings = timer.timings

    g_sparse = timer.run(
        "sparsify", lambda: sparsify(graph, SparsityConfig(ratio=cfg.ratio, seed=seed))
    )
    propagated = timer.run("propagate", lambda: propagate_texts(g_sparse, cfg.char_budget))
    dataset_desc = graph.description

    # -- text augmentation (cached) --
    aug_key = {
        "dataset": dataset_id,
        "ratio": cfg.ratio,
        "seed": seed,
        "char_budget": cfg.char_budget,
        "text_aug": cfg.text_aug,
        "provider": [cfg.llm.kind, cfg.llm.model],
    }
    entry, hit = cache.lookup("augment", aug_key)

    def _augment_stage() -> list[AugmentedNodeText]:
        if hit:
            return load_augmented(entry / "augmented.jsonl", g_sparse)
        if cfg.text_aug:
            before = gateway.counters.snapshot()
            items = augment(g_sparse, propagated, gateway, dataset_desc)
            delta = gateway.counters.since(before)
            result.llm_text_fresh, result.llm_text_cached = delta.fresh, delta.cached
        else:
            items = _empty_augmented(g_sparse, propagated)
        entry.mkdir(parents=True, exist_ok=True)
        save_augmented(items, entry / "augmented.jsonl")
        cache.mark_complete(entry)
        return items

    augmented = timer.run("augment", _augment_stage)
    _publish(entry, seed_dir, AUGMENT_FILES)

    # nodes with no propagated text stay textless; bare section markers
    # would otherwise embed every empty node onto one identical vector
    mode = cfg.aggregation if cfg.text_aug else "OT"
    aggregated = timer.run(
        "aggregate",
        lambda: [aggregate(a, mode) if a.propagated else "" for a in augmented],
    )

    # -- embeddings (cached) --
    embed_key = {
        **aug_key,
        "aggregation": mode,
        "embedder": [cfg.embedder.kind, cfg.embedder.model, cfg.embedder.dim],
    }
    entry_e, hit_e = cache.lookup("embed", embed_key)

    def _embed_stage() -> EmbeddingMatrix:
        if hit_e:
            return load_embeddings(entry_e / "embeddings.bin")
        matrix = embed(aggregated, cfg.embedder)
        entry_e.mkdir(parents=True, exist_ok=True)
        save_embeddings(matrix, entry_e / "embeddings.bin")
        cache.mark_complete(entry_e)
        return matrix

    H = timer.run("embed", _embed_stage)
    _publish(entry_e, seed_dir, EMBED_FILES)

    # -- structure augmentation (cached) --
    struct_key = {
        **embed_key,
        "struct_aug": cfg.struct_aug,
        "tau1": cfg.tau1,
        "tau2": cfg.tau2,
        "k_fraction": cfg.k_fraction,
        "pagerank": [cfg.pagerank_damping, cfg.pagerank_tol, cfg.pagerank_max_iter],
    }
    entry_s, hit_s = cache.lookup("struct", struct_key)

    def _struct_stage() -> AdjacencyStage:
        base = frozenset(g_sparse.edges)
        if hit_s:
            return AdjacencyStage(
                base=load_edges(entry_s / "base.edges"),
                virtual=load_edges(entry_s / "virtual.edges"),
                reconfigured=load_edges(entry_s / "reconfigured.edges"),
                selected=frozenset(
                    int(line)
                    for line in (entry_s / "selected.txt").read_text().splitlines()
                    if line.strip()
                ),
            )
        if cfg.struct_aug:
            soft_labels = [a.soft_label for a in augmented]
            label_names = [a.soft_label_name for a in augmented]
            virtual = virtual_edges(H, soft_labels, base, cfg.tau1)
            pr = pagerank(
                virtual,
                g_sparse.num_nodes,
                damping=cfg.pagerank_damping,
                tol=cfg.pagerank_tol,
                max_iter=cfg.pagerank_max_iter,
            )
            k = max(1, math.floor(cfg.k_fraction * len(g_sparse.splits.train)))
            selected = select_top_k(pr.scores, k)
            before = gateway.counters.snapshot()
            reconfigured, confidences = reconfigure_edges(
                selected, aggregated, label_names, base, cfg.tau2, gateway, dataset_desc
            )
            delta = gateway.counters.since(before)
            result.llm_edge_fresh, result.llm_edge_cached = delta.fresh, delta.cached
            result.fallback_pairs = sum(
                1 for c in confidences.values() if c.source == "fallback"
            )
            stage = AdjacencyStage(
                base=base,
                virtual=virtual,
                reconfigured=reconfigured,
                selected=selected,
                confidences=confidences,
            )
        else:
            stage = AdjacencyStage(
                base=base, virtual=base, reconfigured=base, selected=frozenset()
            )
        entry_s.mkdir(parents=True, exist_ok=True)
        save_edges(stage.base, entry_s / "base.edges")
        save_edges(stage.virtual, entry_s / "virtual.edges")
        save_edges(stage.reconfigured, entry_s / "reconfigured.edges")
        (entry_s / "selected.txt").write_text(
            "".join(f"{i}\n" for i in sorted(stage.selected)), encoding="utf-8"
        )
        save_confidences(stage.confidences, entry_s / "confidences.csv")
        cache.mark_complete(entry_s)
        return stage

    stage = timer.run("struct", _struct_stage)
    result.selected_count = len(stage.selected)
    _publish(entry_s, seed_dir, STRUCT_FILES)

    # -- training and evaluation (never cached) --
    train_cfg = TrainConfig(
        lr=cfg.train.lr,
        weight_decay=cfg.train.weight_decay,
        dropout=cfg.train.dropout,
        epochs=cfg.train.epochs,
        seed=seed,
        hidden=cfg.train.hidden,
        float_mode=cfg.train.float_mode,
    )
    if cfg.model == "mlp":
        model_kind = "mlp"
    elif cfg.model == "gcn" or not cfg.struct_learn:
        model_kind = "gcn"
    else:
        model_kind = "dual"

    def _train_stage():
        if model_kind == "dual":
            return train_dual(
                H.values, stage.reconfigured, stage.selected,
                graph.labels, graph.splits, train_cfg,
            )
        if model_kind == "mlp":
            return train_mlp(H.values, graph.labels, graph.splits, train_cfg)
        return train_gcn(H.values, stage.reconfigured, graph.labels, graph.splits, train_cfg)

    model, history = timer.run("train", _train_stage)
    result.best_epoch = history.best_epoch
    result.history = history
    save_history(history, seed_dir / "history.csv")
    save_checkpoint(model, seed_dir / "model.ckpt")

    def _eval_stage() -> float:
        adjacency = stage if model_kind == "dual" else (
            () if model_kind == "mlp" else stage.reconfigured
        )
        predictions = predict(model, H.values, adjacency)
        with (seed_dir / "predictions.csv").open("w", encoding="utf-8") as fh:
            fh.write("node,prediction\n")
            for i, p in enumerate(predictions.tolist()):
                fh.write(f"{i},{p}\n")
        return accuracy(predictions, graph, graph.splits.test)

    result.accuracy = timer.run("evaluate", _eval_stage)
    return result


# -- public entry points -------------------------------------------------


def _variant_label(cfg: PipelineConfig) -> str:
    removed = [
        name
        for name, enabled in (
            ("text_aug", cfg.text_aug),
            ("struct_aug", cfg.struct_aug),
            ("struct_learn", cfg.struct_learn),
        )
        if not enabled
    ]
    base = "full" if not removed else "wo_" + "+".join(removed)
    if cfg.model != "dual":
        base += f"[{cfg.model}]"
    return base


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Execute every seed; per-seed stage errors are recorded, not raised."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = StageCache(out_dir / ".stage-cache")
    graph, dataset_id = load_graph(cfg)
    gateway = CompletionGateway(cfg.llm)

    results: list[SeedResult] = []
    for seed in cfg.seeds:
        seed_dir = out_dir / f"seed_{seed}"
        try:
            results.append(
                _run_seed(graph, dataset_id, cfg, seed, seed_dir, cache, gateway)
            )
        except SparseTagError as exc:
            results.append(
                SeedResult(seed=seed, error=str(exc), error_kind=type(exc).__name__)
            )

    report = RunReport(
        header=f"sparsity ratio {cfg.ratio:.0%}",
        variant=_variant_label(cfg),
        ratio=cfg.ratio,
        per_seed=results,
        config_echo=cfg.semantic_echo(),
        dataset_id=dataset_id,
    )
    emit_report(report, out_dir, figures=cfg.figures)
    return report


def run_sweep(cfg: PipelineConfig, ratios: Sequence[float]) -> list[RunReport]:
    """One run per ratio plus a combined CSV and plot-ready long table."""
    if not ratios:
        raise ConfigError("sweep needs at least one ratio")
    for ratio in ratios:
        if not (0.0 <= ratio <= 1.0):
            raise ConfigError(f"sweep ratio {ratio} outside [0, 1]")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = []
    for ratio in ratios:
        sub = variant_config(
            cfg, ratio=float(ratio), out_dir=str(out_dir / f"ratio_{int(round(ratio * 100)):03d}")
        )
        reports.append(run_pipeline(sub))

    rows = [(r.ratio, r.mean, r.std) for r in reports]
    with (out_dir / "sweep.csv").open("w", encoding="utf-8") as fh:
        fh.write("ratio,mean,std\n")
        for ratio, mean, std in rows:
            fh.write(f"{ratio!r},{mean!r},{std!r}\n")
    with (out_dir / "sweep_long.csv").open("w", encoding="utf-8") as fh:
        fh.write("ratio,seed,accuracy\n")
        for report in reports:
            for r in report.per_seed:
                if r.accuracy is not None:
                    fh.write(f"{report.ratio!r},{r.seed},{r.accuracy!r}\n")
    if cfg.figures:
        from .plots import plot_sweep

        plot_sweep(rows, out_dir / "figures" / "sweep_accuracy.png")
    return reports


def emit_report(report: RunReport, out_dir: str | Path, figures: bool = True) -> None:
    """Write report.json/report.csv (bit-stable) plus volatile timings."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    payload = report.to_dict()
    (out_dir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    with (out_dir / "report.csv").open("w", encoding="utf-8") as fh:
        fh.write(f"# {report.header}, variant={report.variant}\n")
        fh.write("seed,accuracy\n")
        for r in report.per_seed:
            acc = "" if r.accuracy is None else repr(r.accuracy)
            fh.write(f"{r.seed},{acc}\n")
        fh.write(f"mean,{report.mean!r}\n")
        fh.write(f"std,{report.std!r}\n")

    timings = {
        "per_seed": {str(r.seed): r.timings for r in report.per_seed},
        "note": "wall-clock seconds; excluded from determinism guarantees",
    }
    (out_dir / "timings.json").write_text(
        json.dumps(timings, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    if figures and report.accuracies:
        from .plots import plot_history, plot_seed_accuracies

        per_seed = {r.seed: r.accuracy for r in report.per_seed if r.accuracy is not None}
        plot_seed_accuracies(per_seed, report.mean, out_dir / "figures" / "seed_accuracy.png")
        histories = {
            r.seed: (r.history.train_loss, r.history.val_acc)
            for r in report.per_seed
            if r.history is not None
        }
        if histories:
            plot_history(histories, out_dir / "figures" / "training_history.png")
