"""Flat key=value configuration with typed keys and flag overrides.

A config file is one ``key = value`` per line ('#' starts a comment).
Every key can also be set on the command line via ``--set key=value``;
later sources win. Unknown keys are config errors, not warnings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .embed import EmbeddingProviderConfig
from .errors import ConfigError
from .gnn.model import TrainConfig
from .llm.gateway import ProviderConfig
from .synth import SyntheticSpec
from .textaug import AGGREGATION_MODES, DEFAULT_CHAR_BUDGET

__all__ = ["PipelineConfig", "parse_config_file", "apply_overrides", "build_config", "KEY_TYPES"]

DEFAULT_SEEDS = (42, 43, 44, 45, 46)

# key -> (python type, default); None default means "unset"
KEY_TYPES: dict[str, tuple[type | str, Any]] = {
    "dataset": (str, None),
    "out_dir": (str, "runs/latest"),
    "ratio": (float, 0.0),
    "seeds": ("int_list", DEFAULT_SEEDS),
    "ratios": ("float_list", None),
    "tau1": (float, 0.8),
    "tau2": (float, 0.5),
    "k_fraction": (float, 0.10),
    "aggregation": (str, "OT+SKWSL"),
    "text_aug": (bool, True),
    "struct_aug": (bool, True),
    "struct_learn": (bool, True),
    "model": (str, "dual"),
    "char_budget": (int, DEFAULT_CHAR_BUDGET),
    "figures": (bool, True),
    # completion provider
    "llm_provider": (str, "offline"),
    "llm_endpoint": (str, ""),
    "llm_model": (str, "offline-v1"),
    "llm_temperature": (float, 0.0),
    "llm_retries": (int, 2),
    "llm_timeout": (float, 60.0),
    "llm_workers": (int, 4),
    "llm_cache_dir": (str, None),
    # embedding provider
    "embed_provider": (str, "offline"),
    "embed_endpoint": (str, ""),
    "embed_model": (str, "hash-v1"),
    "embed_dim": (int, 256),
    "embed_retries": (int, 2),
    "embed_timeout": (float, 60.0),
    "embed_batch": (int, 128),
    # training
    "lr": (float, 1e-2),
    "weight_decay": (float, 5e-4),
    "dropout": (float, 0.5),
    "epochs": (int, 100),
    "hidden": (int, 64),
    "float_mode": (str, "float64"),
    # pagerank
    "pagerank_damping": (float, 0.85),
    "pagerank_tol": (float, 1e-8),
    "pagerank_max_iter": (int, 200),
    # synthetic dataset (used when no dataset path is given)
    "synth_nodes": (int, None),
    "synth_classes": (int, 4),
    "synth_intra": (float, 0.05),
    "synth_inter": (float, 0.005),
    "synth_vocab": (int, 30),
    "synth_words": (int, 40),
    "synth_seed": (int, 7),
    "synth_noise": (float, 0.1),
    "synth_train_frac": (float, 0.6),
    "synth_val_frac": (float, 0.2),
}

_BOOL_VALUES = {"true": True, "1": True, "yes": True, "on": True,
                "false": False, "0": False, "no": False, "off": False}


def _coerce(key: str, raw: str):
    kind, _ = KEY_TYPES[key]
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() not in _BOOL_VALUES:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_VALUES[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "int_list":
            return tuple(int(part) for part in raw.split(",") if part.strip())
        if kind == "float_list":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def parse_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, Any] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in KEY_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def apply_overrides(values: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    out = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in KEY_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved run configuration."""

    dataset: str | None
    synth: SyntheticSpec | None
    out_dir: str
    ratio: float
    seeds: tuple[int, ...]
    ratios: tuple[float, ...] | None
    tau1: float
    tau2: float
    k_fraction: float
    aggregation: str
    text_aug: bool
    struct_aug: bool
    struct_learn: bool
    model: str
    char_budget: int
    figures: bool
    llm: ProviderConfig
    embedder: EmbeddingProviderConfig
    train: TrainConfig
    pagerank_damping: float
    pagerank_tol: float
    pagerank_max_iter: int
    raw: dict[str, Any] = field(default_factory=dict, compare=False)

    def semantic_echo(self) -> dict[str, Any]:
        """Resolved keys that determine results (paths and dirs excluded)."""
        skip = {"out_dir", "llm_cache_dir", "dataset"}
        echo = {k: self.raw[k] for k in sorted(self.raw) if k not in skip and self.raw[k] is not None}
        return echo


def build_config(values: Mapping[str, Any]) -> PipelineConfig:
    resolved: dict[str, Any] = {key: default for key, (_, default) in KEY_TYPES.items()}
    for key, value in values.items():
        if key not in KEY_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        resolved[key] = value

    if not (0.0 <= resolved["ratio"] <= 1.0):
        raise ConfigError(f"ratio must be in [0, 1], got {resolved['ratio']}")
    if not resolved["seeds"]:
        raise ConfigError("seeds list must not be empty")
    if resolved["aggregation"] not in AGGREGATION_MODES:
        raise ConfigError(
            f"unknown aggregation mode {resolved['aggregation']!r}; expected one of {AGGREGATION_MODES}"
        )
    if resolved["model"] not in ("dual", "gcn", "mlp"):
        raise ConfigError(f"model must be dual, gcn, or mlp, got {resolved['model']!r}")
    if not (0.0 < resolved["k_fraction"] <= 1.0):
        raise ConfigError(f"k_fraction must be in (0, 1], got {resolved['k_fraction']}")

    synth = None
    if resolved["dataset"] is None:
        if resolved["synth_nodes"] is None:
            raise ConfigError("either a dataset path or synth_nodes must be configured")
        synth = SyntheticSpec(
            nodes=resolved["synth_nodes"],
            classes=resolved["synth_classes"],
            intra=resolved["synth_intra"],
            inter=resolved["synth_inter"],
            vocab_per_class=resolved["synth_vocab"],
            words_per_node=resolved["synth_words"],
            seed=resolved["synth_seed"],
            noise=resolved["synth_noise"],
            train_frac=resolved["synth_train_frac"],
            val_frac=resolved["synth_val_frac"],
        )

    out_dir = resolved["out_dir"]
    llm_cache = resolved["llm_cache_dir"] or str(Path(out_dir) / "llm-cache")
    llm = ProviderConfig(
        kind=resolved["llm_provider"],
        endpoint=resolved["llm_endpoint"],
        model=resolved["llm_model"],
        temperature=resolved["llm_temperature"],
        max_retries=resolved["llm_retries"],
        timeout=resolved["llm_timeout"],
        cache_dir=llm_cache,
        workers=resolved["llm_workers"],
    )
    embedder = EmbeddingProviderConfig(
        kind=resolved["embed_provider"],
        endpoint=resolved["embed_endpoint"],
        model=resolved["embed_model"],
        dim=resolved["embed_dim"],
        max_retries=resolved["embed_retries"],
        timeout=resolved["embed_timeout"],
        batch_size=resolved["embed_batch"],
    )
    train = TrainConfig(
        lr=resolved["lr"],
        weight_decay=resolved["weight_decay"],
        dropout=resolved["dropout"],
        epochs=resolved["epochs"],
        seed=0,  # overwritten per run seed
        hidden=resolved["hidden"],
        float_mode=resolved["float_mode"],
    )

    return PipelineConfig(
        dataset=resolved["dataset"],
        synth=synth,
        out_dir=out_dir,
        ratio=resolved["ratio"],
        seeds=tuple(resolved["seeds"]),
        ratios=tuple(resolved["ratios"]) if resolved["ratios"] else None,
        tau1=resolved["tau1"],
        tau2=resolved["tau2"],
        k_fraction=resolved["k_fraction"],
        aggregation=resolved["aggregation"],
        text_aug=resolved["text_aug"],
        struct_aug=resolved["struct_aug"],
        struct_learn=resolved["struct_learn"],
        model=resolved["model"],
        char_budget=resolved["char_budget"],
        figures=resolved["figures"],
        llm=llm,
        embedder=embedder,
        train=train,
        pagerank_damping=resolved["pagerank_damping"],
        pagerank_tol=resolved["pagerank_tol"],
        pagerank_max_iter=resolved["pagerank_max_iter"],
        raw=resolved,
    )


def variant_config(cfg: PipelineConfig, **changes) -> PipelineConfig:
    """Derived config with a few fields replaced (raw echo kept in sync)."""
    new_raw = dict(cfg.raw)
    for key, value in changes.items():
        if key in new_raw:
            new_raw[key] = value
    return replace(cfg, raw=new_raw, **changes)
