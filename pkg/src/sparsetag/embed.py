"""Node text embedding: remote embedding client and offline hashing encoder.

Both providers produce an ``EmbeddingMatrix`` whose rows are unit L2
norm, with the convention that an empty text embeds to the exact zero
row. The offline encoder is signed feature hashing with sublinear term
frequency, fully deterministic across processes.
"""

from __future__ import annotations

import hashlib
import math
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .errors import ConfigError, DatasetError, TransportError
from .text import tokenize

__all__ = [
    "EmbeddingMatrix",
    "EmbeddingProviderConfig",
    "offline_hash_embed",
    "embed",
    "save_embeddings",
    "load_embeddings",
]

_MAGIC = b"TAGEMB01"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N x d node representations; rows are unit norm or exactly zero."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError(f"embedding matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("embedding matrix contains non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def check_norms(self, atol: float = 1e-9) -> None:
        norms = self.row_norms()
        bad = ~(np.isclose(norms, 1.0, atol=atol) | (norms == 0.0))
        if np.any(bad):
            raise DatasetError(f"rows {np.flatnonzero(bad)[:5].tolist()} violate the norm contract")


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "offline"  # "offline" | "remote"
    endpoint: str = ""
    model: str = "hash-v1"
    dim: int = 256
    max_retries: int = 2
    timeout: float = 60.0
    batch_size: int = 128
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.kind not in ("offline", "remote"):
            raise ConfigError(f"unknown embedding provider kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError("remote embedding provider requires an endpoint URL")
        if self.kind == "offline" and self.dim < 2:
            raise ConfigError("offline embedding dim must be >= 2")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=b"bucket").digest()
    return int.from_bytes(digest, "big") % dim


def _sign(token: str) -> float:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=1, person=b"sign").digest()
    return 1.0 if digest[0] & 1 else -1.0


def offline_hash_embed(text: str, dim: int) -> np.ndarray:
    """Signed feature hashing with 1+log(tf) weights, L2-normalized."""
    if dim < 2:
        raise ConfigError("dim must be >= 2")
    vec = np.zeros(dim, dtype=np.float64)
    counts: dict[str, int] = {}
    for tok in tokenize(text):
        counts[tok] = counts.get(tok, 0) + 1
    for tok, tf in counts.items():
        vec[_bucket(tok, dim)] += _sign(tok) * (1.0 + math.log(tf))
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def _embed_remote(texts: Sequence[str], cfg: EmbeddingProviderConfig) -> np.ndarray:
    url = cfg.endpoint.rstrip("/") + "/v1/embeddings"
    nonempty = [(i, t) for i, t in enumerate(texts) if t]
    vectors: dict[int, list[float]] = {}
    dim: int | None = None

    for start in range(0, len(nonempty), cfg.batch_size):
        batch = nonempty[start : start + cfg.batch_size]
        body = {"model": cfg.model, "input": [t for _, t in batch]}
        attempts = cfg.max_retries + 1
        last_error = "no attempt made"
        data = None
        for attempt in range(attempts):
            if attempt > 0 and cfg.retry_backoff > 0:
                time.sleep(cfg.retry_backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(url, json=body, timeout=cfg.timeout)
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
                continue
            if resp.status_code != 200:
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                continue
            try:
                data = resp.json()["data"]
                break
            except (ValueError, KeyError, TypeError) as exc:
                last_error = f"malformed response body: {exc}"
                continue
        if data is None:
            raise TransportError(f"embedding request failed after {attempts} attempts ({last_error})")
        if len(data) != len(batch):
            raise TransportError(f"embedding response has {len(data)} vectors for {len(batch)} inputs")
        for (idx, _), item in zip(batch, data):
            vec = item["embedding"]
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise TransportError(
                    f"dimension mismatch across batches: got {len(vec)}, expected {dim}"
                )
            vectors[idx] = vec

    if dim is None:
        dim = cfg.dim
    out = np.zeros((len(texts), dim), dtype=np.float64)
    for idx, vec in vectors.items():
        out[idx] = vec
    return out


def embed(texts: Sequence[str], provider: EmbeddingProviderConfig) -> EmbeddingMatrix:
    """Embed one text per node; row i is the L2-normalized embedding of text i."""
    if provider.kind == "offline":
        values = np.zeros((len(texts), provider.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            if text:
                values[i] = offline_hash_embed(text, provider.dim)
    else:
        values = _embed_remote(texts, provider)
        norms = np.linalg.norm(values, axis=1, keepdims=True)
        np.divide(values, norms, out=values, where=norms > 0)
    return EmbeddingMatrix(values)


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write magic + (N, d, float width) header + row-major float64 payload.

    A sidecar ``<path>.sha256`` holds the checksum of the full file.
    """
    path = Path(path)
    values = np.ascontiguousarray(matrix.values, dtype=np.float64)
    header = _MAGIC + struct.pack("<QQB", values.shape[0], values.shape[1], 8)
    blob = header + values.tobytes(order="C")
    path.write_bytes(blob)
    digest = hashlib.sha256(blob).hexdigest()
    Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n", encoding="utf-8")


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    blob = path.read_bytes()
    sidecar = Path(str(path) + ".sha256")
    if sidecar.exists():
        recorded = sidecar.read_text(encoding="utf-8").split()[0]
        actual = hashlib.sha256(blob).hexdigest()
        if recorded != actual:
            raise DatasetError(f"embedding file {path} fails checksum verification")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise DatasetError(f"{path} is not an embedding matrix file (bad magic)")
    offset = len(_MAGIC)
    rows, cols, width = struct.unpack_from("<QQB", blob, offset)
    offset += struct.calcsize("<QQB")
    if width != 8:
        raise DatasetError(f"unsupported float width {width}")
    expected = rows * cols * width
    payload = blob[offset:]
    if len(payload) != expected:
        raise DatasetError(f"{path}: payload size {len(payload)} != expected {expected}")
    values = np.frombuffer(payload, dtype=np.float64).reshape(rows, cols).copy()
    return EmbeddingMatrix(values)
