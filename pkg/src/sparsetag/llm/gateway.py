"""Completion gateway: provider dispatch, disk cache, retries, audit log.

The cache is content-addressed (one file per key, atomic
write-then-rename) so concurrent writers of the same key are idempotent
and a second identical call is served byte-identical with no network
traffic. Remote calls speak the OpenAI-compatible chat-completions
protocol.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping

import requests

from ..errors import ConfigError, TransportError
from .offline import (
    offline_edge_score,
    offline_keywords,
    offline_soft_label,
    offline_summarize,
)
from .prompts import PromptKind, RenderedPrompt

__all__ = ["ProviderConfig", "CompletionGateway", "CallCounters"]

API_KEY_ENV_VARS = ("SPARSETAG_API_KEY", "OPENAI_API_KEY")


@dataclass(frozen=True)
class ProviderConfig:
    """Where completions come from and how the gateway behaves."""

    kind: str = "offline"  # "offline" | "remote"
    endpoint: str = ""
    model: str = "offline-v1"
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0
    cache_dir: str | None = None
    workers: int = 4
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.kind not in ("offline", "remote"):
            raise ConfigError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote":
            if not self.endpoint:
                raise ConfigError("remote provider requires an endpoint URL")
            if self.temperature != 0.0:
                raise ConfigError("remote temperature is fixed to 0 for reproducibility")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass
class CallCounters:
    fresh: int = 0
    cached: int = 0

    def snapshot(self) -> "CallCounters":
        return CallCounters(self.fresh, self.cached)

    def since(self, earlier: "CallCounters") -> "CallCounters":
        return CallCounters(self.fresh - earlier.fresh, self.cached - earlier.cached)

    @property
    def total(self) -> int:
        return self.fresh + self.cached


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class CompletionGateway:
    """Thread-safe completion front end with an on-disk response cache."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self.counters = CallCounters()
        self._lock = threading.Lock()
        self._cache_dir = Path(cfg.cache_dir) if cfg.cache_dir else None
        self._key_locks: dict[str, threading.Lock] = {}

    def _key_lock(self, key: str) -> threading.Lock:
        with self._lock:
            lock = self._key_locks.get(key)
            if lock is None:
                lock = self._key_locks[key] = threading.Lock()
            return lock

    # -- cache ---------------------------------------------------------

    def cache_key(self, prompt: RenderedPrompt) -> str:
        material = "\x00".join((self.cfg.kind, self.cfg.model, prompt.full_text))
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path | None:
        return self._cache_dir / key if self._cache_dir else None

    # -- public API ----------------------------------------------------

    def complete(self, prompt: RenderedPrompt, *, bypass_cache: bool = False) -> str:
        """Return the completion for ``prompt``, consulting the cache first.

        A per-key lock serializes concurrent misses of the same prompt,
        so exactly one caller computes and the rest hit the cache.
        """
        key = self.cache_key(prompt)
        path = self._cache_path(key)
        if path is None or bypass_cache:
            return self._compute(prompt, key, path)
        with self._key_lock(key):
            if path.exists():
                with self._lock:
                    self.counters.cached += 1
                return path.read_bytes().decode("utf-8")
            return self._compute(prompt, key, path)

    def _compute(self, prompt: RenderedPrompt, key: str, path: Path | None) -> str:
        if self.cfg.kind == "offline":
            completion = self._complete_offline(prompt)
        else:
            completion = self._complete_remote(prompt, key)
        if path is not None:
            _atomic_write_bytes(path, completion.encode("utf-8"))
        with self._lock:
            self.counters.fresh += 1
        return completion

    def complete_many(
        self, prompts: Mapping[Hashable, RenderedPrompt]
    ) -> dict[Hashable, str]:
        """Complete a batch through a bounded pool, reassembled by key."""
        if not prompts:
            return {}
        items = list(prompts.items())
        if self.cfg.workers == 1 or len(items) == 1:
            return {k: self.complete(p) for k, p in items}
        with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
            results = pool.map(lambda kv: (kv[0], self.complete(kv[1])), items)
            return dict(results)

    # -- providers -----------------------------------------------------

    def _complete_offline(self, prompt: RenderedPrompt) -> str:
        kind, payload = prompt.kind, prompt.payload
        if kind is PromptKind.SUMMARY:
            return offline_summarize(payload[0])
        if kind is PromptKind.KEYWORDS:
            return offline_keywords(payload[0])
        if kind is PromptKind.SOFT_LABEL:
            return offline_soft_label(payload[0], prompt.class_names)
        if kind is PromptKind.EDGE_JUDGE:
            return offline_edge_score(payload[0], payload[2])
        raise ConfigError(f"unhandled prompt kind {kind}")

    def _complete_remote(self, prompt: RenderedPrompt, key: str) -> str:
        url = self.cfg.endpoint.rstrip("/") + "/v1/chat/completions"
        body = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt.full_text}],
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        for var in API_KEY_ENV_VARS:
            api_key = os.environ.get(var)
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
                break

        attempts = self.cfg.max_retries + 1
        last_error = "no attempt made"
        for attempt in range(attempts):
            if attempt > 0 and self.cfg.retry_backoff > 0:
                time.sleep(self.cfg.retry_backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(url, json=body, headers=headers, timeout=self.cfg.timeout)
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
                continue
            if resp.status_code != 200:
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                continue
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                last_error = f"malformed response body: {exc}"
                continue
            if not isinstance(content, str):
                last_error = "non-string completion content"
                continue
            self._audit(key, prompt, content)
            return content
        raise TransportError(
            f"completion failed after {attempts} attempts ({last_error}); prompt hash {key}",
            request_hash=key,
        )

    def _audit(self, key: str, prompt: RenderedPrompt, completion: str) -> None:
        """Append (hash, timestamp, byte counts) for every fresh remote call."""
        if self._cache_dir is None:
            return
        record = {
            "hash": key,
            "timestamp": time.time(),
            "prompt_bytes": len(prompt.full_text.encode("utf-8")),
            "completion_bytes": len(completion.encode("utf-8")),
        }
        line = json.dumps(record, sort_keys=True) + "\n"
        self._cache_dir.mkdir(parents=True, exist_ok=True)
        with self._lock:
            with (self._cache_dir / "audit.log").open("a", encoding="utf-8") as fh:
                fh.write(line)
