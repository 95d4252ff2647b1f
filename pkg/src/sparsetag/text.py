"""Shared lexical helpers: tokenization and seeded substreams.

Tokenization is the single definition used by the offline completion
provider and the hashing embedder, so their outputs stay mutually
consistent.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

__all__ = ["tokenize", "substream_rng"]

# alphanumeric runs; \w minus underscore keeps unicode letters/digits
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop empty tokens."""
    return _TOKEN_RE.findall(text.lower())


def substream_rng(seed: int, name: str) -> np.random.Generator:
    """Independent, named child stream of `seed`.

    Different names give statistically independent streams, so drawing
    from one never perturbs another.
    """
    tag = int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "big")
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))
