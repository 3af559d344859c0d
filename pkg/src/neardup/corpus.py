"""Document model, corpus I/O, text normalization and word n-gram shingling.

The corpus file format is UTF-8 JSON lines, one object per line with
required ``id`` and ``text`` fields and optional ``date``, ``source``
and ``gold_cluster`` string fields.
"""

from __future__ import annotations

import functools
import json
import re
import sys
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .hashing import combine_windows, hash_token

DEFAULT_SEED = 0

# Sentence punctuation that OCR tends to reproduce consistently; kept by
# the default normalization so shingles survive light noise.
KEPT_PUNCTUATION = frozenset({".", ",", "'", '"', "-", "?"})

_WS_RE = re.compile(r"\s+")


@functools.lru_cache(maxsize=1)
def default_strip_set() -> frozenset:
    """All Unicode punctuation except :data:`KEPT_PUNCTUATION`."""
    strip = set()
    for cp in range(sys.maxunicode + 1):
        ch = chr(cp)
        if unicodedata.category(ch).startswith("P") and ch not in KEPT_PUNCTUATION:
            strip.add(ch)
    return frozenset(strip)


@functools.lru_cache(maxsize=8)
def _translation_table(strip_set: frozenset) -> dict:
    return {ord(ch): None for ch in strip_set}


@dataclass(frozen=True)
class NormalizationConfig:
    """How raw text is canonicalized before tokenization.

    Applying :func:`normalize` twice with the same config equals applying
    it once.
    """

    lowercase: bool = True
    punctuation_strip_set: frozenset = field(default_factory=default_strip_set)
    collapse_whitespace: bool = True


@functools.lru_cache(maxsize=1)
def default_normalization() -> NormalizationConfig:
    return NormalizationConfig()


@dataclass(frozen=True)
class Document:
    """One text unit with identity and optional ground-truth cluster label."""

    id: str
    text: str
    date: "str | None" = None
    source: "str | None" = None
    gold_cluster: "str | None" = None

    def __post_init__(self):
        if not self.id:
            raise DataError("document id must be nonempty")


@dataclass(frozen=True)
class ShingleSet:
    """Set of 64-bit hashes of a document's word n-gram windows.

    Hashes are stored as a sorted unique uint64 array (``hashes``) so the
    hot paths stay vectorized; the ``shingles`` property materializes the
    plain frozenset view on demand.
    """

    doc_id: str
    n: int
    hashes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.hashes.shape[0])

    @property
    def shingles(self) -> frozenset:
        return frozenset(int(h) for h in self.hashes)

    def __len__(self) -> int:
        return self.count


def normalize(text: str, cfg: "NormalizationConfig | None" = None) -> str:
    """Delete configured codepoints, casefold, collapse whitespace, trim."""
    if cfg is None:
        cfg = default_normalization()
    out = text.translate(_translation_table(cfg.punctuation_strip_set))
    if cfg.lowercase:
        out = out.casefold()
    if cfg.collapse_whitespace:
        out = _WS_RE.sub(" ", out)
    return out.strip()


def tokenize(text: str, cfg: "NormalizationConfig | None" = None) -> list:
    """Whitespace word tokens of the normalized text."""
    return normalize(text, cfg).split()


class _TokenHasher:
    """Caches per-token hashes; vocabularies are far smaller than corpora."""

    def __init__(self, seed: int):
        self.seed = seed
        self._cache: dict = {}

    def hash_tokens(self, tokens: list) -> np.ndarray:
        cache = self._cache
        seed = self.seed
        out = np.empty(len(tokens), dtype=np.uint64)
        for i, tok in enumerate(tokens):
            h = cache.get(tok)
            if h is None:
                h = hash_token(tok, seed)
                cache[tok] = h
            out[i] = h
        return out


def shingle(
    doc: Document,
    n: int,
    cfg: "NormalizationConfig | None" = None,
    seed: int = DEFAULT_SEED,
    _hasher: "_TokenHasher | None" = None,
) -> ShingleSet:
    """Hash every consecutive n-word window of the normalized text.

    Windows are joined conceptually by single spaces and hashed to 64
    bits; the result is a set, so repeated windows collapse. Documents
    with fewer than ``n`` words yield an empty set and become singletons
    downstream.
    """
    if n < 1:
        raise DataError(f"shingle order must be >= 1, got {n}")
    tokens = tokenize(doc.text, cfg)
    hasher = _hasher if _hasher is not None and _hasher.seed == seed else _TokenHasher(seed)
    token_hashes = hasher.hash_tokens(tokens)
    windows = combine_windows(token_hashes, n, seed)
    return ShingleSet(doc_id=doc.id, n=n, hashes=np.unique(windows))


def shingle_corpus(
    docs: list,
    n: int,
    cfg: "NormalizationConfig | None" = None,
    seed: int = DEFAULT_SEED,
) -> list:
    """Shingle a whole corpus with a shared token-hash cache."""
    hasher = _TokenHasher(seed)
    return [shingle(doc, n, cfg, seed, _hasher=hasher) for doc in docs]


_FIELD_ORDER = ("id", "text", "date", "source", "gold_cluster")


def load_corpus(path) -> list:
    """Read a JSON-lines corpus file, rejecting duplicate ids."""
    docs = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON on line {lineno}: {exc.msg}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise DataError(f"{path}: line {lineno} must be an object with 'id' and 'text'")
            doc_id = obj["id"]
            if not isinstance(doc_id, str) or not isinstance(obj["text"], str):
                raise DataError(f"{path}: line {lineno}: 'id' and 'text' must be strings")
            if doc_id in seen:
                raise DataError(f"{path}: duplicate document id {doc_id!r} on line {lineno}")
            seen.add(doc_id)
            docs.append(
                Document(
                    id=doc_id,
                    text=obj["text"],
                    date=obj.get("date"),
                    source=obj.get("source"),
                    gold_cluster=obj.get("gold_cluster"),
                )
            )
    return docs


def write_corpus(docs: list, path) -> None:
    """Write documents in canonical JSON-lines form (fixed key order)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            obj = {}
            for key in _FIELD_ORDER:
                value = getattr(doc, key)
                if value is not None:
                    obj[key] = value
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def gold_clustering_labels(docs: list) -> dict:
    """Map doc id -> gold cluster label; unlabeled docs become singletons."""
    labels = {}
    for doc in docs:
        labels[doc.id] = doc.gold_cluster if doc.gold_cluster is not None else f"_singleton:{doc.id}"
    return labels
