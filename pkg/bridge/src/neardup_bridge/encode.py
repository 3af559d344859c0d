"""Batch document encoding with a pretrained sentence encoder.

Reads the corpus JSONL format (one object per line with ``id`` and
``text`` fields), encodes every document with a sentence-transformers
model, and writes the EMBD binary embedding format: magic ``EMBD``,
header ``<IQI`` (version, n, dim), a u16-length-prefixed UTF-8 model
tag, n u16-length-prefixed UTF-8 ids, then the n*dim float32
little-endian payload. Vectors are unit-normalized so downstream
cosine range search can treat dot products as similarities.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"EMBD"
VERSION = 1


class BridgeUsageError(ValueError):
    """Bad configuration or arguments."""


class BridgeDataError(ValueError):
    """Malformed corpus content."""


@dataclass(frozen=True)
class BridgeConfig:
    """Encoder settings.

    ``model`` is a sentence-transformers model name or local path; the
    same string is recorded as the embedding file's model tag.
    ``max_tokens`` caps the encoder input length (longer documents are
    truncated). ``normalize`` should stay on: the downstream loader
    expects unit rows and warns about anything else.
    """

    model: str
    max_tokens: int = 512
    batch_size: int = 32
    normalize: bool = True

    def __post_init__(self):
        if not self.model:
            raise BridgeUsageError("model tag must be a non-empty string")
        if self.max_tokens < 1:
            raise BridgeUsageError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.batch_size < 1:
            raise BridgeUsageError(f"batch_size must be >= 1, got {self.batch_size}")


def read_corpus(path) -> "list[tuple[str, str]]":
    """(id, text) pairs in file order; blank lines are skipped."""
    out = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeDataError(f"{path}:{lineno}: not valid JSON: {exc}") from None
            if not isinstance(row, dict) or "id" not in row or "text" not in row:
                raise BridgeDataError(f"{path}:{lineno}: expected an object with id and text")
            doc_id, text = row["id"], row["text"]
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise BridgeDataError(f"{path}:{lineno}: id and text must be strings")
            if doc_id in seen:
                raise BridgeDataError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            out.append((doc_id, text))
    return out


def write_embedding_file(path, ids, vectors, model_tag: str) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise BridgeDataError(
            f"need one vector per id: {vectors.shape} vectors for {len(ids)} ids"
        )
    tag = model_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise BridgeDataError("model tag longer than 65535 UTF-8 bytes")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQI", VERSION, len(ids), vectors.shape[1]))
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        for doc_id in ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise BridgeDataError(f"id longer than 65535 UTF-8 bytes: {doc_id[:40]!r}")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(vectors.tobytes())


def encode_texts(texts, cfg: BridgeConfig) -> np.ndarray:
    """Encode a list of strings to a float32 (n, d) matrix."""
    # imported lazily so config/corpus errors surface without torch
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(cfg.model)
    model.max_seq_length = cfg.max_tokens
    vectors = model.encode(
        list(texts),
        batch_size=cfg.batch_size,
        convert_to_numpy=True,
        show_progress_bar=False,
    ).astype(np.float32, copy=False)
    if cfg.normalize:
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True)
        if np.any(norms == 0.0):
            row = int(np.nonzero(norms.ravel() == 0.0)[0][0])
            raise BridgeDataError(f"encoder produced a zero vector at row {row}")
        vectors = (vectors.astype(np.float64) / norms).astype(np.float32)
    return vectors


def encode_corpus(corpus_path, out_path, cfg: BridgeConfig) -> "tuple[int, int]":
    """Encode every document and write the embedding file.

    Returns (n_documents, dim). Documents whose text is empty or
    whitespace-only are rejected by id before the model is loaded.
    """
    corpus = read_corpus(corpus_path)
    if not corpus:
        raise BridgeDataError(f"{corpus_path}: corpus is empty")
    for doc_id, text in corpus:
        if not text.strip():
            raise BridgeDataError(f"document {doc_id!r} has empty text")
    ids = [doc_id for doc_id, _ in corpus]
    vectors = encode_texts([text for _, text in corpus], cfg)
    write_embedding_file(out_path, ids, vectors, model_tag=cfg.model)
    return len(ids), int(vectors.shape[1])
