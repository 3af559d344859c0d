"""Deterministic character-n-gram hashing vectorizer.

A model-free embedding stand-in for tests and fixtures: documents are
mapped to unit vectors from signed hashed character n-gram counts, so
near-duplicate texts land near each other in cosine space without any
trained encoder. Not a retrieval-quality embedding; it exists so the
dense-vector code paths can be exercised hermetically.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, NormalizationConfig, default_normalization, normalize
from .embedspace import EmbeddingMatrix, embedding_matrix
from .errors import DataError
from .hashing import combine_windows, mix64, mix64_array

_CHAR_DOMAIN = 0x43474E56  # "CGNV"


def _char_window_hashes(text: str, n: int, seed: int) -> np.ndarray:
    codes = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32).astype(np.uint64)
    salted = mix64_array(codes ^ np.uint64(mix64((seed ^ _CHAR_DOMAIN) & 0xFFFFFFFFFFFFFFFF)))
    return combine_windows(salted, n, seed)


def char_ngram_vectors(
    docs: Iterable[Document],
    dim: int = 256,
    ngram_orders: Sequence[int] = (3, 4, 5),
    seed: int = 0,
    cfg: NormalizationConfig = None,
    model_tag: str = "char-ngram-hash",
) -> EmbeddingMatrix:
    """Unit-normalized signed feature-hashing vectors, corpus order.

    Each character n-gram hash picks a bucket and a sign bit; counts
    accumulate and rows are L2-normalized. Documents that normalize to
    the empty string cannot produce a unit vector and are rejected.
    """
    if dim < 2:
        raise DataError(f"dim must be >= 2, got {dim}")
    cfg = cfg if cfg is not None else default_normalization()
    docs = list(docs)
    vectors = np.zeros((len(docs), dim), dtype=np.float64)
    dim64 = np.uint64(dim)
    one = np.uint64(1)
    for row, doc in enumerate(docs):
        text = normalize(doc.text, cfg)
        if not text:
            raise DataError(f"document {doc.id!r} normalizes to empty text")
        for n in ngram_orders:
            hashes = _char_window_hashes(text, n, seed)
            if hashes.size == 0:
                continue
            buckets = ((hashes >> one) % dim64).astype(np.int64)
            signs = np.where((hashes & one).astype(bool), 1.0, -1.0)
            np.add.at(vectors[row], buckets, signs)
        norm = np.linalg.norm(vectors[row])
        if norm == 0.0:
            # All signs cancelled; deterministic fallback bucket keeps
            # the row usable.
            vectors[row][mix64(seed) % dim] = 1.0
            norm = 1.0
        vectors[row] /= norm
    return embedding_matrix(
        [d.id for d in docs], vectors.astype(np.float32), model_tag=model_tag
    )
