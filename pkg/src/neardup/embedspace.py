"""Dense-embedding similarity over precomputed unit vectors.

Search is exact blocked matrix multiplication, never approximate: the
corpus sizes this targets fit in memory, and exact search keeps results
reproducible across runs and thread counts. Two modes: direct cosine
range search, and kNN-then-filter where each document's top-k neighbors
are filtered to the similarity threshold (with a truncation report for
documents whose k-th neighbor still clears the threshold).
"""

from __future__ import annotations

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .overlap import ScoredPair

logger = logging.getLogger(__name__)

_MAGIC = b"EMBD"
_VERSION = 1

# Rows are accepted and renormalized when |norm - 1| <= REJECT_BAND;
# deviations beyond WARN_BAND are logged because they suggest the
# producer skipped normalization.
NORM_WARN_BAND = 1e-3
NORM_REJECT_BAND = 1e-2

MODES = ("exact_range", "knn_then_filter")

# Pairs within this distance of the threshold are kept, so borderline
# scores do not flicker across platforms.
THRESHOLD_EPSILON = 1e-6


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Unit-normalized float32 vectors keyed by document id."""

    ids: tuple
    vectors: np.ndarray
    model_tag: str = ""

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def row_of(self, doc_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(doc_id)]


@dataclass(frozen=True)
class RangeSearchConfig:
    similarity_threshold: float = 0.92
    knn_k: int = 900
    mode: str = "knn_then_filter"

    def __post_init__(self):
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise DataError(
                f"similarity threshold must be in [-1, 1], got {self.similarity_threshold}"
            )
        if self.mode not in MODES:
            raise DataError(f"unknown search mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "knn_then_filter" and self.knn_k < 1:
            raise DataError(f"knn_k must be >= 1, got {self.knn_k}")


@dataclass(frozen=True)
class TruncationReport:
    """Docs whose true range neighborhood may exceed the kNN budget."""

    count: int
    doc_ids: tuple


def _normalized(ids, vectors: np.ndarray, model_tag: str) -> EmbeddingMatrix:
    ids = tuple(ids)
    if len(set(ids)) != len(ids):
        seen = set()
        dup = next(i for i in ids if i in seen or seen.add(i))
        raise DataError(f"duplicate embedding id {dup!r}")
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise DataError(
            f"expected {len(ids)} x d vector matrix, got shape {vectors.shape}"
        )
    finite = np.isfinite(vectors).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise DataError(f"non-finite embedding values in row {ids[bad]!r}")
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    off = np.abs(norms - 1.0)
    rejected = off > NORM_REJECT_BAND
    if rejected.any():
        bad = int(np.flatnonzero(rejected)[0])
        raise DataError(
            f"row {ids[bad]!r} has L2 norm {norms[bad]:.6f}, "
            f"outside the 1 +/- {NORM_REJECT_BAND} acceptance band"
        )
    warn = int((off > NORM_WARN_BAND).sum())
    if warn:
        logger.warning("renormalizing %d embedding rows with |norm - 1| > %g", warn, NORM_WARN_BAND)
    vectors = (vectors / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(ids=ids, vectors=vectors, model_tag=model_tag)


def embedding_matrix(ids, vectors, model_tag: str = "") -> EmbeddingMatrix:
    """Validate, renormalize, and wrap raw vectors."""
    return _normalized(ids, vectors, model_tag)


def write_embeddings(m: EmbeddingMatrix, path) -> None:
    """Binary layout: header (magic, version u32, n u64, d u32, tagged
    UTF-8 model tag), the ids, then the float32 rows, all little-endian.
    """
    with open(path, "wb") as fh:
        tag = m.model_tag.encode("utf-8")
        if len(tag) > 0xFFFF:
            raise DataError("model tag longer than 65535 UTF-8 bytes")
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQI", _VERSION, m.n, m.dim))
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        for doc_id in m.ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataError(f"id longer than 65535 UTF-8 bytes: {doc_id[:40]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(m.vectors, dtype="<f4").tobytes())


def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"{path}: not an embedding file (magic {magic!r})")
        header = fh.read(16)
        if len(header) != 16:
            raise DataError(f"{path}: truncated header")
        version, n, dim = struct.unpack("<IQI", header)
        if version != _VERSION:
            raise DataError(f"{path}: unsupported embedding format version {version}")
        (tag_len,) = struct.unpack("<H", fh.read(2))
        model_tag = fh.read(tag_len).decode("utf-8")
        ids = []
        for _ in range(n):
            raw = fh.read(2)
            if len(raw) != 2:
                raise DataError(f"{path}: truncated id table")
            (id_len,) = struct.unpack("<H", raw)
            ids.append(fh.read(id_len).decode("utf-8"))
        payload = fh.read(n * dim * 4)
        if len(payload) != n * dim * 4:
            raise DataError(
                f"{path}: expected {n}x{dim} float32 payload, file is short"
            )
        vectors = np.frombuffer(payload, dtype="<f4").reshape(n, dim)
    return _normalized(ids, vectors, model_tag)


def _block_ranges(n: int, block: int):
    for start in range(0, n, block):
        yield start, min(start + block, n)


def _exact_block(v64: np.ndarray, start: int, stop: int, keep: float):
    """Upper-triangle hits with cosine >= keep for query rows [start, stop)."""
    sims = v64[start:stop] @ v64.T
    rows, cols = np.nonzero(sims >= keep)
    rows = rows + start
    mask = cols > rows
    return rows[mask], cols[mask], sims[rows[mask] - start, cols[mask]]


def _knn_block(v64: np.ndarray, start: int, stop: int, k: int, keep: float):
    """Per-row top-k hits above keep, plus which rows hit the k budget."""
    sims = v64[start:stop] @ v64.T
    n = v64.shape[0]
    span = stop - start
    sims[np.arange(span), np.arange(start, stop)] = -np.inf  # mask self
    kk = min(k, n - 1)
    if kk <= 0:
        return [], np.zeros(span, dtype=bool)
    if kk < n - 1:
        top = np.argpartition(sims, -kk, axis=1)[:, -kk:]
    else:
        top = np.broadcast_to(np.arange(n), (span, n))
    top_sims = np.take_along_axis(sims, top, axis=1)
    hits = []
    for r in range(span):
        cols = top[r][top_sims[r] >= keep]
        hits.append((r + start, cols, sims[r][cols]))
    # A row is truncation-suspect when its k-th neighbor still clears
    # the threshold; rows with fewer than k neighbors cannot be.
    if k <= n - 1:
        kth = np.partition(sims, -k, axis=1)[:, -k]
        truncated = kth >= keep
    else:
        truncated = np.zeros(span, dtype=bool)
    return hits, truncated


def range_search(m: EmbeddingMatrix, cfg: RangeSearchConfig, block_size: int = 1024, threads: int = 1):
    """All unordered pairs with cosine >= threshold (inclusive band).

    exact_range scans all pairs; knn_then_filter restricts each doc to
    its exact top-knn_k neighbors first, so it can only miss pairs when
    a doc has more than knn_k in-range neighbors (see
    knn_truncation_report). Output is sorted by (id_a, id_b) and does
    not depend on block size or thread count.
    """
    keep = cfg.similarity_threshold - THRESHOLD_EPSILON
    v64 = m.vectors.astype(np.float64)
    blocks = list(_block_ranges(m.n, block_size))

    if cfg.mode == "exact_range":
        def work(b):
            return _exact_block(v64, b[0], b[1], keep)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, blocks))
        else:
            parts = [work(b) for b in blocks]
        pairs = []
        for rows, cols, sims in parts:
            for i, j, s in zip(rows.tolist(), cols.tolist(), sims.tolist()):
                a, b = m.ids[i], m.ids[j]
                if b < a:  # block order is input order, pair ids are not
                    a, b = b, a
                pairs.append(ScoredPair(a, b, s, "cosine"))
    else:
        def work(b):
            return _knn_block(v64, b[0], b[1], cfg.knn_k, keep)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, blocks))
        else:
            parts = [work(b) for b in blocks]
        seen = {}
        for hits, _ in parts:
            for row, cols, sims in hits:
                for j, s in zip(cols.tolist(), sims.tolist()):
                    key = (row, j) if row < j else (j, row)
                    if key not in seen:
                        seen[key] = s
        pairs = []
        for (i, j), s in seen.items():
            a, b = m.ids[i], m.ids[j]
            if b < a:
                a, b = b, a
            pairs.append(ScoredPair(a, b, s, "cosine"))
    pairs.sort(key=lambda p: (p.id_a, p.id_b))
    return pairs


def knn_truncation_report(m: EmbeddingMatrix, cfg: RangeSearchConfig, block_size: int = 1024, threads: int = 1) -> TruncationReport:
    """Docs whose k-th nearest neighbor still clears the threshold.

    For such docs the kNN budget may have cut off true range neighbors,
    so knn_then_filter is no longer guaranteed equal to exact_range.
    """
    if cfg.mode != "knn_then_filter":
        raise DataError("truncation report applies to knn_then_filter mode only")
    keep = cfg.similarity_threshold - THRESHOLD_EPSILON
    v64 = m.vectors.astype(np.float64)
    flagged = []
    blocks = list(_block_ranges(m.n, block_size))

    def work(b):
        _, truncated = _knn_block(v64, b[0], b[1], cfg.knn_k, keep)
        return b[0], truncated

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    for start, truncated in parts:
        for r in np.flatnonzero(truncated):
            flagged.append(m.ids[start + int(r)])
    flagged.sort()
    return TruncationReport(count=len(flagged), doc_ids=tuple(flagged))
