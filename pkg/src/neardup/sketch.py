"""MinHash signatures and both LSH variants (collision count and banded).

Collision-count LSH thresholds the number of agreeing signature
coordinates; banded LSH re-hashes groups of coordinates and emits pairs
sharing any band bucket, with emission probability following the S-curve
``1 - (1 - s**r)**b`` at Jaccard similarity ``s``.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .corpus import ShingleSet
from .errors import DataError
from .hashing import band_hashes, minhash_salts, mix64_array
from .overlap import ScoredPair

EMPTY_SENTINEL = 0xFFFFFFFFFFFFFFFF

_MAGIC = b"MHSG"
_VERSION = 1


@dataclass(frozen=True)
class MinHashSignature:
    """Per-coordinate minima of independently hashed shingle values."""

    doc_id: str
    k: int
    minima: np.ndarray
    seed: int

    @property
    def is_empty(self) -> bool:
        """True for signatures of empty shingle sets (all sentinel)."""
        return bool(self.minima[0] == np.uint64(EMPTY_SENTINEL)) if self.k else True


@dataclass(frozen=True)
class BandingConfig:
    bands: int = 15
    rows: int = 2

    def validate(self, k: int) -> None:
        if self.bands < 1 or self.rows < 1:
            raise DataError(f"bands and rows must be >= 1, got b={self.bands} r={self.rows}")
        if self.bands * self.rows > k:
            raise DataError(
                f"banding needs bands*rows <= k, got {self.bands}*{self.rows} > {k}"
            )


def minhash(s: ShingleSet, k: int, seed: int) -> MinHashSignature:
    """k-minima sketch; coordinate i is min over shingles of mix64(x ^ salt_i)."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    salts = minhash_salts(seed, k)
    if s.count == 0:
        minima = np.full(k, EMPTY_SENTINEL, dtype=np.uint64)
    else:
        hashed = mix64_array(s.hashes[:, None] ^ salts[None, :])
        minima = hashed.min(axis=0)
    return MinHashSignature(doc_id=s.doc_id, k=k, minima=minima, seed=seed)


def minhash_corpus(shingle_sets: Iterable[ShingleSet], k: int, seed: int) -> list:
    return [minhash(s, k, seed) for s in shingle_sets]


def collision_fraction(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of agreeing coordinates; estimates Jaccard similarity.

    Sentinel coordinates (from empty shingle sets) never count as
    agreement, so empty documents stay singletons.
    """
    if a.k != b.k:
        raise DataError(f"signature widths differ: {a.k} vs {b.k}")
    agree = np.count_nonzero(
        (a.minima == b.minima) & (a.minima != np.uint64(EMPTY_SENTINEL))
    )
    return agree / a.k


def _check_signatures(signatures: list) -> int:
    if not signatures:
        return 0
    k = signatures[0].k
    seed = signatures[0].seed
    seen = set()
    for sig in signatures:
        if sig.k != k or sig.seed != seed:
            raise DataError("all signatures must share one (k, seed)")
        if sig.doc_id in seen:
            raise DataError(f"duplicate document id {sig.doc_id!r} in signature list")
        seen.add(sig.doc_id)
    return k


def collision_lsh(signatures: list, min_collisions: int) -> list:
    """Pairs agreeing on >= min_collisions coordinates, scored by fraction.

    Equivalent to brute-force pairwise signature comparison: documents
    are bucketed per coordinate value, so any pair agreeing anywhere is
    counted exactly as many times as it agrees.
    """
    k = _check_signatures(signatures)
    if not signatures:
        return []
    if not 1 <= min_collisions <= k:
        raise DataError(f"min_collisions must be in [1, {k}], got {min_collisions}")
    counts: Counter = Counter()
    for coord in range(k):
        buckets: dict = {}
        for pos, sig in enumerate(signatures):
            if sig.is_empty:
                continue
            value = int(sig.minima[coord])
            buckets.setdefault(value, []).append(pos)
        for lst in buckets.values():
            m = len(lst)
            if m < 2:
                continue
            for i in range(m - 1):
                a = lst[i]
                for j in range(i + 1, m):
                    counts[(a, lst[j])] += 1
    out = []
    for (i, j), c in counts.items():
        if c >= min_collisions:
            a, b = signatures[i].doc_id, signatures[j].doc_id
            if b < a:  # bucket positions follow input order, pair ids do not
                a, b = b, a
            out.append(ScoredPair(a, b, c / k, "collisions_fraction"))
    out.sort(key=lambda e: (e.id_a, e.id_b))
    return out


def banded_lsh(signatures: list, cfg: BandingConfig = BandingConfig()) -> list:
    """Pairs sharing at least one band bucket, scored by shared-band fraction.

    The first bands*rows coordinates of each signature are split into
    bands, each band re-hashed; two documents collide when any band hash
    matches. The score is diagnostic only and not thresholded by default.
    """
    k = _check_signatures(signatures)
    if not signatures:
        return []
    cfg.validate(k)
    live = [pos for pos, sig in enumerate(signatures) if not sig.is_empty]
    if not live:
        return []
    minima = np.stack([signatures[pos].minima for pos in live])
    table = band_hashes(minima, cfg.bands, cfg.rows, signatures[live[0]].seed)
    counts: Counter = Counter()
    for b in range(cfg.bands):
        buckets: dict = {}
        col = table[:, b].tolist()
        for row, h in enumerate(col):
            buckets.setdefault(h, []).append(row)
        for lst in buckets.values():
            m = len(lst)
            if m < 2:
                continue
            for i in range(m - 1):
                a = lst[i]
                for j in range(i + 1, m):
                    counts[(a, lst[j])] += 1
    out = []
    for (i, j), c in counts.items():
        a, b = signatures[live[i]].doc_id, signatures[live[j]].doc_id
        if b < a:  # bucket positions follow input order, pair ids do not
            a, b = b, a
        out.append(ScoredPair(a, b, c / cfg.bands, "collisions_fraction"))
    out.sort(key=lambda e: (e.id_a, e.id_b))
    return out


def s_curve(s: float, cfg: BandingConfig = BandingConfig()) -> float:
    """Probability a pair at Jaccard ``s`` shares at least one band: 1-(1-s^r)^b."""
    if not 0.0 <= s <= 1.0:
        raise DataError(f"similarity must be in [0, 1], got {s}")
    return 1.0 - (1.0 - s**cfg.rows) ** cfg.bands


def write_signatures(signatures: list, path) -> None:
    """Binary signature file (little-endian, magic ``MHSG``)."""
    k = _check_signatures(signatures)
    seed = signatures[0].seed if signatures else 0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIQQ", _VERSION, k, seed, len(signatures)))
        for sig in signatures:
            encoded = sig.doc_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise DataError(f"doc id too long to serialize: {sig.doc_id[:32]!r}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(sig.minima.astype("<u8").tobytes())


def load_signatures(path) -> list:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"{path}: not a signature file (bad magic {magic!r})")
        version, k, seed, count = struct.unpack("<IIQQ", fh.read(24))
        if version != _VERSION:
            raise DataError(f"{path}: unsupported signature file version {version}")
        signatures = []
        for _ in range(count):
            (id_len,) = struct.unpack("<H", fh.read(2))
            doc_id = fh.read(id_len).decode("utf-8")
            raw = fh.read(8 * k)
            if len(raw) != 8 * k:
                raise DataError(f"{path}: truncated signature payload for {doc_id!r}")
            minima = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
            signatures.append(MinHashSignature(doc_id=doc_id, k=k, minima=minima, seed=seed))
    return signatures
