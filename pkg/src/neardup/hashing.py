"""Deterministic 64-bit hashing used by shingling and MinHash.

Everything downstream (shingle sets, signatures, band buckets) must be
reproducible across runs, platforms and thread counts, so no salted
builtin ``hash()`` and no library whose output may change between
versions. The construction is:

* ``hash_bytes`` -- FNV-1a over the UTF-8 bytes with a seed-perturbed
  offset basis, passed through the splitmix64 finalizer for avalanche.
* ``combine`` -- an xor-multiply chain over already-hashed 64-bit words
  (used for word n-gram windows and LSH band buckets), finalized the
  same way.
* ``minhash_salts`` -- a splitmix64 stream keyed by the global seed;
  coordinate ``i`` of a MinHash signature uses ``mix64(x ^ salts[i])``.

Scalar and numpy implementations are kept side by side; tests assert
they agree bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF

_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3

# Domain-separation constants so the same seed drives independent
# hash uses (token hashing, window chains, MinHash salts, band buckets).
_TOKEN_DOMAIN = 0x7454E612A1D7F3C1
_WINDOW_DOMAIN = 0x2545F4914F6CDD1D
_MINHASH_DOMAIN = 0x9FB21C651E98DF25
_BAND_DOMAIN = 0xD6E8FEB86659FD93


def mix64(x: int) -> int:
    """splitmix64 finalizer: bijective avalanche over 64-bit ints."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a uint64 array."""
    z = (x + np.uint64(_GOLDEN)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


def hash_bytes(data: bytes, seed: int) -> int:
    """Seeded FNV-1a + splitmix64 finalizer over raw bytes."""
    h = _FNV_OFFSET ^ mix64(seed & MASK64)
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return mix64(h)


def hash_token(token: str, seed: int) -> int:
    """Hash one whitespace-free token under the token domain."""
    return hash_bytes(token.encode("utf-8"), seed ^ _TOKEN_DOMAIN)


def combine(words: "list[int] | tuple[int, ...]", seed: int, domain: int = _WINDOW_DOMAIN) -> int:
    """Chain already-hashed 64-bit words into one window hash."""
    acc = mix64((seed & MASK64) ^ domain)
    for w in words:
        acc = ((acc ^ w) * _FNV_PRIME) & MASK64
    return mix64(acc)


def combine_windows(token_hashes: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Hash every consecutive ``n``-token window of a document.

    ``token_hashes`` is the uint64 array of per-token hashes in document
    order; returns a uint64 array of length ``len(token_hashes) - n + 1``
    whose entry ``i`` equals ``combine(token_hashes[i:i+n], seed)``.
    """
    m = token_hashes.shape[0] - n + 1
    if m <= 0:
        return np.empty(0, dtype=np.uint64)
    acc = np.full(m, mix64((seed & MASK64) ^ _WINDOW_DOMAIN), dtype=np.uint64)
    prime = np.uint64(_FNV_PRIME)
    for j in range(n):
        acc = (acc ^ token_hashes[j : j + m]) * prime
    return mix64_array(acc)


def minhash_salts(seed: int, k: int) -> np.ndarray:
    """Per-coordinate salts for a k-wide MinHash signature."""
    base = mix64((seed & MASK64) ^ _MINHASH_DOMAIN)
    idx = np.arange(1, k + 1, dtype=np.uint64)
    return mix64_array(np.uint64(base) + idx * np.uint64(_GOLDEN))


def band_hash(rows: "list[int] | np.ndarray", band_index: int, seed: int) -> int:
    """Bucket key hash for one LSH band (row values + band index)."""
    return combine([int(v) for v in rows] + [band_index], seed, domain=_BAND_DOMAIN)


def band_hashes(minima: np.ndarray, bands: int, rows: int, seed: int) -> np.ndarray:
    """Vectorized band bucket hashes for a signature matrix.

    ``minima`` has shape (n_docs, k) with k >= bands*rows; returns a
    uint64 array of shape (n_docs, bands) matching :func:`band_hash`
    applied to each signature's band slices.
    """
    n = minima.shape[0]
    offset = mix64((seed & MASK64) ^ _BAND_DOMAIN)
    prime = np.uint64(_FNV_PRIME)
    out = np.empty((n, bands), dtype=np.uint64)
    for b in range(bands):
        acc = np.full(n, offset, dtype=np.uint64)
        for r in range(b * rows, (b + 1) * rows):
            acc = (acc ^ minima[:, r]) * prime
        acc = (acc ^ np.uint64(b)) * prime
        out[:, b] = mix64_array(acc)
    return out
