"""Synthetic corpora with known duplicate clusters.

Simulates wire-service reproduction: each source article is copied a
random number of times (never more than 200) through a noise channel of
prefix abridgement, word drops, and OCR-style character substitutions,
deletions, and insertions. Copies inherit the source's gold cluster, so
generated corpora come with exact ground truth for evaluation.

Calibration targets are corpus-level duplicate statistics (mean 3-gram
overlap around 0.56, roughly 19% of duplicate pairs sharing no 10-gram).
A homogeneous per-character noise rate cannot reach both at once: rates
low enough for the mean leave almost every pair sharing some 10-gram.
Real OCR quality varies per reproduction, so the noise model draws a
per-copy severity multiplier from ``severity_range``; heavy-tailed
severity produces the observed mix of mildly and badly damaged copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, shingle_corpus
from .errors import DataError
from .overlap import overlap_min

MAX_REPRODUCTIONS = 200
NOISE_REPORT_NGRAM_ORDERS = (3, 4, 5, 10, 15)

_VOCAB_SEED = 0x5EED_F00D
_LETTERS = np.arange(97, 123, dtype=np.uint8)  # 'a'..'z'


@dataclass(frozen=True)
class NoiseModel:
    """Per-copy reproduction noise.

    Character rates are scaled by a severity multiplier drawn once per
    copy, then clipped to [0, 1]; severity models scan quality, which
    varies per reproduction. The multiplier is
    ``lo + (hi - lo) * u**severity_shape`` for uniform u, so shape 1 is
    a uniform draw and larger shapes keep most copies near ``lo`` with a
    small badly-damaged tail. Word drops model editorial cuts, not scan
    quality, and apply at their nominal rate on every copy.
    """

    char_sub_rate: float = 0.0
    char_del_rate: float = 0.0
    char_ins_rate: float = 0.0
    word_drop_rate: float = 0.0
    abridge_prob: float = 0.0
    abridge_keep_frac_range: tuple = (0.3, 0.9)
    severity_range: tuple = (1.0, 1.0)
    severity_shape: float = 1.0

    def __post_init__(self):
        for name in ("char_sub_rate", "char_del_rate", "char_ins_rate", "word_drop_rate", "abridge_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {v}")
        lo, hi = self.abridge_keep_frac_range
        if not (0.0 < lo <= hi <= 1.0):
            raise DataError(
                f"abridge_keep_frac_range must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
            )
        slo, shi = self.severity_range
        if not (0.0 <= slo <= shi):
            raise DataError(f"severity_range must satisfy 0 <= lo <= hi, got ({slo}, {shi})")
        if self.severity_shape <= 0.0:
            raise DataError(f"severity_shape must be > 0, got {self.severity_shape}")

    def apply(self, text: str, rng: np.random.Generator) -> str:
        slo, shi = self.severity_range
        severity = slo + (shi - slo) * rng.random() ** self.severity_shape
        words = text.split()
        if self.abridge_prob and rng.random() < self.abridge_prob:
            lo, hi = self.abridge_keep_frac_range
            keep = max(1, int(round(rng.uniform(lo, hi) * len(words))))
            words = words[:keep]
        drop = self.word_drop_rate
        if drop and len(words) > 1:
            mask = rng.random(len(words)) >= drop
            if not mask.any():
                mask[0] = True
            words = [w for w, m in zip(words, mask) if m]
        arr = np.frombuffer(" ".join(words).encode("utf-8"), dtype=np.uint8).copy()
        sub = min(1.0, self.char_sub_rate * severity)
        if sub and arr.size:
            mask = rng.random(arr.size) < sub
            arr[mask] = rng.choice(_LETTERS, int(mask.sum()))
        dele = min(1.0, self.char_del_rate * severity)
        if dele and arr.size:
            arr = arr[rng.random(arr.size) >= dele]
        ins = min(1.0, self.char_ins_rate * severity)
        if ins:
            gaps = rng.random(arr.size + 1) < ins
            if gaps.any():
                arr = np.insert(arr, np.flatnonzero(gaps), rng.choice(_LETTERS, int(gaps.sum())))
        # Byte-level noise can break multi-byte sequences; drop the debris.
        return arr.tobytes().decode("utf-8", errors="ignore")


# Calibrated against duplicate-pair shingle statistics (targets: mean
# 3-gram overlap ~0.56, ~19% of duplicate pairs with no shared 10-gram,
# ~31% with no shared 15-gram). Only the products rate * severity and
# the severity shape matter, so the range is normalized to (0, 5).
# Measured on the default generator config, seed 0, 1,000 sources
# (1,903 docs, 4,654 duplicate pairs):
#   mean overlap    3: 0.571  4: 0.483  5: 0.412  10: 0.202  15: 0.109
#   zero shared     3: 0.001  4: 0.019  5: 0.045  10: 0.203  15: 0.354
OCR_HEAVY = NoiseModel(
    char_sub_rate=0.02,
    char_del_rate=0.005,
    char_ins_rate=0.005,
    word_drop_rate=0.07,
    abridge_prob=0.35,
    abridge_keep_frac_range=(0.3, 0.9),
    severity_range=(0.0, 5.0),
    severity_shape=10.0,
)


def reproduction_distribution(
    mean_reproduced: float = 6.3,
    singleton_frac: float = 0.83,
    max_count: int = MAX_REPRODUCTIONS,
) -> np.ndarray:
    """Categorical over counts {1..max_count}.

    Probability ``singleton_frac`` of count 1; the rest follows a
    geometric over {2..max_count} truncated at max_count, with its decay
    solved so the reproduced-article mean hits ``mean_reproduced``.
    """
    if not 0.0 <= singleton_frac <= 1.0:
        raise DataError(f"singleton_frac must be in [0, 1], got {singleton_frac}")
    if max_count > MAX_REPRODUCTIONS or max_count < 1:
        raise DataError(f"max_count must be in [1, {MAX_REPRODUCTIONS}], got {max_count}")
    probs = np.zeros(max_count)
    probs[0] = singleton_frac
    if singleton_frac >= 1.0 or max_count == 1:
        probs[0] = 1.0
        return probs
    counts = np.arange(2, max_count + 1, dtype=np.float64)
    if not 2.0 < mean_reproduced < float(max_count):
        raise DataError(
            f"mean_reproduced must be in (2, {max_count}), got {mean_reproduced}"
        )

    def trunc_mean(rho: float) -> float:
        w = (1.0 - rho) ** (counts - 2)
        return float((counts * w).sum() / w.sum())

    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if trunc_mean(mid) > mean_reproduced:
            lo = mid
        else:
            hi = mid
    w = (1.0 - 0.5 * (lo + hi)) ** (counts - 2)
    probs[1:] = (1.0 - singleton_frac) * w / w.sum()
    return probs


@lru_cache(maxsize=1)
def default_vocab(size: int = 5000, alpha: float = 1.07, beta: float = 2.7):
    """Fixed pseudo-word vocabulary with Zipf-Mandelbrot frequencies.

    Seeded by a module constant, not the generator seed, so every run
    shares one vocabulary; rank weights 1/(rank+beta)^alpha give the
    heavy-tailed frequency profile that makes cross-source shingle
    collisions rare but nonzero.
    """
    rng = np.random.default_rng(_VOCAB_SEED)
    words = []
    seen = set()
    while len(words) < size:
        length = int(rng.integers(2, 10))
        word = bytes(rng.choice(_LETTERS, length)).decode()
        if word not in seen:
            seen.add(word)
            words.append(word)
    ranks = np.arange(1, size + 1, dtype=np.float64)
    weights = 1.0 / (ranks + beta) ** alpha
    return tuple(words), weights / weights.sum()


@dataclass(frozen=True)
class GeneratorConfig:
    n_sources: int = 1000
    reproduction_count_distribution: np.ndarray = None
    vocab: tuple = None
    vocab_weights: np.ndarray = None
    words_per_article_range: tuple = (60, 350)
    seed: int = 0

    def __post_init__(self):
        if self.n_sources < 1:
            raise DataError(f"n_sources must be >= 1, got {self.n_sources}")
        if self.reproduction_count_distribution is None:
            object.__setattr__(
                self, "reproduction_count_distribution", reproduction_distribution()
            )
        dist = np.asarray(self.reproduction_count_distribution, dtype=np.float64)
        if dist.ndim != 1 or len(dist) > MAX_REPRODUCTIONS or len(dist) < 1:
            raise DataError(
                f"reproduction distribution must cover counts 1..{MAX_REPRODUCTIONS}"
            )
        if (dist < 0).any() or abs(dist.sum() - 1.0) > 1e-9:
            raise DataError("reproduction distribution must be a probability vector")
        object.__setattr__(self, "reproduction_count_distribution", dist)
        if self.vocab is None:
            words, weights = default_vocab()
            object.__setattr__(self, "vocab", words)
            object.__setattr__(self, "vocab_weights", weights)
        else:
            object.__setattr__(self, "vocab", tuple(self.vocab))
            if self.vocab_weights is None:
                object.__setattr__(
                    self, "vocab_weights", np.full(len(self.vocab), 1.0 / len(self.vocab))
                )
        lo, hi = self.words_per_article_range
        if not (1 <= lo <= hi):
            raise DataError(
                f"words_per_article_range must satisfy 1 <= lo <= hi, got ({lo}, {hi})"
            )


def generate(cfg: GeneratorConfig, noise: NoiseModel = None) -> "list[Document]":
    """Sources plus noisy copies, ids sorted, gold clusters exact.

    The top-level seed drives draws of per-source seeds, so each source
    (article text plus all its copies) is generated independently and
    the output does not depend on evaluation order.
    """
    noise = noise if noise is not None else NoiseModel()
    rng = np.random.default_rng(cfg.seed)
    dist = cfg.reproduction_count_distribution
    counts = rng.choice(np.arange(1, len(dist) + 1), size=cfg.n_sources, p=dist)
    lo, hi = cfg.words_per_article_range
    lengths = rng.integers(lo, hi + 1, size=cfg.n_sources)
    source_seeds = rng.integers(0, 2**63, size=cfg.n_sources)
    vocab = np.asarray(cfg.vocab, dtype=object)
    cum = np.cumsum(np.asarray(cfg.vocab_weights, dtype=np.float64))
    cum[-1] = 1.0
    docs = []
    for s in range(cfg.n_sources):
        srng = np.random.default_rng(int(source_seeds[s]))
        idx = np.searchsorted(cum, srng.random(int(lengths[s])), side="right")
        text = " ".join(vocab[idx].tolist())
        cluster = f"src-{s:06d}"
        docs.append(
            Document(id=f"syn-{s:06d}-000", text=text, source="synth", gold_cluster=cluster)
        )
        for j in range(1, int(counts[s])):
            docs.append(
                Document(
                    id=f"syn-{s:06d}-{j:03d}",
                    text=noise.apply(text, srng),
                    source="synth",
                    gold_cluster=cluster,
                )
            )
    docs.sort(key=lambda d: d.id)
    return docs


@dataclass
class NoiseReport:
    """Duplicate-pair shingle statistics per N-gram order."""

    n_duplicate_pairs: int
    mean_overlap: dict = field(default_factory=dict)
    zero_shared_fraction: dict = field(default_factory=dict)
    empty: bool = False


def noise_report(
    docs: Iterable[Document],
    ns: Sequence[int] = NOISE_REPORT_NGRAM_ORDERS,
    seed: int = 0,
    max_pairs_per_cluster: int = None,
) -> NoiseReport:
    """Mean duplicate overlap and zero-shared fraction per N.

    Walks every unordered gold-duplicate pair (optionally capped per
    cluster for very large clusters) and measures min-normalized N-gram
    overlap. All-singleton corpora yield an empty report with a flag.
    """
    docs = list(docs)
    clusters: dict = {}
    for d in docs:
        if d.gold_cluster is not None:
            clusters.setdefault(d.gold_cluster, []).append(d)
    pairs = []
    for members in clusters.values():
        members.sort(key=lambda d: d.id)
        cluster_pairs = [
            (a, b) for i, a in enumerate(members) for b in members[i + 1 :]
        ]
        if max_pairs_per_cluster is not None:
            cluster_pairs = cluster_pairs[:max_pairs_per_cluster]
        pairs.extend(cluster_pairs)
    if not pairs:
        return NoiseReport(n_duplicate_pairs=0, empty=True)
    dup_docs = {}
    for a, b in pairs:
        dup_docs[a.id] = a
        dup_docs[b.id] = b
    report = NoiseReport(n_duplicate_pairs=len(pairs))
    for n in ns:
        sets = shingle_corpus(list(dup_docs.values()), n=n, seed=seed)
        by_id = {s.doc_id: s for s in sets}
        overlaps = [overlap_min(by_id[a.id], by_id[b.id]) for a, b in pairs]
        report.mean_overlap[n] = float(np.mean(overlaps))
        report.zero_shared_fraction[n] = float(np.mean([o == 0.0 for o in overlaps]))
    return report
