"""Exact n-gram overlap: inverted-index candidate generation and scoring.

Candidate generation through the inverted index is semantically identical
to brute-force all-pairs intersection (oracle-tested) but skips the
quadratic scan; the only sanctioned deviation is the hot-shingle cap,
which drops boilerplate shingles with very long postings lists.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Iterable, NamedTuple

import numpy as np

from .corpus import ShingleSet
from .errors import DataError

logger = logging.getLogger(__name__)

METRICS = ("overlap_min", "jaccard", "cosine", "collisions_fraction", "external")

DEFAULT_HOT_SHINGLE_CAP = 10_000


class ScoredPair(NamedTuple):
    """A candidate duplicate pair with ids ordered so id_a < id_b."""

    id_a: str
    id_b: str
    score: float
    metric: str


def make_pair(id_x: str, id_y: str, score: float, metric: str) -> ScoredPair:
    if id_x == id_y:
        raise DataError(f"pair endpoints must differ, got {id_x!r} twice")
    if id_x < id_y:
        return ScoredPair(id_x, id_y, score, metric)
    return ScoredPair(id_y, id_x, score, metric)


def overlap_min(a: ShingleSet, b: ShingleSet) -> float:
    """Intersection size over the smaller set; 1.0 when one contains the other.

    Abridgements and truncations are not penalized: a document whose
    shingles are a subset of another's scores 1. Returns 0 when either
    set is empty.
    """
    if a.count == 0 or b.count == 0:
        return 0.0
    shared = np.intersect1d(a.hashes, b.hashes, assume_unique=True).shape[0]
    return shared / min(a.count, b.count)


def jaccard(a: ShingleSet, b: ShingleSet) -> float:
    """Intersection over union; 0 when both sets are empty."""
    if a.count == 0 and b.count == 0:
        return 0.0
    shared = np.intersect1d(a.hashes, b.hashes, assume_unique=True).shape[0]
    return shared / (a.count + b.count - shared)


class InvertedIndex:
    """Shingle hash -> postings list of document positions."""

    def __init__(self, doc_ids: list, doc_counts: np.ndarray, postings: dict):
        self.doc_ids = doc_ids
        self.doc_counts = doc_counts
        self.postings = postings

    @classmethod
    def build(cls, shingle_sets: Iterable[ShingleSet]) -> "InvertedIndex":
        doc_ids = []
        counts = []
        postings: dict = {}
        seen = set()
        for pos, ss in enumerate(shingle_sets):
            if ss.doc_id in seen:
                raise DataError(f"duplicate document id {ss.doc_id!r} in index build")
            seen.add(ss.doc_id)
            doc_ids.append(ss.doc_id)
            counts.append(ss.count)
            for h in ss.hashes.tolist():
                lst = postings.get(h)
                if lst is None:
                    postings[h] = [pos]
                else:
                    lst.append(pos)
        return cls(doc_ids, np.asarray(counts, dtype=np.int64), postings)

    def hot_shingles(self, cap: int) -> int:
        """Number of shingles whose postings list exceeds ``cap``."""
        return sum(1 for lst in self.postings.values() if len(lst) > cap)


def candidate_pairs(
    index: InvertedIndex,
    min_shared: int = 1,
    hot_shingle_cap: "int | None" = DEFAULT_HOT_SHINGLE_CAP,
) -> list:
    """All unordered doc pairs sharing >= ``min_shared`` shingles.

    Returns (id_a, id_b, shared_count) triples sorted by id pair, equal
    to brute-force all-pairs intersection counts. Shingles with postings
    lists longer than ``hot_shingle_cap`` are skipped and counted;
    pass ``hot_shingle_cap=None`` to disable the cap (oracle tests do).
    """
    if min_shared < 1:
        raise DataError(f"min_shared must be >= 1, got {min_shared}")
    counts: Counter = Counter()
    skipped = 0
    for lst in index.postings.values():
        m = len(lst)
        if m < 2:
            continue
        if hot_shingle_cap is not None and m > hot_shingle_cap:
            skipped += 1
            continue
        # Postings are in document order, so i < j holds pairwise.
        for i in range(m - 1):
            a = lst[i]
            for j in range(i + 1, m):
                counts[(a, lst[j])] += 1
    if skipped:
        logger.warning("candidate_pairs: skipped %d hot shingles (cap %d)", skipped, hot_shingle_cap)
    ids = index.doc_ids
    out = []
    for (i, j), c in counts.items():
        if c < min_shared:
            continue
        a, b = ids[i], ids[j]
        if b < a:  # positions follow input order, pair ids do not
            a, b = b, a
        out.append((a, b, c))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def score_edges(
    pairs: Iterable,
    shingle_sets: Iterable[ShingleSet],
    metric: str = "overlap_min",
    threshold: float = 0.0,
) -> list:
    """Score candidate triples and retain those with score >= threshold.

    Ties at exactly the threshold are kept. Scores derive from the exact
    shared counts carried by the candidate stream, so no set operations
    are repeated here.
    """
    if metric not in ("overlap_min", "jaccard"):
        raise DataError(f"unsupported scoring metric {metric!r}")
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold must be in [0, 1], got {threshold}")
    sizes = {ss.doc_id: ss.count for ss in shingle_sets}
    edges = []
    for id_a, id_b, shared in pairs:
        ca, cb = sizes[id_a], sizes[id_b]
        if ca == 0 or cb == 0:
            continue
        if metric == "overlap_min":
            score = shared / min(ca, cb)
        else:
            score = shared / (ca + cb - shared)
        if score >= threshold:
            edges.append(make_pair(id_a, id_b, score, metric))
    edges.sort(key=lambda e: (e.id_a, e.id_b))
    return edges


def write_edges(edges: Iterable[ScoredPair], path) -> None:
    """Edge file: ``id_a \\t id_b \\t score \\t metric`` sorted by id pair."""
    rows = sorted(edges, key=lambda e: (e.id_a, e.id_b))
    with open(path, "w", encoding="utf-8") as fh:
        for e in rows:
            if "\t" in e.id_a or "\t" in e.id_b or "\n" in e.id_a or "\n" in e.id_b:
                raise DataError(f"doc id with tab/newline cannot be written: {e.id_a!r}/{e.id_b!r}")
            fh.write(f"{e.id_a}\t{e.id_b}\t{e.score!r}\t{e.metric}\n")


def load_edges(path) -> list:
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}: line {lineno}: expected 4 tab-separated fields")
            id_a, id_b, score_s, metric = parts
            try:
                score = float(score_s)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: bad score {score_s!r}") from exc
            edges.append(ScoredPair(id_a, id_b, score, metric))
    return edges
