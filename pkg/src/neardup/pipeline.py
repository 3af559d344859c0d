"""End-to-end orchestration: method dispatch, run manifests, benchmarks.

A run is: load corpus, build candidate pairs with the chosen method,
threshold them into a similarity graph, cluster, optionally evaluate
against gold labels, and write every artifact plus a manifest that
records enough (configs, seed, input digests, versions) to reproduce
the run byte-for-byte. Stage timings are measured at contiguous
boundaries so they sum to the wall time.
"""

from __future__ import annotations

import hashlib
import json
import os
import resource
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from ._version import __version__
from .corpus import gold_clustering_labels, load_corpus, shingle_corpus
from .errors import DataError, UsageError
from .evalkit import EvalReport, evaluate, report_to_json
from .embedspace import RangeSearchConfig, load_embeddings, range_search
from .graph import (
    Clustering,
    cluster_stats,
    connected_components,
    build_graph,
    louvain,
    write_clustering,
)
from .overlap import (
    DEFAULT_HOT_SHINGLE_CAP,
    InvertedIndex,
    ScoredPair,
    candidate_pairs,
    jaccard,
    load_edges,
    overlap_min,
    score_edges,
    write_edges,
)
from .sketch import BandingConfig, collision_lsh, banded_lsh, minhash_corpus

METHODS = ("ngram_overlap", "lsh_collision", "lsh_banded", "embed_cluster", "rerank")
CLUSTERINGS = ("components", "louvain")
SCORER_KINDS = ("overlap_min", "jaccard", "external_scores_file")


@dataclass(frozen=True)
class PairScorer:
    """Second-stage scorer applied to candidate pairs during rerank.

    overlap_min / jaccard compute set similarity on shingles; an
    external scores file (edge format) slots in scores produced by any
    outside model and must cover every candidate pair.
    """

    kind: str = "overlap_min"
    threshold: float = 0.5
    path: str = None

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise UsageError(f"unknown scorer kind {self.kind!r}; expected one of {SCORER_KINDS}")
        if self.kind == "external_scores_file" and not self.path:
            raise UsageError("external_scores_file scorer needs a scores file path")


@dataclass(frozen=True)
class PipelineSpec:
    method: str = "lsh_banded"
    input: str = None
    embeddings: str = None
    output_dir: str = None
    seed: int = 0
    threads: int = 1
    shingle_n: int = 3
    minhash_k: int = 10
    bands: int = 15
    rows: int = 2
    min_collisions: int = 1
    metric: str = "overlap_min"
    threshold: float = 0.0
    hot_shingle_cap: int = DEFAULT_HOT_SHINGLE_CAP
    tau: float = 0.92
    knn_k: int = 900
    search_mode: str = "knn_then_filter"
    clustering: str = "louvain"
    resolution: float = 1.0
    use_weights: bool = False
    scorer: PairScorer = field(default_factory=PairScorer)
    evaluate: bool = None  # None = evaluate iff gold labels present

    def __post_init__(self):
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.clustering not in CLUSTERINGS:
            raise UsageError(
                f"unknown clustering {self.clustering!r}; expected one of {CLUSTERINGS}"
            )
        if self.shingle_n < 1:
            raise UsageError(f"shingle_n must be >= 1, got {self.shingle_n}")
        if self.minhash_k < 1:
            raise UsageError(f"minhash_k must be >= 1, got {self.minhash_k}")
        if self.method in ("embed_cluster", "rerank") and not self.embeddings:
            raise UsageError(f"method {self.method} needs an embeddings file")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _SPEC_FIELDS}
        d["scorer"] = {
            "kind": self.scorer.kind,
            "threshold": self.scorer.threshold,
            "path": self.scorer.path,
        }
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineSpec":
        if not isinstance(raw, dict):
            raise UsageError("pipeline config must be a JSON object")
        unknown = set(raw) - set(_SPEC_FIELDS) - {"scorer"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        scorer = kwargs.pop("scorer", None)
        if scorer is not None:
            if not isinstance(scorer, dict):
                raise UsageError("scorer config must be a JSON object")
            bad = set(scorer) - {"kind", "threshold", "path"}
            if bad:
                raise UsageError(f"unknown scorer keys: {sorted(bad)}")
            kwargs["scorer"] = PairScorer(**scorer)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise UsageError(f"bad pipeline config: {exc}") from None


_SPEC_FIELDS = tuple(
    name for name in PipelineSpec.__dataclass_fields__ if name != "scorer"
)


def load_spec(path) -> PipelineSpec:
    """Pipeline config from a JSON file mirroring PipelineSpec."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    return PipelineSpec.from_dict(raw)


class _StageClock:
    """Contiguous stage timer: marks partition the wall clock exactly."""

    def __init__(self):
        self._start = time.perf_counter()
        self._last = self._start
        self.stages = []

    def mark(self, name: str) -> None:
        now = time.perf_counter()
        self.stages.append((name, now - self._last))
        self._last = now

    @property
    def wall(self) -> float:
        return self._last - self._start


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _apply_scorer(scorer: PairScorer, candidates, shingle_sets) -> "list[ScoredPair]":
    if scorer.kind == "external_scores_file":
        known = {}
        for e in load_edges(scorer.path):
            known[(e.id_a, e.id_b)] = e
        out = []
        for pair in candidates:
            key = (pair.id_a, pair.id_b)
            if key not in known:
                raise DataError(
                    f"external scores file {scorer.path} is missing candidate pair "
                    f"({pair.id_a!r}, {pair.id_b!r})"
                )
            e = known[key]
            if e.score >= scorer.threshold - 1e-12:
                out.append(e)
        return out
    fn = overlap_min if scorer.kind == "overlap_min" else jaccard
    by_id = {s.doc_id: s for s in shingle_sets}
    out = []
    for pair in candidates:
        score = fn(by_id[pair.id_a], by_id[pair.id_b])
        if score >= scorer.threshold - 1e-12:
            out.append(ScoredPair(pair.id_a, pair.id_b, score, scorer.kind))
    return out


def _method_edges(spec: PipelineSpec, docs, clock: _StageClock):
    """Candidate generation + scoring for the configured method.

    Returns (edges, candidate_count, stage_notes).
    """
    notes = {}
    if spec.method == "ngram_overlap":
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        clock.mark("shingle")
        index = InvertedIndex.build(sets)
        cands = candidate_pairs(index, hot_shingle_cap=spec.hot_shingle_cap)
        edges = score_edges(cands, sets, metric=spec.metric, threshold=spec.threshold)
        clock.mark("pairs")
        return edges, len(cands), notes
    if spec.method in ("lsh_collision", "lsh_banded"):
        if spec.method == "lsh_banded":
            banding = BandingConfig(bands=spec.bands, rows=spec.rows)
            k = banding.bands * banding.rows
        else:
            k = spec.minhash_k
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        clock.mark("shingle")
        sigs = minhash_corpus(sets, k=k, seed=spec.seed)
        clock.mark("sketch")
        if spec.method == "lsh_banded":
            edges = banded_lsh(sigs, banding)
            if spec.threshold > 0.0:
                edges = [e for e in edges if e.score >= spec.threshold - 1e-12]
        else:
            edges = collision_lsh(sigs, min_collisions=spec.min_collisions)
        clock.mark("pairs")
        return edges, len(edges), notes
    # Embedding paths.
    matrix = load_embeddings(spec.embeddings)
    notes["embeddings_external"] = True
    notes["model_tag"] = matrix.model_tag
    clock.mark("embed")
    corpus_ids = {d.id for d in docs}
    matrix_ids = set(matrix.ids)
    unknown = sorted(matrix_ids - corpus_ids)
    if unknown:
        raise DataError(f"embeddings cover unknown documents: {unknown[:5]}")
    absent = sorted(corpus_ids - matrix_ids)
    if absent:
        raise DataError(f"embeddings missing for documents: {absent[:5]}")
    cfg = RangeSearchConfig(
        similarity_threshold=spec.tau, knn_k=spec.knn_k, mode=spec.search_mode
    )
    cands = range_search(matrix, cfg, threads=spec.threads)
    clock.mark("pairs")
    if spec.method == "embed_cluster":
        return cands, len(cands), notes
    # rerank: second-stage scorer over the range-search candidates
    if spec.scorer.kind in ("overlap_min", "jaccard"):
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
    else:
        sets = []
    edges = _apply_scorer(spec.scorer, cands, sets)
    clock.mark("score")
    return edges, len(cands), notes


@dataclass
class RunResult:
    clustering: Clustering
    report: EvalReport
    manifest: dict


def run(spec: PipelineSpec, docs=None, write_outputs: bool = True) -> RunResult:
    """Execute one pipeline run; see module docstring for the stages.

    ``docs`` may be passed directly (already-loaded corpus) to skip the
    load stage; otherwise ``spec.input`` is read.
    """
    clock = _StageClock()
    inputs = {}
    if docs is None:
        if not spec.input:
            raise UsageError("no input corpus: set 'input' in the spec or pass docs")
        docs = load_corpus(spec.input)
        inputs["corpus"] = {"path": str(spec.input), "sha256": _sha256(spec.input)}
    if spec.embeddings:
        inputs["embeddings"] = {
            "path": str(spec.embeddings),
            "sha256": _sha256(spec.embeddings),
        }
    if spec.scorer.kind == "external_scores_file" and spec.scorer.path:
        inputs["scores"] = {
            "path": str(spec.scorer.path),
            "sha256": _sha256(spec.scorer.path),
        }
    clock.mark("load")

    edges, n_candidates, notes = _method_edges(spec, docs, clock)
    graph = build_graph([d.id for d in docs], edges, weighted=spec.use_weights)
    clock.mark("graph")
    if spec.clustering == "louvain":
        clustering = louvain(
            graph, resolution=spec.resolution, seed=spec.seed, use_weights=spec.use_weights
        )
    else:
        clustering = connected_components(graph)
    clock.mark("cluster")

    labels = gold_clustering_labels(docs)
    has_gold = any(d.gold_cluster is not None for d in docs)
    report = None
    if spec.evaluate is True and not has_gold:
        raise DataError("evaluation requested but the corpus has no gold_cluster labels")
    if (spec.evaluate is None and has_gold) or spec.evaluate is True:
        gold = Clustering(assignment=labels, method_tag="gold")
        report = evaluate(clustering, gold)
        clock.mark("evaluate")

    outputs = {}
    if write_outputs and spec.output_dir:
        os.makedirs(spec.output_dir, exist_ok=True)
        cluster_path = os.path.join(spec.output_dir, "clusters.tsv")
        edges_path = os.path.join(spec.output_dir, "edges.tsv")
        write_clustering(clustering, cluster_path)
        write_edges(edges, edges_path)
        outputs = {"clustering": cluster_path, "edges": edges_path}
        if report is not None:
            report_path = os.path.join(spec.output_dir, "report.json")
            with open(report_path, "w", encoding="utf-8") as fh:
                fh.write(
                    report_to_json(
                        report, method_tag=spec.method, config=spec.to_dict(), seed=spec.seed
                    )
                )
                fh.write("\n")
            outputs["report"] = report_path
        clock.mark("write")

    stats = cluster_stats(clustering)
    manifest = {
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "seed": spec.seed,
        "threads": spec.threads,
        "method": spec.method,
        "spec": spec.to_dict(),
        "inputs": inputs,
        "outputs": outputs,
        "notes": notes,
        "counts": {
            "documents": len(docs),
            "candidate_pairs": n_candidates,
            "edges": len(edges),
            "clusters": len(clustering.clusters()),
            "non_singleton_clusters": stats.non_singleton_clusters,
            "mean_cluster_size": stats.mean_cluster_size,
            "max_cluster_size": stats.max_cluster_size,
            "singletons": stats.singletons,
        },
        "metrics": None
        if report is None
        else {
            "ari": report.ari,
            "pairwise_precision": report.pairwise_precision,
            "pairwise_recall": report.pairwise_recall,
            "pairwise_f1": report.pairwise_f1,
        },
        "stage_seconds": [[name, secs] for name, secs in clock.stages],
        "wall_seconds": clock.wall,
        "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
    }
    if write_outputs and spec.output_dir:
        manifest_path = os.path.join(spec.output_dir, "manifest.json")
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        manifest["outputs"]["manifest"] = manifest_path
    return RunResult(clustering=clustering, report=report, manifest=manifest)


# Table-style stage decomposition used by the benchmark report.
_BENCH_STAGES = {
    "load": "load",
    "shingle": "hash_articles",
    "sketch": "hash_articles",
    "embed": "embed_articles",
    "pairs": "compute_similarity",
    "score": "compute_similarity",
    "graph": "build_graph",
    "cluster": "community_detection",
    "evaluate": "evaluate",
    "write": "write",
}


def bench(spec: PipelineSpec, docs=None) -> dict:
    """One timed run, reported in a coarse stage decomposition.

    Embedding time is flagged external when vectors are precomputed
    (the embed stage is then file loading, not inference).
    """
    result = run(spec, docs=docs, write_outputs=bool(spec.output_dir))
    grouped: dict = {}
    for name, secs in result.manifest["stage_seconds"]:
        key = _BENCH_STAGES.get(name, name)
        grouped[key] = grouped.get(key, 0.0) + secs
    return {
        "version": __version__,
        "method": spec.method,
        "documents": result.manifest["counts"]["documents"],
        "edges": result.manifest["counts"]["edges"],
        "stages": grouped,
        "embedding_external": bool(result.manifest["notes"].get("embeddings_external")),
        "total_seconds": result.manifest["wall_seconds"],
        "peak_rss_kb": result.manifest["peak_rss_kb"],
        "metrics": result.manifest["metrics"],
    }


def threshold_runner(spec: PipelineSpec, docs, grid):
    """Precompute candidates once; return a threshold -> Clustering map.

    Used by tuning so only the cheap filter + graph + cluster stages
    rerun per grid point. The grid value means: score threshold for
    ngram_overlap / lsh_banded / embed_cluster, min_collisions for
    lsh_collision, and the second-stage scorer threshold for rerank.
    """
    doc_ids = [d.id for d in docs]

    def finish(edges):
        graph = build_graph(doc_ids, edges, weighted=spec.use_weights)
        if spec.clustering == "louvain":
            return louvain(
                graph, resolution=spec.resolution, seed=spec.seed, use_weights=spec.use_weights
            )
        return connected_components(graph)

    if spec.method == "ngram_overlap":
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        index = InvertedIndex.build(sets)
        cands = candidate_pairs(index, hot_shingle_cap=spec.hot_shingle_cap)
        base = score_edges(cands, sets, metric=spec.metric, threshold=0.0)
        return lambda t: finish([e for e in base if e.score >= t - 1e-12])
    if spec.method == "lsh_collision":
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        sigs = minhash_corpus(sets, k=spec.minhash_k, seed=spec.seed)
        base = collision_lsh(sigs, min_collisions=1)
        k = spec.minhash_k
        # grid values are integer collision counts; scores are c/k
        return lambda m: finish([e for e in base if e.score * k >= m - 0.5])
    if spec.method == "lsh_banded":
        banding = BandingConfig(bands=spec.bands, rows=spec.rows)
        sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        sigs = minhash_corpus(sets, k=banding.bands * banding.rows, seed=spec.seed)
        base = banded_lsh(sigs, banding)
        return lambda t: finish([e for e in base if e.score >= t - 1e-12])
    if spec.method == "embed_cluster":
        matrix = load_embeddings(spec.embeddings)
        # exact mode at the loosest grid point, so every tighter
        # threshold is a pure filter with no kNN truncation concerns
        cfg = RangeSearchConfig(
            similarity_threshold=min(grid), knn_k=spec.knn_k, mode="exact_range"
        )
        base = range_search(matrix, cfg, threads=spec.threads)
        return lambda t: finish([e for e in base if e.score >= t - 1e-12])
    if spec.method == "rerank":
        matrix = load_embeddings(spec.embeddings)
        cfg = RangeSearchConfig(
            similarity_threshold=spec.tau, knn_k=spec.knn_k, mode=spec.search_mode
        )
        cands = range_search(matrix, cfg, threads=spec.threads)
        if spec.scorer.kind in ("overlap_min", "jaccard"):
            sets = shingle_corpus(docs, n=spec.shingle_n, seed=spec.seed)
        else:
            sets = []
        open_scorer = PairScorer(
            kind=spec.scorer.kind, threshold=-1e18, path=spec.scorer.path
        )
        base = _apply_scorer(open_scorer, cands, sets)
        return lambda t: finish([e for e in base if e.score >= t - 1e-12])
    raise UsageError(f"tuning is not supported for method {spec.method!r}")


def tune(spec: PipelineSpec, grid, docs=None, threads: int = 1):
    """Grid-tune the method's threshold by ARI on a labeled corpus."""
    from .evalkit import tune_threshold

    if docs is None:
        if not spec.input:
            raise UsageError("no validation corpus: set 'input' in the spec or pass docs")
        docs = load_corpus(spec.input)
    if not any(d.gold_cluster is not None for d in docs):
        raise DataError("tuning needs a corpus with gold_cluster labels")
    gold = Clustering(assignment=gold_clustering_labels(docs), method_tag="gold")
    runner = threshold_runner(spec, docs, grid)
    return tune_threshold(runner, gold, grid, threads=threads)


def doubling_factor(t_small: float, t_large: float) -> float:
    """Scaling ratio used by the benchmark smoke checks."""
    if t_small <= 0:
        raise DataError("cannot compute a scaling factor from a non-positive time")
    return t_large / t_small


def mean_times_reproduced(clustering: Clustering) -> float:
    """Mean cluster size among non-singleton clusters (0.0 when none)."""
    stats = cluster_stats(clustering)
    return 0.0 if stats.all_singletons else stats.mean_cluster_size


def gold_mean_times_reproduced(docs) -> float:
    """Same statistic computed from gold labels."""
    labels = gold_clustering_labels(docs)
    return mean_times_reproduced(Clustering(assignment=labels, method_tag="gold"))
