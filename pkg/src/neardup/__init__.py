"""Noise-robust near-duplicate detection for large text corpora.

Methods: word-n-gram overlap with inverted-index candidate generation,
MinHash LSH (collision-count and banded), exact cosine range search
over precomputed embeddings, and a rerank composition; clusters come
from connected components or Louvain communities and are scored by ARI
and pairwise precision/recall/F1 against gold labels.
"""

from ._version import __version__
from .corpus import (
    Document,
    NormalizationConfig,
    ShingleSet,
    default_normalization,
    gold_clustering_labels,
    load_corpus,
    normalize,
    shingle,
    shingle_corpus,
    tokenize,
    write_corpus,
)
from .errors import DataError, InternalError, NearDupError, UsageError
from .estimators import (
    BandedLSHDeduplicator,
    EmbeddingDeduplicator,
    MinHashLSHDeduplicator,
    NgramOverlapDeduplicator,
)
from .evalkit import (
    EvalReport,
    adjusted_rand_index,
    evaluate,
    pairwise_prf,
    tune_threshold,
    write_curve,
)
from .embedspace import (
    EmbeddingMatrix,
    RangeSearchConfig,
    TruncationReport,
    embedding_matrix,
    knn_truncation_report,
    load_embeddings,
    range_search,
    write_embeddings,
)
from .graph import (
    Clustering,
    SimilarityGraph,
    build_graph,
    cluster_stats,
    connected_components,
    load_clustering,
    louvain,
    modularity,
    write_clustering,
)
from .overlap import (
    InvertedIndex,
    ScoredPair,
    candidate_pairs,
    jaccard,
    load_edges,
    make_pair,
    overlap_min,
    score_edges,
    write_edges,
)
from .pipeline import PairScorer, PipelineSpec, RunResult, bench, load_spec, run, tune
from .sketch import (
    BandingConfig,
    MinHashSignature,
    banded_lsh,
    collision_fraction,
    collision_lsh,
    load_signatures,
    minhash,
    minhash_corpus,
    s_curve,
    write_signatures,
)
from .synthgen import (
    OCR_HEAVY,
    GeneratorConfig,
    NoiseModel,
    NoiseReport,
    generate,
    noise_report,
    reproduction_distribution,
)
from .vectorize import char_ngram_vectors

__all__ = [
    "__version__",
    "BandedLSHDeduplicator",
    "BandingConfig",
    "Clustering",
    "DataError",
    "Document",
    "EmbeddingDeduplicator",
    "EmbeddingMatrix",
    "EvalReport",
    "GeneratorConfig",
    "InternalError",
    "InvertedIndex",
    "MinHashLSHDeduplicator",
    "MinHashSignature",
    "NearDupError",
    "NgramOverlapDeduplicator",
    "NoiseModel",
    "NoiseReport",
    "NormalizationConfig",
    "OCR_HEAVY",
    "PairScorer",
    "PipelineSpec",
    "RangeSearchConfig",
    "RunResult",
    "ScoredPair",
    "ShingleSet",
    "SimilarityGraph",
    "TruncationReport",
    "UsageError",
    "adjusted_rand_index",
    "banded_lsh",
    "bench",
    "build_graph",
    "candidate_pairs",
    "char_ngram_vectors",
    "cluster_stats",
    "collision_fraction",
    "collision_lsh",
    "connected_components",
    "default_normalization",
    "embedding_matrix",
    "evaluate",
    "generate",
    "gold_clustering_labels",
    "jaccard",
    "knn_truncation_report",
    "load_clustering",
    "load_corpus",
    "load_edges",
    "load_embeddings",
    "load_signatures",
    "load_spec",
    "louvain",
    "make_pair",
    "minhash",
    "minhash_corpus",
    "modularity",
    "noise_report",
    "normalize",
    "overlap_min",
    "pairwise_prf",
    "range_search",
    "reproduction_distribution",
    "run",
    "s_curve",
    "score_edges",
    "shingle",
    "shingle_corpus",
    "tokenize",
    "tune",
    "tune_threshold",
    "write_clustering",
    "write_corpus",
    "write_curve",
    "write_edges",
    "write_embeddings",
    "write_signatures",
]
