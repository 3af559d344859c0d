"""Scikit-learn style wrappers around the deduplication methods.

Each estimator is a clusterer: ``fit(X)`` takes documents (Document
objects or raw strings) or, for the embedding variant, a unit-vector
matrix, and exposes integer duplicate-cluster labels as ``labels_``.
Hyperparameters follow sklearn conventions (stored verbatim in
``__init__``, validated in ``fit``), so grid search and ``get_params``
work unchanged.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .corpus import Document, shingle_corpus
from .embedspace import RangeSearchConfig, embedding_matrix, range_search
from .errors import DataError
from .graph import build_graph, connected_components, louvain
from .overlap import InvertedIndex, candidate_pairs, score_edges
from .sketch import BandingConfig, banded_lsh, collision_lsh, minhash_corpus


def as_documents(X) -> "list[Document]":
    """Coerce estimator input to documents.

    Strings get positional ids (zero-padded so lexicographic order
    matches input order); Document instances pass through.
    """
    docs = []
    width = max(6, len(str(max(len(X) - 1, 0))))
    for i, item in enumerate(X):
        if isinstance(item, Document):
            docs.append(item)
        elif isinstance(item, str):
            docs.append(Document(id=f"doc-{i:0{width}d}", text=item))
        else:
            raise DataError(
                f"expected Document or str at position {i}, got {type(item).__name__}"
            )
    if len({d.id for d in docs}) != len(docs):
        raise DataError("duplicate document ids in estimator input")
    return docs


def _labels_from_clustering(docs, clustering) -> np.ndarray:
    """Integer labels in input order; cluster numbering follows first
    appearance in the input."""
    mapping: dict = {}
    labels = np.empty(len(docs), dtype=np.int64)
    for i, doc in enumerate(docs):
        cid = clustering.assignment[doc.id]
        labels[i] = mapping.setdefault(cid, len(mapping))
    return labels


class _GraphClustererMixin:
    def _cluster(self, doc_ids, edges):
        graph = build_graph(doc_ids, edges, weighted=self.use_weights)
        if self.clustering == "louvain":
            return louvain(
                graph,
                resolution=self.resolution,
                seed=self.seed,
                use_weights=self.use_weights,
            )
        if self.clustering == "components":
            return connected_components(graph)
        raise DataError(
            f"clustering must be 'components' or 'louvain', got {self.clustering!r}"
        )

    def _check_fitted(self):
        if not hasattr(self, "labels_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit first"
            )


class NgramOverlapDeduplicator(ClusterMixin, _GraphClustererMixin, BaseEstimator):
    """Duplicate clustering by thresholded n-gram set overlap."""

    def __init__(
        self,
        n=3,
        metric="overlap_min",
        threshold=0.25,
        hot_shingle_cap=10_000,
        clustering="louvain",
        resolution=1.0,
        use_weights=False,
        seed=0,
    ):
        self.n = n
        self.metric = metric
        self.threshold = threshold
        self.hot_shingle_cap = hot_shingle_cap
        self.clustering = clustering
        self.resolution = resolution
        self.use_weights = use_weights
        self.seed = seed

    def fit(self, X, y=None):
        docs = as_documents(X)
        sets = shingle_corpus(docs, n=self.n, seed=self.seed)
        index = InvertedIndex.build(sets)
        cands = candidate_pairs(index, hot_shingle_cap=self.hot_shingle_cap)
        edges = score_edges(cands, sets, metric=self.metric, threshold=self.threshold)
        self.clustering_ = self._cluster([d.id for d in docs], edges)
        self.edges_ = edges
        self.labels_ = _labels_from_clustering(docs, self.clustering_)
        return self

    def predict(self, X=None):
        self._check_fitted()
        return self.labels_


class MinHashLSHDeduplicator(ClusterMixin, _GraphClustererMixin, BaseEstimator):
    """Duplicate clustering from MinHash coordinate collisions."""

    def __init__(
        self,
        n=3,
        k=10,
        min_collisions=1,
        clustering="louvain",
        resolution=1.0,
        use_weights=False,
        seed=0,
    ):
        self.n = n
        self.k = k
        self.min_collisions = min_collisions
        self.clustering = clustering
        self.resolution = resolution
        self.use_weights = use_weights
        self.seed = seed

    def fit(self, X, y=None):
        docs = as_documents(X)
        sets = shingle_corpus(docs, n=self.n, seed=self.seed)
        sigs = minhash_corpus(sets, k=self.k, seed=self.seed)
        edges = collision_lsh(sigs, min_collisions=self.min_collisions)
        self.clustering_ = self._cluster([d.id for d in docs], edges)
        self.edges_ = edges
        self.labels_ = _labels_from_clustering(docs, self.clustering_)
        return self

    def predict(self, X=None):
        self._check_fitted()
        return self.labels_


class BandedLSHDeduplicator(ClusterMixin, _GraphClustererMixin, BaseEstimator):
    """Duplicate clustering from banded MinHash bucket collisions."""

    def __init__(
        self,
        n=3,
        bands=15,
        rows=2,
        clustering="louvain",
        resolution=1.0,
        use_weights=False,
        seed=0,
    ):
        self.n = n
        self.bands = bands
        self.rows = rows
        self.clustering = clustering
        self.resolution = resolution
        self.use_weights = use_weights
        self.seed = seed

    def fit(self, X, y=None):
        docs = as_documents(X)
        banding = BandingConfig(bands=self.bands, rows=self.rows)
        sets = shingle_corpus(docs, n=self.n, seed=self.seed)
        sigs = minhash_corpus(sets, k=banding.bands * banding.rows, seed=self.seed)
        edges = banded_lsh(sigs, banding)
        self.clustering_ = self._cluster([d.id for d in docs], edges)
        self.edges_ = edges
        self.labels_ = _labels_from_clustering(docs, self.clustering_)
        return self

    def predict(self, X=None):
        self._check_fitted()
        return self.labels_


class EmbeddingDeduplicator(ClusterMixin, _GraphClustererMixin, BaseEstimator):
    """Duplicate clustering from cosine range search over unit vectors.

    ``fit`` takes an (n, d) matrix of (approximately) unit-normalized
    rows; rows are renormalized within the loader's tolerance band.
    """

    def __init__(
        self,
        tau=0.92,
        knn_k=900,
        mode="knn_then_filter",
        clustering="louvain",
        resolution=1.0,
        use_weights=False,
        seed=0,
    ):
        self.tau = tau
        self.knn_k = knn_k
        self.mode = mode
        self.clustering = clustering
        self.resolution = resolution
        self.use_weights = use_weights
        self.seed = seed

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float32)
        if X.ndim != 2:
            raise DataError(f"expected an (n, d) matrix, got shape {X.shape}")
        width = max(6, len(str(max(X.shape[0] - 1, 0))))
        ids = [f"row-{i:0{width}d}" for i in range(X.shape[0])]
        matrix = embedding_matrix(ids, X)
        cfg = RangeSearchConfig(
            similarity_threshold=self.tau, knn_k=self.knn_k, mode=self.mode
        )
        edges = range_search(matrix, cfg)
        self.clustering_ = self._cluster(ids, edges)
        self.edges_ = edges
        docs = [Document(id=i, text="-") for i in ids]
        self.labels_ = _labels_from_clustering(docs, self.clustering_)
        return self

    def predict(self, X=None):
        self._check_fitted()
        return self.labels_
