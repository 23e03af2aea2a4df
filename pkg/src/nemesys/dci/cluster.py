"""Seeded, deterministic k-means for trace grouping.

Farthest-point initialization (first center drawn from the seed stream,
each next center the point farthest from its nearest chosen center) plus
Lloyd iterations to an assignment fixed point. Ties always resolve to the
lowest index, so a (vectors, k, seed) triple has exactly one answer.
"""

from typing import Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .._rng import stream
from ..errors import BadK, DimensionMismatch
from ..validation import as_float_matrix, check_fitted

MAX_LLOYD_ITERATIONS = 100


def _pairwise_sq(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _farthest_point_init(X: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = stream(seed, "kmeans-init")
    first = int(rng.integers(0, X.shape[0]))
    centers = [X[first]]
    nearest = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        candidate = int(np.argmax(nearest))  # argmax takes the first maximum
        centers.append(X[candidate])
        nearest = np.minimum(nearest, np.sum((X - centers[-1]) ** 2, axis=1))
    return np.array(centers)


def cluster_traces(vectors, k: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Assign every vector to one of k clusters; returns (labels, centroids)."""
    X = as_float_matrix(vectors, "vectors")
    if k < 1 or k > X.shape[0]:
        raise BadK(f"k={k} outside [1, {X.shape[0]}]")

    centers = _farthest_point_init(X, k, seed)
    labels = np.argmin(_pairwise_sq(X, centers), axis=1)
    for _ in range(MAX_LLOYD_ITERATIONS):
        for j in range(k):
            members = X[labels == j]
            if members.size:
                centers[j] = members.mean(axis=0)
            # empty cluster keeps its previous center
        new_labels = np.argmin(_pairwise_sq(X, centers), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels.astype(np.int64), centers


def within_cluster_ss(X, labels, centers) -> float:
    X = as_float_matrix(X, "X")
    return float(np.sum((X - centers[labels]) ** 2))


class TraceKMeans(BaseEstimator, ClusterMixin):
    """Estimator facade over the deterministic k-means."""

    def __init__(self, k: int = 2, seed: int = 0):
        self.k = k
        self.seed = seed

    def fit(self, X, y=None):
        self.labels_, self.cluster_centers_ = cluster_traces(X, self.k, self.seed)
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "cluster_centers_")
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.cluster_centers_.shape[1]:
            raise DimensionMismatch(
                f"expected {self.cluster_centers_.shape[1]} features, got {X.shape[1]}"
            )
        return np.argmin(_pairwise_sq(X, self.cluster_centers_), axis=1).astype(np.int64)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


def trace_feature_vectors(records) -> np.ndarray:
    """Default numeric embedding for stored traces: remote port, TTL and
    window size (zero when absent) plus the event-kind index."""
    from .types import TraceEventKind

    kinds = {kind: i for i, kind in enumerate(TraceEventKind)}
    rows = []
    for record in records:
        base = getattr(record, "base", record)
        rows.append([
            float(base.port or 0),
            float(base.ttl or 0),
            float(base.win or 0),
            float(kinds[base.event_kind]),
        ])
    return np.asarray(rows, dtype=np.float64)
