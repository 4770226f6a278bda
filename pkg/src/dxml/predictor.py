"""Clustered k-NN label prediction.

A test point is embedded, routed to the nearest cluster, compared against
that cluster's members by exact linear scan, and scored by aggregating the
neighbors' label sets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cluster import ClusterIndex, nearest_cluster
from .data_io import LabelSet, SparseVector
from .errors import ValidationError
from .net import MlpModel, forward

__all__ = ["Prediction", "knn_search", "aggregate_labels", "top_p", "predict"]

log = logging.getLogger(__name__)

_INV_DIST_EPS = 1e-8
_SCAN_CHUNK = 16384


@dataclass(eq=True)
class Prediction:
    """Sparse label scores plus the ranked head of the score list."""

    scores: dict[int, float]
    top_labels: list[int]


def knn_search(
    vectors: np.ndarray,
    query: np.ndarray,
    k: int,
    ids: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest rows of ``vectors`` to ``query``.

    Returns (ids, distances) ordered by ascending Euclidean distance with
    ties broken by ascending id.  ``ids`` defaults to row positions; fewer
    than k rows yield all of them.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValidationError("vectors must be a non-empty 2-d array")
    if query.shape != (vectors.shape[1],):
        raise ValidationError(
            f"query shape {query.shape} does not match vector dim {vectors.shape[1]}"
        )
    n = vectors.shape[0]
    if ids is None:
        ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValidationError("ids must align with vector rows")
    d2 = np.empty(n, dtype=np.float64)
    for s in range(0, n, _SCAN_CHUNK):
        d2[s : s + _SCAN_CHUNK] = ((vectors[s : s + _SCAN_CHUNK] - query) ** 2).sum(axis=1)
    order = np.lexsort((ids, d2))[: min(k, n)]
    return ids[order], np.sqrt(d2[order])


def aggregate_labels(
    neighbor_labels: Sequence[LabelSet],
    weighting: str = "uniform",
    distances: np.ndarray | None = None,
) -> dict[int, float]:
    """Fold neighbor label sets into one sparse score map.

    'uniform' gives every neighbor weight 1/len(neighbors), so a label held
    by every neighbor scores exactly 1.  'inverse_distance' weights neighbor
    i by 1/(distance_i + 1e-8), normalized to sum to 1.
    """
    if not neighbor_labels:
        raise ValidationError("need at least one neighbor")
    if weighting == "uniform":
        weights = np.full(len(neighbor_labels), 1.0 / len(neighbor_labels))
    elif weighting == "inverse_distance":
        if distances is None or len(distances) != len(neighbor_labels):
            raise ValidationError("inverse_distance weighting needs aligned distances")
        raw = 1.0 / (np.asarray(distances, dtype=np.float64) + _INV_DIST_EPS)
        weights = raw / raw.sum()
    else:
        raise ValidationError(f"unknown weighting {weighting!r}")
    scores: dict[int, float] = {}
    for labels, w in zip(neighbor_labels, weights.tolist()):
        for label in labels.ids.tolist():
            scores[label] = scores.get(label, 0.0) + w
    return scores


def top_p(scores: Mapping[int, float], p: int) -> list[int]:
    """The p highest-scoring labels, ties broken by ascending label index."""
    if p < 1:
        raise ValidationError("p must be >= 1")
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [label for label, _ in ranked[:p]]


def predict(
    mlp: MlpModel,
    clusters: ClusterIndex,
    train_embeds: np.ndarray,
    train_labels: Sequence[LabelSet],
    x: SparseVector,
    k: int = 10,
    p: int = 5,
    weighting: str = "uniform",
) -> Prediction:
    """Embed, route to the nearest cluster, scan its members, score labels.

    The scan uses min(k, cluster size) neighbors; a shortfall is logged.
    """
    if k < 1 or p < 1:
        raise ValidationError("k and p must be >= 1")
    fx = forward(mlp, x)
    ci = nearest_cluster(clusters, fx)
    member_ids = clusters.members[ci]
    ids, dists = knn_search(train_embeds[member_ids], fx, k, ids=member_ids)
    if ids.size < k:
        log.debug("cluster %d has %d members, fewer than k=%d", ci, ids.size, k)
    scores = aggregate_labels([train_labels[i] for i in ids.tolist()], weighting, dists)
    return Prediction(scores=scores, top_labels=top_p(scores, p) if scores else [])
