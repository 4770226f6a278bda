"""K-means partitioning of the embedded training points.

Lloyd iterations over k-means++ seeds.  Clusters route test points to a
small candidate pool for the k-NN stage, so the index keeps both the center
matrix and the per-cluster member lists.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

__all__ = ["ClusterIndex", "kmeans", "nearest_cluster"]

log = logging.getLogger(__name__)

_CHUNK = 8192


@dataclass(eq=False)
class ClusterIndex:
    """Centers (one row each), per-point assignments, per-cluster members."""

    centers: np.ndarray
    assignments: np.ndarray
    members: list[np.ndarray]
    wcss_history: list[float] = field(default_factory=list)

    @property
    def num_clusters(self) -> int:
        return int(self.centers.shape[0])

    def validate(self) -> None:
        n = self.assignments.size
        if self.centers.ndim != 2 or self.num_clusters < 1:
            raise ValidationError("centers must be a non-empty 2-d array")
        if len(self.members) != self.num_clusters:
            raise ValidationError("members list does not match cluster count")
        if np.any(self.assignments < 0) or np.any(self.assignments >= self.num_clusters):
            raise ValidationError("assignment outside cluster range")
        seen = np.concatenate([m for m in self.members]) if self.members else np.empty(0)
        if seen.size != n or np.unique(seen).size != n:
            raise ValidationError("members do not partition the points")
        for c, ids in enumerate(self.members):
            if ids.size == 0:
                raise ValidationError(f"cluster {c} is empty")
            if np.any(self.assignments[ids] != c):
                raise ValidationError("members inconsistent with assignments")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterIndex):
            return NotImplemented
        return (
            np.array_equal(self.centers, other.centers)
            and np.array_equal(self.assignments, other.assignments)
            and len(self.members) == len(other.members)
            and all(np.array_equal(a, b) for a, b in zip(self.members, other.members))
        )


def _sq_dists_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    return ((points - center) ** 2).sum(axis=1)


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.int64)
    for s in range(0, n, _CHUNK):
        block = points[s : s + _CHUNK]
        d = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        out[s : s + _CHUNK] = np.argmin(d, axis=1)
    return out


def _wcss(points: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> float:
    total = 0.0
    for s in range(0, points.shape[0], _CHUNK):
        block = points[s : s + _CHUNK]
        total += float(((block - centers[assign[s : s + _CHUNK]]) ** 2).sum())
    return total


def _seed_centers(points: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++: first seed uniform, then proportional to squared distance."""
    n = points.shape[0]
    centers = np.empty((m, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(rng.integers(n))]
    d2 = _sq_dists_to(points, centers[0])
    for c in range(1, m):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))  # all remaining mass on duplicates
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        centers[c] = points[idx]
        np.minimum(d2, _sq_dists_to(points, centers[c]), out=d2)
    return centers


def kmeans(
    points: Sequence[np.ndarray] | np.ndarray,
    num_clusters: int,
    max_iters: int = 100,
    rng_seed: int = 0,
) -> ClusterIndex:
    """Cluster rows of ``points`` into ``num_clusters`` groups.

    Deterministic for a fixed seed.  The recorded within-cluster sum of
    squares is non-increasing across iterations; a cluster that empties is
    reseeded at the point currently farthest from its assigned center.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("points must be a non-empty 2-d array")
    n = pts.shape[0]
    if num_clusters < 1:
        raise ValidationError("num_clusters must be >= 1")
    if num_clusters > n:
        raise ValidationError(f"num_clusters {num_clusters} exceeds point count {n}")
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    rng = np.random.default_rng(rng_seed)
    centers = _seed_centers(pts, num_clusters, rng)
    assign = _assign(pts, centers)
    history = [_wcss(pts, centers, assign)]
    for _ in range(max_iters):
        centers = centers.copy()
        empties = []
        for c in range(num_clusters):
            mask = assign == c
            if mask.any():
                centers[c] = pts[mask].mean(axis=0)
            else:
                empties.append(c)
        if empties:
            d_own = ((pts - centers[assign]) ** 2).sum(axis=1)
            for c in empties:
                far = int(np.argmax(d_own))
                centers[c] = pts[far]
                d_own[far] = -1.0  # one donor per empty cluster
            log.debug("reseeded %d empty clusters", len(empties))
        new_assign = _assign(pts, centers)
        history.append(_wcss(pts, centers, new_assign))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    members = [np.flatnonzero(assign == c) for c in range(num_clusters)]
    if any(m.size == 0 for m in members):
        raise ValidationError(
            "could not form that many non-empty clusters; too many duplicate points"
        )
    index = ClusterIndex(
        centers=centers, assignments=assign, members=members, wcss_history=history
    )
    index.validate()
    return index


def nearest_cluster(index: ClusterIndex, query: np.ndarray) -> int:
    """Cluster whose center is Euclidean-nearest to ``query``; ties pick the lowest id."""
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.centers.shape[1],):
        raise ValidationError(
            f"query shape {query.shape} does not match center dim {index.centers.shape[1]}"
        )
    d = ((index.centers - query) ** 2).sum(axis=1)
    return int(np.argmin(d))
