"""Ranking metrics: precision@k and nDCG@k.

Scores are ranked descending with ties broken by ascending label index.
DCG discounts the j-th ranked hit by 1/log2(j + 1) counting positions from
1; the normalizer assumes the min(k, |y|) best positions are all hits.
Points with no true labels contribute 0 to both metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data_io import Dataset, LabelSet
from .errors import ValidationError

__all__ = ["MetricReport", "rank_k", "precision_at_k", "ndcg_at_k", "evaluate"]


def rank_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores, descending, ties by ascending index."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValidationError("scores must be a non-empty 1-d vector")
    order = np.lexsort((np.arange(s.size), -s))
    return order[: min(k, s.size)]


def precision_at_k(scores: np.ndarray, truth: LabelSet, k: int) -> float:
    """Fraction of the top-k ranked labels that are true, divided by k."""
    ranked = rank_k(scores, k)
    hits = int(np.isin(ranked, truth.ids).sum())
    return hits / k


def ndcg_at_k(scores: np.ndarray, truth: LabelSet, k: int) -> float:
    """Position-discounted gain over the best achievable at this k; 0 if no truth.

    Both sums accumulate sequentially in rank-position order so the result is
    bit-for-bit the textbook left-to-right evaluation of the formula.
    """
    if len(truth) == 0:
        return 0.0
    ranked = rank_k(scores, k)
    truth_ids = set(truth.ids.tolist())
    dcg = 0.0
    for pos, label in enumerate(ranked.tolist(), 1):
        if label in truth_ids:
            dcg += 1.0 / math.log2(pos + 1)
    ideal = 0.0
    for pos in range(1, min(k, len(truth)) + 1):
        ideal += 1.0 / math.log2(pos + 1)
    return dcg / ideal


@dataclass(eq=True)
class MetricReport:
    """Mean metrics over a test set, stored as raw fractions in [0, 1]."""

    ks: tuple[int, ...]
    precision: dict[int, float]
    ndcg: dict[int, float]
    num_points: int
    num_skipped: int = 0

    def format_table(self) -> str:
        header = f"{'k':>4}  {'P@k':>8}  {'nDCG@k':>8}"
        rows = [header, "-" * len(header)]
        for k in self.ks:
            rows.append(
                f"{k:>4}  {100.0 * self.precision[k]:>8.2f}  {100.0 * self.ndcg[k]:>8.2f}"
            )
        rows.append(f"points evaluated: {self.num_points}, skipped: {self.num_skipped}")
        return "\n".join(rows)

    def format_kv(self) -> str:
        lines = []
        for k in self.ks:
            lines.append(f"P@{k}={100.0 * self.precision[k]:.2f}")
        for k in self.ks:
            lines.append(f"nDCG@{k}={100.0 * self.ndcg[k]:.2f}")
        lines.append(f"points={self.num_points}")
        lines.append(f"skipped={self.num_skipped}")
        return "\n".join(lines) + "\n"


def evaluate(
    score_maps: Sequence[Mapping[int, float]],
    dataset: Dataset,
    ks: Sequence[int] = (1, 3, 5),
    skip_unlabeled: bool = False,
) -> MetricReport:
    """Average P@k and nDCG@k of sparse score maps against ``dataset`` truth.

    Unlabeled test points count as zeros unless ``skip_unlabeled`` excludes
    them from the average.
    """
    if len(score_maps) != dataset.num_points:
        raise ValidationError(
            f"{len(score_maps)} score maps for {dataset.num_points} test points"
        )
    ks = tuple(ks)
    if not ks or any(k < 1 for k in ks):
        raise ValidationError("ks must be a non-empty list of positive ints")
    dense = np.zeros(dataset.num_labels, dtype=np.float64)
    p_sums = {k: 0.0 for k in ks}
    n_sums = {k: 0.0 for k in ks}
    counted = 0
    skipped = 0
    for point_scores, (_, truth) in zip(score_maps, dataset.points):
        if skip_unlabeled and len(truth) == 0:
            skipped += 1
            continue
        touched = list(point_scores.keys())
        for label in touched:
            if not 0 <= label < dataset.num_labels:
                raise ValidationError(f"score for label {label} outside [0, {dataset.num_labels})")
            dense[label] = point_scores[label]
        for k in ks:
            p_sums[k] += precision_at_k(dense, truth, k)
            n_sums[k] += ndcg_at_k(dense, truth, k)
        counted += 1
        for label in touched:
            dense[label] = 0.0
    if counted == 0:
        raise ValidationError("no test points to evaluate")
    return MetricReport(
        ks=ks,
        precision={k: p_sums[k] / counted for k in ks},
        ndcg={k: n_sums[k] / counted for k in ks},
        num_points=counted,
        num_skipped=skipped,
    )
