"""Label-set targets in embedding space.

A point's target is the mean of its labels' embedding columns, optionally
scaled to unit norm so it lives on the same sphere as the network output.
"""

from __future__ import annotations

import numpy as np

from .data_io import Dataset, LabelSet
from .errors import DegenerateTargetError, UnlabeledPointError, ValidationError
from .graph_embed import EmbeddingMatrix

__all__ = ["project_label_vector", "project_targets"]

_DEGENERATE_NORM = 1e-12


def project_label_vector(
    embeddings: EmbeddingMatrix, labels: LabelSet, normalize: bool = True
) -> np.ndarray:
    """Average the embedding columns named by ``labels``.

    With ``normalize`` the mean is rescaled to unit Euclidean norm; a mean
    whose norm falls below 1e-12 is reported as degenerate instead of being
    divided out.  An empty label set is an error: such points carry no
    training signal and the caller decides whether to skip them.
    """
    if len(labels) == 0:
        raise UnlabeledPointError("cannot project an empty label set")
    if labels.ids[-1] >= embeddings.count or labels.ids[0] < 0:
        raise ValidationError(
            f"label id outside [0, {embeddings.count})"
        )
    mean = embeddings.values[:, labels.ids].mean(axis=1)
    if not normalize:
        return mean
    nrm = float(np.linalg.norm(mean))
    if nrm < _DEGENERATE_NORM:
        raise DegenerateTargetError(
            f"averaged label embedding has norm {nrm:.3e}, cannot normalize"
        )
    return mean / nrm


def project_targets(
    embeddings: EmbeddingMatrix, dataset: Dataset, normalize: bool = True
) -> tuple[np.ndarray, list[int], int]:
    """Targets for every labeled point of ``dataset``.

    Returns (targets, point_ids, skipped) where ``targets[i]`` belongs to
    ``dataset.points[point_ids[i]]`` and ``skipped`` counts unlabeled points.
    """
    targets: list[np.ndarray] = []
    point_ids: list[int] = []
    skipped = 0
    for i, (_, labels) in enumerate(dataset.points):
        if len(labels) == 0:
            skipped += 1
            continue
        targets.append(project_label_vector(embeddings, labels, normalize=normalize))
        point_ids.append(i)
    stacked = (
        np.stack(targets) if targets else np.empty((0, embeddings.dim), dtype=np.float64)
    )
    return stacked, point_ids, skipped
