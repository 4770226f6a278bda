"""Random-walk node embeddings for the label graph.

Truncated random walks over the co-occurrence graph form a corpus; a
skip-gram model with negative sampling trained on that corpus yields one
embedding column per label.  Both stages are deterministic for a fixed seed:
walks draw from per-(node, walk) derived generators, so the corpus does not
depend on generation order, and training is single threaded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import IO

import numpy as np

from .errors import ValidationError
from .label_graph import LabelGraph

__all__ = [
    "DeepWalkConfig",
    "WalkCorpus",
    "EmbeddingMatrix",
    "SkipgramModel",
    "generate_walks",
    "train_skipgram",
    "fit_skipgram",
    "negative_sampling_objective",
    "embed_labels",
    "write_embeddings_text",
]

log = logging.getLogger(__name__)

# Sub-stream tags so walks, training, and objective evaluation never share
# a generator state.
_WALK_STREAM = 0
_TRAIN_STREAM = 1
_EVAL_STREAM = 2


@dataclass(frozen=True)
class DeepWalkConfig:
    """Hyper-parameters for walk generation and skip-gram training."""

    dim: int = 100
    walks_per_node: int = 10
    walk_length: int = 40
    window: int = 5
    negative_samples: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    weighted_walks: bool = False
    rng_seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ValidationError("embedding dim must be >= 1")
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise ValidationError("walks_per_node and walk_length must be >= 1")
        if self.window < 1:
            raise ValidationError("window must be >= 1")
        if self.window >= self.walk_length and self.walk_length > 1:
            raise ValidationError("window must be smaller than walk_length")
        if self.negative_samples < 1:
            raise ValidationError("negative_samples must be >= 1")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.initial_learning_rate <= 0 or self.min_learning_rate <= 0:
            raise ValidationError("learning rates must be positive")


@dataclass
class WalkCorpus:
    """Walks over node ids; isolated start nodes give length-1 walks."""

    walks: list[np.ndarray]
    num_nodes: int
    walk_length: int
    walks_per_node: int

    @property
    def total_tokens(self) -> int:
        return sum(w.size for w in self.walks)


@dataclass(eq=False)
class EmbeddingMatrix:
    """Dense (dim x count) matrix, one column per embedded object."""

    values: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @property
    def count(self) -> int:
        return int(self.values.shape[1])

    def column(self, j: int) -> np.ndarray:
        if j < 0 or j >= self.count:
            raise ValidationError(f"column {j} outside [0, {self.count})")
        return self.values[:, j]

    def validate(self) -> None:
        if self.values.ndim != 2 or self.dim < 1:
            raise ValidationError("embedding matrix must be 2-d with dim >= 1")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("embedding matrix contains non-finite entries")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass
class SkipgramModel:
    """Input (node) and output (context) vectors, one row per node."""

    node_vectors: np.ndarray
    context_vectors: np.ndarray
    objective_before: float | None = None
    objective_after: float | None = None


def _walk_rng(seed: int, node: int, walk_idx: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_WALK_STREAM, node, walk_idx))
    return np.random.default_rng(ss)


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def generate_walks(
    graph: LabelGraph,
    walks_per_node: int,
    walk_length: int,
    rng_seed: int = 0,
    weighted: bool = False,
) -> WalkCorpus:
    """Generate ``walks_per_node`` truncated random walks from every node.

    Each step moves to a uniformly random neighbor, or proportionally to the
    co-occurrence weight when ``weighted`` is set.  Isolated nodes produce
    singleton walks.  Each (node, walk) pair draws from its own seeded
    generator, so the corpus is identical no matter how generation is
    scheduled.
    """
    if walks_per_node < 1 or walk_length < 1:
        raise ValidationError("walks_per_node and walk_length must be >= 1")
    cumweights: list[np.ndarray | None] = [None] * graph.num_nodes
    if weighted:
        for v in range(graph.num_nodes):
            w = graph.adj_weights[v]
            cumweights[v] = np.cumsum(w, dtype=np.float64) if w.size else None

    walks: list[np.ndarray] = []
    for pass_idx in range(walks_per_node):
        for start in range(graph.num_nodes):
            if graph.adj[start].size == 0:
                walks.append(np.array([start], dtype=np.int32))
                continue
            rng = _walk_rng(rng_seed, start, pass_idx)
            walk = np.empty(walk_length, dtype=np.int32)
            walk[0] = cur = start
            for step in range(1, walk_length):
                nbrs = graph.adj[cur]
                if weighted:
                    cw = cumweights[cur]
                    r = rng.random() * cw[-1]
                    cur = int(nbrs[np.searchsorted(cw, r, side="right")])
                else:
                    cur = int(nbrs[rng.integers(nbrs.size)])
                walk[step] = cur
            walks.append(walk)
    return WalkCorpus(
        walks=walks,
        num_nodes=graph.num_nodes,
        walk_length=walk_length,
        walks_per_node=walks_per_node,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |x|
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _corpus_noise_cdf(corpus: WalkCorpus) -> np.ndarray:
    """Cumulative unigram^0.75 distribution over corpus node frequencies."""
    counts = np.zeros(corpus.num_nodes, dtype=np.float64)
    for walk in corpus.walks:
        counts += np.bincount(walk, minlength=corpus.num_nodes)
    noise = counts**0.75
    total = noise.sum()
    if total <= 0:
        raise ValidationError("empty walk corpus")
    return np.cumsum(noise / total)


def _init_node_vectors(num_nodes: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.random((num_nodes, dim)) - 0.5) / dim


def negative_sampling_objective(
    model: SkipgramModel, corpus: WalkCorpus, config: DeepWalkConfig, rng_seed: int = 0
) -> float:
    """Sampled log likelihood of the corpus under the skip-gram model.

    Uses the full window on every position and draws fresh negatives from a
    generator seeded by ``rng_seed``, so repeated calls are comparable.
    """
    rng = _stream_rng(rng_seed, _EVAL_STREAM)
    cdf = _corpus_noise_cdf(corpus)
    syn0, syn1 = model.node_vectors, model.context_vectors
    K = config.negative_samples
    total = 0.0
    pairs = 0
    for walk in corpus.walks:
        n = walk.size
        for t in range(n):
            v = syn0[walk[t]]
            lo, hi = max(0, t - config.window), min(n, t + config.window + 1)
            for u in range(lo, hi):
                if u == t:
                    continue
                ctx = int(walk[u])
                negs = np.searchsorted(cdf, rng.random(K))
                negs = negs[negs != ctx]
                total += float(np.log(_sigmoid(syn1[ctx] @ v) + 1e-12))
                if negs.size:
                    total += float(
                        np.sum(np.log(_sigmoid(-(syn1[negs] @ v)) + 1e-12))
                    )
                pairs += 1
    return total / max(pairs, 1)


def fit_skipgram(
    corpus: WalkCorpus,
    config: DeepWalkConfig,
    track_objective: bool = False,
) -> SkipgramModel:
    """Train skip-gram with negative sampling on the walk corpus.

    Single threaded and deterministic for a fixed config.  Node vectors start
    uniform in [-0.5/dim, 0.5/dim]; context vectors start at zero.  The
    learning rate decays linearly from ``initial_learning_rate`` to
    ``min_learning_rate`` over all center positions.  Negatives are drawn
    from the unigram^0.75 distribution of corpus node frequencies; draws that
    collide with the context word are dropped.
    """
    config.validate()
    L, dim = corpus.num_nodes, config.dim
    rng = _stream_rng(config.rng_seed, _TRAIN_STREAM)
    syn0 = _init_node_vectors(L, dim, rng)
    syn1 = np.zeros((L, dim), dtype=np.float64)
    model = SkipgramModel(node_vectors=syn0, context_vectors=syn1)
    if track_objective:
        model.objective_before = negative_sampling_objective(
            model, corpus, config, config.rng_seed
        )

    cdf = _corpus_noise_cdf(corpus)
    K = config.negative_samples
    lr0, lr_min = config.initial_learning_rate, config.min_learning_rate
    total_steps = max(1, config.epochs * corpus.total_tokens)
    labels = np.zeros(K + 1)
    labels[0] = 1.0
    step = 0
    for epoch in range(config.epochs):
        for wi in rng.permutation(len(corpus.walks)):
            walk = corpus.walks[wi]
            n = walk.size
            for t in range(n):
                lr = max(lr_min, lr0 * (1.0 - step / total_steps))
                step += 1
                if n < 2:
                    continue
                reach = int(rng.integers(1, config.window + 1))
                center = int(walk[t])
                v = syn0[center]  # view, updated in place
                lo, hi = max(0, t - reach), min(n, t + reach + 1)
                for u in range(lo, hi):
                    if u == t:
                        continue
                    ctx = int(walk[u])
                    negs = np.searchsorted(cdf, rng.random(K))
                    negs = negs[negs != ctx]
                    idx = np.concatenate(([ctx], negs))
                    rows = syn1[idx]  # gather copies the pre-update rows
                    g = lr * (labels[: idx.size] - _sigmoid(rows @ v))
                    np.add.at(syn1, idx, g[:, None] * v[None, :])
                    v += g @ rows
        log.debug("skip-gram epoch %d/%d done", epoch + 1, config.epochs)
    if track_objective:
        model.objective_after = negative_sampling_objective(
            model, corpus, config, config.rng_seed
        )
    return model


def train_skipgram(corpus: WalkCorpus, config: DeepWalkConfig) -> EmbeddingMatrix:
    """Train on the corpus and return the (dim x num_nodes) embedding matrix."""
    model = fit_skipgram(corpus, config)
    return EmbeddingMatrix(values=np.ascontiguousarray(model.node_vectors.T))


def embed_labels(graph: LabelGraph, config: DeepWalkConfig) -> EmbeddingMatrix:
    """Walks plus skip-gram in one call; bit-identical for a fixed seed."""
    config.validate()
    corpus = generate_walks(
        graph,
        config.walks_per_node,
        config.walk_length,
        rng_seed=config.rng_seed,
        weighted=config.weighted_walks,
    )
    return train_skipgram(corpus, config)


def write_embeddings_text(matrix: EmbeddingMatrix, stream: IO[str]) -> None:
    """One ``index v1 v2 ... v_dim`` line per column."""
    for j in range(matrix.count):
        col = " ".join(repr(float(v)) for v in matrix.values[:, j])
        stream.write(f"{j} {col}\n")
