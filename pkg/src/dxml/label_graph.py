"""Label co-occurrence graph.

Two labels are connected iff they appear together in at least one training
point; the edge weight counts how many points contain both.  The graph is
undirected, has no self loops, and keeps a node for every label id, including
labels that never occur.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .data_io import Dataset
from .errors import DataFormatError, ValidationError

__all__ = ["LabelGraph", "build_label_graph", "write_adjacency", "read_adjacency"]


@dataclass
class LabelGraph:
    """Adjacency of the co-occurrence graph, one sorted neighbor array per node."""

    num_nodes: int
    adj: list[np.ndarray] = field(repr=False)
    adj_weights: list[np.ndarray] = field(repr=False)

    @property
    def num_edges(self) -> int:
        return sum(a.size for a in self.adj) // 2

    def _check(self, node: int) -> None:
        if node < 0 or node >= self.num_nodes:
            raise ValidationError(f"node {node} outside [0, {self.num_nodes})")

    def degree(self, node: int) -> int:
        self._check(node)
        return int(self.adj[node].size)

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbor ids of ``node``."""
        self._check(node)
        return self.adj[node]

    def edge_weights(self, node: int) -> np.ndarray:
        """Co-occurrence counts aligned with ``neighbors(node)``."""
        self._check(node)
        return self.adj_weights[node]


def _from_edge_counts(
    counts: dict[tuple[int, int], int], num_nodes: int
) -> LabelGraph:
    nbr: list[list[int]] = [[] for _ in range(num_nodes)]
    wts: list[list[int]] = [[] for _ in range(num_nodes)]
    for (a, b), c in counts.items():
        nbr[a].append(b)
        wts[a].append(c)
        nbr[b].append(a)
        wts[b].append(c)
    adj, adj_weights = [], []
    for node in range(num_nodes):
        ids = np.array(nbr[node], dtype=np.int32)
        w = np.array(wts[node], dtype=np.int64)
        order = np.argsort(ids)
        adj.append(ids[order])
        adj_weights.append(w[order])
    return LabelGraph(num_nodes=num_nodes, adj=adj, adj_weights=adj_weights)


def build_label_graph(dataset: Dataset) -> LabelGraph:
    """Count pairwise label co-occurrences across all points of ``dataset``."""
    counts: dict[tuple[int, int], int] = {}
    for _, label_set in dataset.points:
        ids = label_set.ids.tolist()
        for i in range(len(ids)):
            a = ids[i]
            for j in range(i + 1, len(ids)):
                key = (a, ids[j])
                counts[key] = counts.get(key, 0) + 1
    return _from_edge_counts(counts, dataset.num_labels)


def write_adjacency(graph: LabelGraph, stream: IO[str]) -> None:
    """Write one ``i j weight`` line per undirected edge, i < j, sorted."""
    stream.write(f"{graph.num_nodes}\n")
    for i in range(graph.num_nodes):
        nbrs = graph.adj[i]
        wts = graph.adj_weights[i]
        for j, w in zip(nbrs.tolist(), wts.tolist()):
            if i < j:
                stream.write(f"{i} {j} {w}\n")


def read_adjacency(stream: IO[str], num_nodes: int | None = None) -> LabelGraph:
    """Parse the edge-list format produced by write_adjacency."""
    lines = iter(stream)
    try:
        first = next(lines).strip()
    except StopIteration:
        raise DataFormatError("empty adjacency file", line=1) from None
    try:
        declared = int(first)
    except ValueError:
        raise DataFormatError(f"malformed node count {first!r}", line=1) from None
    if num_nodes is None:
        num_nodes = declared
    elif num_nodes != declared:
        raise DataFormatError(
            f"adjacency file declares {declared} nodes, expected {num_nodes}", line=1
        )
    counts: dict[tuple[int, int], int] = {}
    lineno = 1
    for raw in lines:
        lineno += 1
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DataFormatError(f"malformed edge line {line!r}", line=lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
            w = int(parts[2]) if len(parts) == 3 else 1
        except ValueError:
            raise DataFormatError(f"malformed edge line {line!r}", line=lineno) from None
        if a == b:
            raise DataFormatError(f"self loop on node {a}", line=lineno)
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise DataFormatError(f"edge endpoint outside [0, {num_nodes})", line=lineno)
        if w <= 0:
            raise DataFormatError(f"non-positive edge weight {w}", line=lineno)
        key = (min(a, b), max(a, b))
        if key in counts:
            raise DataFormatError(f"duplicate edge {key[0]} {key[1]}", line=lineno)
        counts[key] = w
    return _from_edge_counts(counts, num_nodes)
