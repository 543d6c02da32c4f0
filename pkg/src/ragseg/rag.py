"""Region adjacency graph construction and region merging."""

from dataclasses import dataclass, field

import numpy as np

from . import features
from .imgio import compact_labels


@dataclass
class Rag:
    n: int
    edges: np.ndarray                      # (m, 2) int, i < j, unique
    weights: np.ndarray | None = field(default=None)   # (m,) or None


def build_rag(labels):
    """One node per region, an edge per 4-adjacent pair of distinct labels."""
    labels = np.asarray(labels)
    n = int(labels.max()) + 1
    present = np.bincount(labels.ravel(), minlength=n)
    if np.any(present == 0):
        raise ValueError("label map is not compact")
    pairs = []
    h = np.stack([labels[:, :-1].ravel(), labels[:, 1:].ravel()], axis=1)
    v = np.stack([labels[:-1, :].ravel(), labels[1:, :].ravel()], axis=1)
    for p in (h, v):
        p = p[p[:, 0] != p[:, 1]]
        pairs.append(np.sort(p, axis=1))
    if pairs:
        allp = np.concatenate(pairs)
        edges = np.unique(allp, axis=0) if allp.size else np.empty((0, 2), dtype=int)
    else:
        edges = np.empty((0, 2), dtype=int)
    return Rag(n=n, edges=edges.astype(np.int64))


def weight_rag(rag, stats, params):
    """Attach a similarity weight to every RAG edge."""
    if len(stats) < rag.n:
        raise ValueError(f"stats for {len(stats)} regions, graph has {rag.n} nodes")
    w = np.empty(len(rag.edges))
    for k, (i, j) in enumerate(rag.edges):
        w[k] = features.edge_weight(stats[i], stats[j], params)
    return Rag(n=rag.n, edges=rag.edges, weights=w)


def merge_by_partition(labels, assignment):
    """Replace every region label by its community id, then compact.

    Communities that are spatially disconnected stay one region; the
    community, not connectivity, defines the segment.
    """
    labels = np.asarray(labels)
    assignment = np.asarray(assignment)
    n = int(labels.max()) + 1
    if assignment.shape[0] != n:
        raise ValueError(f"partition covers {assignment.shape[0]} nodes, "
                         f"label map has {n} regions")
    return compact_labels(assignment[labels])


def dump_edge_list(rag, path):
    """Debug dump: one "i j w" line per edge."""
    with open(path, "w") as f:
        for k, (i, j) in enumerate(rag.edges):
            w = 0.0 if rag.weights is None else rag.weights[k]
            f.write(f"{i} {j} {w:.12g}\n")
