"""Toy graph builders and synthetic tasks used by the demos and harness."""

from __future__ import annotations

import numpy as np

from .eig import dense_eig
from .graph import GraphSignal, GsoKind, SparseSymMatrix, build_laplacian


def _graph(n, edges, features=None, labels=None):
    adj = SparseSymMatrix.from_entries(n, edges)
    if features is None:
        features = np.zeros((n, 0))
    return GraphSignal(adj, features, labels)


def path_graph(n: int, features=None) -> GraphSignal:
    return _graph(n, [(i, i + 1, 1.0) for i in range(n - 1)], features)


def cycle_graph(n: int, features=None) -> GraphSignal:
    return _graph(n, [(i, (i + 1) % n, 1.0) for i in range(n)], features)


def complete_graph(n: int, features=None) -> GraphSignal:
    return _graph(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)], features)


def star_graph(leaves: int, features=None) -> GraphSignal:
    return _graph(leaves + 1, [(0, i + 1, 1.0) for i in range(leaves)], features)


def grid_graph(m: int, features=None) -> GraphSignal:
    """m x m circular (torus) grid with 4-neighbor connectivity."""
    edges = []
    for i in range(m):
        for j in range(m):
            a = i * m + j
            edges.append((a, i * m + (j + 1) % m, 1.0))
            edges.append((a, ((i + 1) % m) * m + j, 1.0))
    return _graph(m * m, edges, features)


def erdos_renyi(n: int, p: float, seed: int, features=None,
                ensure_connected: bool = True) -> GraphSignal:
    """G(n, p) sample; optionally augmented with a spanning path so the
    graph is connected (keeps spectra generic while avoiding isolated nodes)."""
    rng = np.random.default_rng(seed)
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    if ensure_connected:
        edges += [(i, i + 1, 1.0) for i in range(n - 1)]
    seen = set()
    dedup = []
    for i, j, w in edges:
        if (i, j) not in seen:
            seen.add((i, j))
            dedup.append((i, j, w))
    return _graph(n, dedup, features)


def two_block_sbm(block_size: int = 30, p_in: float = 0.5, p_out: float = 0.02,
                  seed: int = 0, feature_pairs: int = 4) -> GraphSignal:
    """Two-block stochastic block model node-classification task.

    Node features are the entries of the leading eigenvectors of the
    combinatorial Laplacian (one column per retained pair), which is the
    natural spectral embedding for this task. Labels are the block ids.
    """
    n = 2 * block_size
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], block_size)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                edges.append((i, j, 1.0))
    g = _graph(n, edges, labels=labels)
    basis = dense_eig(build_laplacian(g, GsoKind.COMBINATORIAL))
    feats = basis.eigenvectors[:, :feature_pairs].copy()
    return GraphSignal(g.adjacency, feats, labels)


def cycle_vs_path_dataset(n_min: int = 8, n_max: int = 16, per_size: int = 3,
                          seed: int = 0, jitter: float = 0.1) -> list:
    """Graph-classification toy task: label 0 for cycles, 1 for paths.

    Replicas of each size get their edge weights jittered by up to
    +/- jitter so no two graphs are identical; each graph carries its
    weighted node degree as the single feature channel. The list order is
    shuffled deterministically.
    """
    rng = np.random.default_rng(seed)
    graphs = []
    for n in range(n_min, n_max + 1):
        for _ in range(per_size):
            for label, edges in ((0, [(i, (i + 1) % n) for i in range(n)]),
                                 (1, [(i, i + 1) for i in range(n - 1)])):
                weights = 1.0 + jitter * rng.uniform(-1.0, 1.0, size=len(edges))
                adj = SparseSymMatrix.from_entries(
                    n, [(i, j, w) for (i, j), w in zip(edges, weights)]
                )
                graphs.append(GraphSignal(adj, adj.degrees()[:, None], label))
    order = rng.permutation(len(graphs))
    return [graphs[i] for i in order]
