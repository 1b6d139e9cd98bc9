"""Graph representation, shift operators, and signal norms.

Graphs are undirected and weighted. All floating point data is float64;
core containers are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, DimensionMismatch


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class GsoKind(enum.Enum):
    """Which graph shift operator to build from an adjacency matrix."""

    COMBINATORIAL = "combinatorial"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class SparseSymMatrix:
    """Sparse symmetric matrix stored once per unordered index pair.

    ``rows``/``cols``/``vals`` hold the canonical entries with
    ``rows[k] <= cols[k]``; the value at (i, j) always equals the value at
    (j, i). Duplicate entries passed to :meth:`from_entries` are summed and
    explicit zeros are dropped.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @staticmethod
    def from_entries(n, entries) -> "SparseSymMatrix":
        if n < 0:
            raise DataError(f"node count must be nonnegative, got {n}")
        if len(entries) == 0:
            empty = np.zeros(0)
            return SparseSymMatrix(n, _readonly(empty.astype(np.int64)),
                                   _readonly(empty.astype(np.int64)), _readonly(empty))
        arr = np.asarray([(min(i, j), max(i, j), w) for i, j, w in entries], dtype=np.float64)
        r = arr[:, 0].astype(np.int64)
        c = arr[:, 1].astype(np.int64)
        if r.min() < 0 or c.max() >= n:
            raise DataError(f"edge index out of range [0, {n})")
        # sum duplicates of the same unordered pair
        key = r * n + c
        order = np.argsort(key, kind="stable")
        key, r, c, w = key[order], r[order], c[order], arr[:, 2][order]
        uniq, start = np.unique(key, return_index=True)
        sums = np.add.reduceat(w, start)
        keep = sums != 0.0
        return SparseSymMatrix(
            n,
            _readonly((uniq[keep] // n).astype(np.int64)),
            _readonly((uniq[keep] % n).astype(np.int64)),
            _readonly(sums[keep]),
        )

    @staticmethod
    def from_dense(a: np.ndarray) -> "SparseSymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected square matrix, got shape {a.shape}")
        if not np.allclose(a, a.T, atol=1e-12):
            raise DataError("matrix is not symmetric")
        iu, ju = np.nonzero(np.triu(a))
        return SparseSymMatrix(a.shape[0], _readonly(iu.astype(np.int64)),
                               _readonly(ju.astype(np.int64)), _readonly(a[iu, ju]))

    @property
    def nnz_stored(self) -> int:
        return self.vals.shape[0]

    def _csr(self):
        """CSR arrays of the full (mirrored) matrix, built once and cached."""
        cached = self.__dict__.get("_csr_cache")
        if cached is not None:
            return cached
        off = self.rows != self.cols
        i_full = np.concatenate([self.rows, self.cols[off]])
        j_full = np.concatenate([self.cols, self.rows[off]])
        v_full = np.concatenate([self.vals, self.vals[off]])
        order = np.lexsort((j_full, i_full))
        i_full, j_full, v_full = i_full[order], j_full[order], v_full[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, i_full + 1, 1)
        indptr = np.cumsum(indptr)
        cache = (_readonly(indptr), _readonly(j_full), _readonly(v_full))
        self.__dict__["_csr_cache"] = cache
        return cache

    def matmul(self, x: np.ndarray) -> np.ndarray:
        return spmv(self, x)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.vals
        a[self.cols, self.rows] = self.vals
        return a

    def degrees(self) -> np.ndarray:
        """Weighted degree per node; diagonal entries count once."""
        d = np.zeros(self.n)
        np.add.at(d, self.rows, self.vals)
        off = self.rows != self.cols
        np.add.at(d, self.cols[off], self.vals[off])
        return d

    def permuted(self, perm: np.ndarray) -> "SparseSymMatrix":
        """Relabel nodes: entry (i, j) moves to (perm[i], perm[j])."""
        perm = np.asarray(perm, dtype=np.int64)
        return SparseSymMatrix.from_entries(
            self.n, list(zip(perm[self.rows], perm[self.cols], self.vals))
        )

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(self.rows.tobytes())
        h.update(self.cols.tobytes())
        h.update(self.vals.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class GraphSignal:
    """Undirected weighted graph with node features and optional labels.

    ``labels`` is either a per-node integer vector (node tasks) or a single
    integer (graph tasks). ``mask`` is an optional train/val/test assignment
    produced by the splitting helpers.
    """

    adjacency: SparseSymMatrix
    features: np.ndarray
    labels: object = None
    mask: object = None
    allow_self_loops: bool = False

    def __post_init__(self):
        adj = self.adjacency
        if np.any(adj.vals < 0):
            raise DataError("adjacency weights must be nonnegative")
        if not self.allow_self_loops and np.any(adj.rows == adj.cols):
            raise DataError("self-loops present but not flagged")
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != adj.n:
            raise DimensionMismatch(
                f"feature rows ({x.shape[0]}) != node count ({adj.n})"
            )
        object.__setattr__(self, "features", _readonly(x))
        if self.labels is not None and not np.isscalar(self.labels):
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (adj.n,):
                raise DimensionMismatch(
                    f"label length ({lab.shape}) != node count ({adj.n})"
                )
            object.__setattr__(self, "labels", _readonly(lab))

    @property
    def n(self) -> int:
        return self.adjacency.n

    @property
    def num_channels(self) -> int:
        return self.features.shape[1]

    def with_features(self, x: np.ndarray) -> "GraphSignal":
        return GraphSignal(self.adjacency, x, self.labels, self.mask, self.allow_self_loops)

    def permuted(self, perm: np.ndarray) -> "GraphSignal":
        """Joint relabeling of adjacency, features, and per-node labels."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.shape[0])
        labels = self.labels
        if labels is not None and not np.isscalar(labels):
            labels = np.asarray(labels)[inv]
        return GraphSignal(self.adjacency.permuted(perm), self.features[inv],
                           labels, None, self.allow_self_loops)


def build_laplacian(g: GraphSignal, kind: GsoKind = GsoKind.COMBINATORIAL,
                    strict: bool = False) -> SparseSymMatrix:
    """Combinatorial (D - A) or symmetric-normalized graph Laplacian.

    Isolated nodes under the normalized kind use the convention
    d^{-1/2} = 0, zeroing the corresponding row and column; with
    ``strict=True`` a zero degree raises instead.
    """
    adj = g.adjacency
    deg = adj.degrees()
    if kind is GsoKind.COMBINATORIAL:
        entries = [(int(i), int(i), float(d)) for i, d in enumerate(deg) if d != 0.0]
        entries += [(int(i), int(j), -float(w))
                    for i, j, w in zip(adj.rows, adj.cols, adj.vals) if i != j]
        return SparseSymMatrix.from_entries(adj.n, entries)
    if kind is GsoKind.NORMALIZED:
        if strict and np.any(deg == 0.0):
            raise DataError("zero-degree node under normalized Laplacian (strict mode)")
        with np.errstate(divide="ignore"):
            dinv = np.where(deg > 0.0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
        entries = [(int(i), int(i), 1.0) for i in range(adj.n) if deg[i] > 0.0]
        entries += [
            (int(i), int(j), -float(w) * dinv[i] * dinv[j])
            for i, j, w in zip(adj.rows, adj.cols, adj.vals)
            if i != j
        ]
        return SparseSymMatrix.from_entries(adj.n, entries)
    raise ValueError(f"unknown GSO kind: {kind}")


def spmv(m: SparseSymMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse symmetric matrix times dense matrix, column-wise."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] != m.n:
        raise DimensionMismatch(f"matrix is {m.n}x{m.n}, operand has {x.shape[0]} rows")
    indptr, indices, data = m._csr()
    y = _kernels.csr_matvec(indptr, indices, data, x)
    return y[:, 0] if squeeze else y


def channel_norms(x: np.ndarray) -> np.ndarray:
    """Euclidean norm of each column of x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return np.sqrt(np.sum(x * x, axis=0))


def channel_lp_norms(x: np.ndarray, p: float, normalized: bool = False) -> np.ndarray:
    """Column-wise L_p norm, optionally with the 1/n-normalized convention."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if np.isinf(p):
        return np.max(np.abs(x), axis=0)
    s = np.sum(np.abs(x) ** p, axis=0)
    if normalized:
        s = s / x.shape[0]
    return s ** (1.0 / p)


def add_degree_features(g: GraphSignal) -> GraphSignal:
    """Append each node's weighted degree as a feature column."""
    deg = g.adjacency.degrees()[:, None]
    if g.features.size == 0:
        x = deg
    else:
        x = np.hstack([g.features, deg])
    return GraphSignal(g.adjacency, x, g.labels, g.mask, g.allow_self_loops)


def is_connected(adj: SparseSymMatrix) -> bool:
    """Breadth-first connectivity test (an empty graph counts as connected)."""
    n = adj.n
    if n <= 1:
        return True
    indptr, indices, _ = adj._csr()
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in indices[indptr[i]:indptr[i + 1]]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())
