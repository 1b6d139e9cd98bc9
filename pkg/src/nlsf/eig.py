"""Partial and dense eigendecomposition of graph shift operators.

Eigenpairs are sorted by ascending eigenvalue magnitude and grouped into
eigenspaces (runs of numerically equal eigenvalues). Downstream code must
only ever consume eigenspace projections, never individual eigenvectors:
the sign and in-space rotation of the returned vectors is unspecified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatch, MaxIterExceeded
from .graph import SparseSymMatrix, spmv

DENSE_MAX_N = 4096


@dataclass(frozen=True)
class EigConfig:
    num_pairs: int = 8
    residual_tol: float = 1e-8
    group_tol: float = 1e-8
    max_iter: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.num_pairs < 1:
            raise DataError("num_pairs must be >= 1")
        if self.residual_tol <= 0 or self.group_tol <= 0:
            raise DataError("tolerances must be positive")


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of a GSO with eigenspace grouping.

    eigenvalues: shape (m,), sorted by |lambda| ascending.
    eigenvectors: shape (n, m), orthonormal columns.
    groups: tuple of (start, stop) ranges partitioning [0, m) into
        eigenspaces.
    lambda_max: largest-magnitude eigenvalue of the *full* operator (exact
        when complete, a power-iteration estimate otherwise).
    complete: True iff m == n.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    groups: tuple
    lambda_max: float
    complete: bool
    iterations: int = 0

    def __post_init__(self):
        w = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        v = np.ascontiguousarray(self.eigenvectors, dtype=np.float64)
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def num_pairs(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    def group_columns(self, i: int) -> np.ndarray:
        start, stop = self.groups[i]
        return self.eigenvectors[:, start:stop]

    def validate(self, delta: SparseSymMatrix | None = None,
                 residual_tol: float = 1e-8) -> None:
        """Check orthonormality, ordering, grouping, and (optionally) residuals."""
        v = self.eigenvectors
        gram = v.T @ v
        if not np.allclose(gram, np.eye(v.shape[1]), atol=1e-8):
            raise DataError("eigenvector columns are not orthonormal")
        mags = np.abs(self.eigenvalues)
        if np.any(np.diff(mags) < -1e-12):
            raise DataError("eigenvalues not sorted by ascending magnitude")
        covered = []
        for start, stop in self.groups:
            covered.extend(range(start, stop))
        if covered != list(range(self.num_pairs)):
            raise DataError("groups do not partition the eigenpair range")
        if delta is not None:
            resid = spmv(delta, v) - v * self.eigenvalues[None, :]
            scale = np.maximum(1.0, mags)
            worst = np.sqrt(np.sum(resid * resid, axis=0)) / scale
            if np.any(worst > residual_tol):
                raise DataError(f"eigenpair residual {worst.max():.3e} above tolerance")


def group_eigenspaces(eigenvalues: np.ndarray, group_tol: float = 1e-8) -> tuple:
    """Partition eigenvalues (sorted by |lambda|) into runs of equal values.

    Consecutive values within group_tol * max(1, |lambda_i|) of each other
    share a group; the relation is chained transitively.
    """
    w = np.asarray(eigenvalues, dtype=np.float64)
    if w.size == 0:
        return ()
    groups = []
    start = 0
    for i in range(w.size - 1):
        if abs(w[i] - w[i + 1]) > group_tol * max(1.0, abs(w[i])):
            groups.append((start, i + 1))
            start = i + 1
    groups.append((start, w.size))
    return tuple(groups)


def dense_eig(delta: SparseSymMatrix, group_tol: float = 1e-8,
              max_n: int = DENSE_MAX_N) -> SpectralBasis:
    """Complete eigendecomposition via the dense symmetric solver."""
    if delta.n > max_n:
        raise DataError(f"dense eigendecomposition capped at n <= {max_n}, got {delta.n}")
    if delta.n == 0:
        return SpectralBasis(np.zeros(0), np.zeros((0, 0)), (), 0.0, True)
    w, v = np.linalg.eigh(delta.to_dense())
    order = np.argsort(np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    lam_max = float(np.abs(w).max())
    return SpectralBasis(w, v, group_eigenspaces(w, group_tol), lam_max, True)


def lanczos_smallest(delta: SparseSymMatrix, cfg: EigConfig) -> SpectralBasis:
    """Eigenpairs of smallest eigenvalue via Lanczos with full reorthogonalization.

    Intended for PSD operators (Laplacians), where smallest eigenvalue and
    smallest magnitude coincide. The Krylov basis is expanded by repeated
    matvec with two-pass reorthogonalization against all previous vectors;
    Ritz pairs come from the projected operator. Deterministic given
    cfg.seed. Raises MaxIterExceeded (carrying the partial basis) if the
    residual tolerance is not met within cfg.max_iter expansion rounds.
    """
    n = delta.n
    j_req = cfg.num_pairs
    if j_req > n:
        raise DimensionMismatch(f"requested {j_req} pairs from an operator of size {n}")
    rng = np.random.default_rng(cfg.seed)

    cols: list[np.ndarray] = []

    def _orthonormal(vec):
        for _ in range(2):
            for u in cols:
                vec = vec - u * (u @ vec)
        nrm = np.linalg.norm(vec)
        return (vec / nrm, nrm) if nrm > 1e-10 else (vec, 0.0)

    def _fresh():
        for _ in range(50):
            vec, nrm = _orthonormal(rng.standard_normal(n))
            if nrm > 0.0:
                return vec
        raise DataError("could not draw a start vector orthogonal to the basis")

    target = min(n, max(2 * j_req, j_req + 8))
    iters = 0
    restart = True
    w = v = None
    worst = np.inf
    while True:
        while len(cols) < target:
            if restart:
                cols.append(_fresh())
                restart = False
                continue
            vec, nrm = _orthonormal(spmv(delta, cols[-1]))
            if nrm == 0.0:
                # invariant subspace exhausted; continue from a fresh vector
                cols.append(_fresh())
            else:
                cols.append(vec)
        q = np.column_stack(cols)
        aq = spmv(delta, q)
        theta, s = np.linalg.eigh(q.T @ aq)
        take = np.argsort(theta, kind="stable")[:j_req]
        w = theta[take]
        v = q @ s[:, take]
        resid = aq @ s[:, take] - v * w[None, :]
        rnorm = np.sqrt(np.sum(resid * resid, axis=0))
        worst = float((rnorm / np.maximum(1.0, np.abs(w))).max())
        iters += 1
        if worst <= cfg.residual_tol or len(cols) >= n:
            break
        if iters >= cfg.max_iter:
            basis = _finish(delta, w, v, cfg, iters, complete=(j_req == n))
            raise MaxIterExceeded(
                f"residual {worst:.3e} above {cfg.residual_tol:.1e} after {iters} rounds",
                basis=basis, worst_residual=worst,
            )
        target = min(n, target + max(j_req, 8))

    if worst > cfg.residual_tol:
        # Krylov space spans R^n yet residuals still miss the tolerance;
        # the dense solve of the same operator is exact at this size.
        w_all, v_all = np.linalg.eigh(delta.to_dense())
        take = np.argsort(w_all, kind="stable")[:j_req]
        w, v = w_all[take], v_all[:, take]
    return _finish(delta, w, v, cfg, iters, complete=(j_req == n))


def _finish(delta, w, v, cfg, iters, complete):
    order = np.argsort(np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    # re-orthonormalize within degenerate clusters (Ritz vectors can drift)
    groups = group_eigenspaces(w, cfg.group_tol)
    v = v.copy()
    for start, stop in groups:
        if stop - start > 1:
            qq, _ = np.linalg.qr(v[:, start:stop])
            v[:, start:stop] = qq
    if complete:
        lam_max = float(np.abs(w).max()) if w.size else 0.0
    else:
        lam_max = estimate_lambda_max(delta, seed=cfg.seed)
    return SpectralBasis(w, v, groups, lam_max, complete, iterations=iters)


def estimate_lambda_max(delta: SparseSymMatrix, seed: int = 0, iters: int = 200) -> float:
    """Power-iteration estimate of the largest eigenvalue magnitude."""
    n = delta.n
    if n == 0 or delta.nnz_stored == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = spmv(delta, x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        lam = float(abs(x @ spmv(delta, x)))
    return lam


def project_group(basis: SpectralBasis, i: int, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection of x onto the i-th eigenspace (V_i V_i^T x)."""
    if i < 0 or i >= basis.num_groups:
        raise IndexError(f"group index {i} out of range [0, {basis.num_groups})")
    v = basis.group_columns(i)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"signal has {x.shape[0]} rows, basis has {v.shape[0]}")
    return v @ (v.T @ x)


def project_complement(basis: SpectralBasis, j: int, x: np.ndarray) -> np.ndarray:
    """x minus its projections onto eigenspaces 0..j-1."""
    if j > basis.num_groups:
        raise IndexError(f"complement after {j} groups, only {basis.num_groups} available")
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    for i in range(j):
        out -= project_group(basis, i, x)
    return out
