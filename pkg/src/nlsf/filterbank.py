"""Indicator filter banks over the spectrum and band projections.

A bank holds K half-open bands [lo, hi) partitioning the low end of
[0, lambda_max]; the topmost retained band closes at its upper edge when it
reaches lambda_max, and the implicit complement band (index K) absorbs
everything above the retained bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, DataError
from .eig import SpectralBasis

EDGE_SNAP = 1e-9  # relative to lambda_max; eigenvalues this close to an edge snap up
LAMBDA_MAX_INFLATION = 1.001  # guard for power-iteration underestimates


@dataclass(frozen=True)
class FilterBank:
    """K retained spectral bands plus an implicit complement band."""

    edges: tuple          # K pairs (lo, hi), contiguous, starting at 0
    lambda_max: float
    kind: str             # "dyadic" or "uniform"
    params: tuple         # (r, S) for dyadic, (S,) for uniform

    @property
    def num_bands(self) -> int:
        return len(self.edges)

    @property
    def top_edge(self) -> float:
        return self.edges[-1][1]

    def band_of(self, lam: float) -> int:
        """0-based band index for an eigenvalue; num_bands means complement."""
        snap = EDGE_SNAP * max(self.lambda_max, 1.0)
        k = self.num_bands
        if lam + snap < 0.0:
            return k
        for j, (lo, hi) in enumerate(self.edges):
            if lam + snap < hi:
                return j
        # the topmost retained band is closed when it reaches lambda_max
        if abs(self.top_edge - self.lambda_max) <= snap and lam <= self.lambda_max + snap:
            return k - 1
        return k

    def band_members(self, eigenvalues: np.ndarray) -> list:
        """Column index arrays per band (last entry: complement)."""
        assignment = np.array([self.band_of(float(l)) for l in eigenvalues])
        return [np.nonzero(assignment == j)[0] for j in range(self.num_bands + 1)]


def dyadic_bands(lambda_max: float, r: float, s: int, k: int) -> FilterBank:
    """Geometric bands, denser toward zero frequency.

    Band j (1-based) spans [lambda_max * r^(s-j+1), lambda_max * r^(s-j));
    band 1 starts at 0. Only the first k bands are retained.
    """
    if not 0.0 < r < 1.0:
        raise DataError(f"decay rate must be in (0, 1), got {r}")
    _check_sk(s, k)
    uppers = [lambda_max * r ** (s - j) for j in range(1, s + 1)]
    edges = [(0.0, uppers[0])] + [(uppers[j - 1], uppers[j]) for j in range(1, k)]
    return FilterBank(tuple(edges), float(lambda_max), "dyadic", (float(r), int(s)))


def uniform_bands(lambda_max: float, s: int, k: int) -> FilterBank:
    """Equal-width bands: band j spans [(j-1) * lambda_max / s, j * lambda_max / s)."""
    _check_sk(s, k)
    width = lambda_max / s
    edges = [((j - 1) * width, j * width) for j in range(1, k + 1)]
    return FilterBank(tuple(edges), float(lambda_max), "uniform", (int(s),))


def _check_sk(s, k):
    if s < 1 or k < 1 or k > s:
        raise DataError(f"need 1 <= K <= S, got K={k}, S={s}")


def bank_for_basis(basis: SpectralBasis, kind: str, s: int, k: int,
                   r: float = 0.5, lambda_max: float | None = None) -> FilterBank:
    """Build a bank over the basis' spectrum.

    The band ceiling is the exact lambda_max for complete bases; for partial
    bases the power-iteration estimate stored on the basis is inflated by
    0.1% so the true top eigenvalue cannot fall outside every band.
    """
    if lambda_max is None:
        lambda_max = basis.lambda_max
        if not basis.complete:
            lambda_max *= LAMBDA_MAX_INFLATION
    if kind == "dyadic":
        return dyadic_bands(lambda_max, r, s, k)
    if kind == "uniform":
        return uniform_bands(lambda_max, s, k)
    raise DataError(f"unknown bank kind: {kind!r}")


def check_coverage(basis: SpectralBasis, bank: FilterBank) -> None:
    """Partial bases must reach the top retained edge to resolve bands 1..K.

    Lanczos returns the smallest eigenvalues, so the computed range covers
    every retained band exactly when it extends past the bank's top edge;
    the complement is then computable by subtraction.
    """
    if basis.complete:
        return
    if basis.num_pairs == 0:
        raise CoverageError("empty basis cannot cover any band")
    reach = float(np.abs(basis.eigenvalues).max())
    snap = EDGE_SNAP * max(bank.lambda_max, 1.0)
    if reach + snap < bank.top_edge:
        raise CoverageError(
            f"partial basis reaches |lambda|={reach:.6g} but the retained bands "
            f"extend to {bank.top_edge:.6g}; compute more pairs or use a dense basis"
        )


def band_project(basis: SpectralBasis, bank: FilterBank, j: int, x: np.ndarray) -> np.ndarray:
    """Projection of x onto band j (1-based; j == K+1 selects the complement)."""
    k = bank.num_bands
    if j < 1 or j > k + 1:
        raise IndexError(f"band index {j} out of range [1, {k + 1}]")
    x = np.asarray(x, dtype=np.float64)
    check_coverage(basis, bank)
    members = bank.band_members(basis.eigenvalues)
    if j <= k:
        idx = members[j - 1]
        if idx.size == 0:
            return np.zeros_like(x)
        v = basis.eigenvectors[:, idx]
        return v @ (v.T @ x)
    out = x.copy()
    for jj in range(k):
        idx = members[jj]
        if idx.size:
            v = basis.eigenvectors[:, idx]
            out -= v @ (v.T @ x)
    return out
