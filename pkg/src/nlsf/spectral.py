"""Analysis and synthesis between node space and the spectral domain.

Analysis maps a signal to the norms of its eigenspace (index mode) or band
(value mode) projections; these coefficients depend only on the eigenspaces
of the shift operator, never on the particular eigenvectors, which is what
makes the spectral domain transferable between graphs. Synthesis maps
coefficient matrices back to node space using the input signal's normalized
projections as a frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroBlock
from .eig import SpectralBasis, project_group
from .filterbank import FilterBank, check_coverage
from .graph import channel_norms


@dataclass(frozen=True)
class StabilityParams:
    """Synthesis denominator parameters: blocks are scaled by 1/(norm^a + e)."""

    a: float = 1.0
    e: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if self.e < 0.0:
            raise ValueError(f"e must be nonnegative, got {self.e}")


@dataclass(frozen=True)
class SpectralCoefficients:
    """Nonnegative block-norm coefficients, block-major and channel-minor.

    mode is "index" or "value"; num_blocks counts the stored blocks
    (retained blocks plus the complement unless a leading variant dropped
    it); values has length num_blocks * channels.
    """

    values: np.ndarray
    mode: str
    num_blocks: int
    channels: int

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if v.shape[0] != self.num_blocks * self.channels:
            raise DimensionMismatch(
                f"expected {self.num_blocks}x{self.channels} values, got {v.shape[0]}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def as_matrix(self) -> np.ndarray:
        return self.values.reshape(self.num_blocks, self.channels)


class BlockProjections:
    """Resolved block structure of a basis: eigenspace groups or bands.

    Provides the list of projections P_b x for b = 1..B, where the last
    block is the orthogonal complement of the retained ones unless
    ``leading`` dropped it. Projections are computed from eigenvector
    columns for retained blocks and by subtraction for the complement, so
    partial bases work whenever they cover the retained range.
    """

    def __init__(self, mode, basis, column_sets, leading):
        self.mode = mode
        self.basis = basis
        self.column_sets = column_sets  # retained blocks only
        self.leading = leading

    @staticmethod
    def index(basis: SpectralBasis, j: int, leading: bool = False) -> "BlockProjections":
        if j < 1 or j > basis.num_groups:
            raise IndexError(f"J={j} out of range [1, {basis.num_groups}]")
        sets = [np.arange(start, stop) for start, stop in basis.groups[:j]]
        return BlockProjections("index", basis, sets, leading)

    @staticmethod
    def value(basis: SpectralBasis, bank: FilterBank, leading: bool = False) -> "BlockProjections":
        check_coverage(basis, bank)
        members = bank.band_members(basis.eigenvalues)
        return BlockProjections("value", basis, members[:-1], leading)

    @property
    def num_blocks(self) -> int:
        return len(self.column_sets) + (0 if self.leading else 1)

    def project(self, x: np.ndarray) -> list:
        """All block projections of x, in block order."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.basis.eigenvectors.shape[0]:
            raise DimensionMismatch(
                f"signal has {x.shape[0]} rows, basis has "
                f"{self.basis.eigenvectors.shape[0]}"
            )
        out = []
        for cols in self.column_sets:
            if cols.size == 0:
                out.append(np.zeros_like(x))
            else:
                v = self.basis.eigenvectors[:, cols]
                out.append(v @ (v.T @ x))
        if not self.leading:
            rem = x.copy()
            for p in out:
                rem = rem - p
            out.append(rem)
        return out

    def project_single(self, b: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if b < len(self.column_sets):
            cols = self.column_sets[b]
            if cols.size == 0:
                return np.zeros_like(x)
            v = self.basis.eigenvectors[:, cols]
            return v @ (v.T @ x)
        out = x.copy()
        for cols in self.column_sets:
            if cols.size:
                v = self.basis.eigenvectors[:, cols]
                out = out - v @ (v.T @ x)
        return out


def _norms_matrix(blocks) -> np.ndarray:
    return np.stack([channel_norms(p) for p in blocks], axis=0)


def _denominators(norms: np.ndarray, sp: StabilityParams) -> np.ndarray:
    """norm^a + e, with the 0^0 := 1 convention when a == 0."""
    if sp.a == 0.0:
        powered = np.ones_like(norms)
    else:
        powered = norms ** sp.a
    denom = powered + sp.e
    if np.any(denom == 0.0):
        raise ZeroBlock(
            "zero block norm with e=0 makes the synthesis denominator vanish"
        )
    return denom


def _analyze(blocks_obj: BlockProjections, x: np.ndarray) -> SpectralCoefficients:
    blocks = blocks_obj.project(x)
    norms = _norms_matrix(blocks)
    return SpectralCoefficients(norms.ravel(), blocks_obj.mode,
                                blocks_obj.num_blocks, norms.shape[1])


def analyze_index(basis: SpectralBasis, x: np.ndarray, j: int,
                  leading: bool = False) -> SpectralCoefficients:
    """Norms of the first J eigenspace projections plus the complement."""
    return _analyze(BlockProjections.index(basis, j, leading), x)


def analyze_value(basis: SpectralBasis, bank: FilterBank, x: np.ndarray,
                  leading: bool = False) -> SpectralCoefficients:
    """Norms of the band projections plus the complement."""
    return _analyze(BlockProjections.value(basis, bank, leading), x)


def _synth_frame(blocks_obj: BlockProjections, x: np.ndarray, sp: StabilityParams):
    """Concatenated normalized projections H (n x B*d) plus intermediates."""
    blocks = blocks_obj.project(x)
    norms = _norms_matrix(blocks)
    denom = _denominators(norms, sp)
    scaled = [p / denom[b][None, :] for b, p in enumerate(blocks)]
    return np.hstack(scaled), blocks, norms, denom


def synthesize_index(r: np.ndarray, basis: SpectralBasis, x: np.ndarray, j: int,
                     sp: StabilityParams, leading: bool = False) -> np.ndarray:
    """[P_b x / (||P_b x||^a + e)]_b @ R for the (J+1)-block index frame."""
    return _synthesize(BlockProjections.index(basis, j, leading), r, x, sp)


def synthesize_value(r: np.ndarray, basis: SpectralBasis, bank: FilterBank,
                     x: np.ndarray, sp: StabilityParams,
                     leading: bool = False) -> np.ndarray:
    """Band-frame synthesis; see synthesize_index."""
    return _synthesize(BlockProjections.value(basis, bank, leading), r, x, sp)


def _synthesize(blocks_obj, r, x, sp):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    h, _, _, _ = _synth_frame(blocks_obj, x, sp)
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != h.shape[1]:
        raise DimensionMismatch(
            f"coefficient matrix has {r.shape[0]} rows, frame has {h.shape[1]} columns"
        )
    return h @ r


def synthesize_diag(r: np.ndarray, blocks_obj: BlockProjections, x: np.ndarray,
                    sp: StabilityParams) -> np.ndarray:
    """sum_b r_b * P_b x / (||P_b x||^a + e), element-wise per channel."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    blocks = blocks_obj.project(x)
    norms = _norms_matrix(blocks)
    denom = _denominators(norms, sp)
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (len(blocks), x.shape[1]):
        raise DimensionMismatch(
            f"expected coefficients of shape {(len(blocks), x.shape[1])}, got {r.shape}"
        )
    out = np.zeros_like(x)
    for b, p in enumerate(blocks):
        out += (r[b] / denom[b])[None, :] * p
    return out


def synthesis_singular_values(blocks_obj: BlockProjections, x: np.ndarray,
                              sp: StabilityParams) -> np.ndarray:
    """Singular values of the 1-channel synthesis frame.

    For a single-channel signal the frame's columns are mutually orthogonal,
    so its singular values are sigma_b = ||P_b x|| / (||P_b x||^a + e)
    directly. Requires every block norm to be positive (otherwise the
    synthesis operator is not invertible on that block).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != 1:
        raise DimensionMismatch("singular-value formula applies to single-channel signals")
    blocks = blocks_obj.project(x)
    norms = _norms_matrix(blocks)[:, 0]
    if np.any(norms == 0.0):
        raise ZeroBlock("a block norm is zero; the synthesis frame is rank-deficient")
    denom = _denominators(norms[:, None], sp)[:, 0]
    return norms / denom


def dist_spectral(c1: SpectralCoefficients, c2: SpectralCoefficients) -> float:
    """Euclidean distance between coefficient vectors of matching layout.

    This is the pullback metric: on a fixed graph it is a pseudometric on
    signals, and across graphs it is the graph-signal distance.
    """
    if c1.mode != c2.mode or c1.num_blocks != c2.num_blocks or c1.channels != c2.channels:
        raise DimensionMismatch(
            f"coefficient layouts differ: ({c1.mode},{c1.num_blocks},{c1.channels}) "
            f"vs ({c2.mode},{c2.num_blocks},{c2.channels})"
        )
    return float(np.linalg.norm(c1.values - c2.values))
