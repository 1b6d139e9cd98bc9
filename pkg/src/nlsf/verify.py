"""Property harness: functional-shift samplers, equivariance and commutation
checks, exact cut norms with the low-rank approximation bound, random
geometric graphs with coefficient transferability, and the two-speed grid
translation demo.

All checks are pure and deterministic given their seeds; Monte-Carlo suites
derive per-trial seeds from a root seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CoverageError, DataError, DimensionMismatch
from .eig import SpectralBasis, dense_eig
from .filterbank import FilterBank
from .graph import GraphSignal, GsoKind, SparseSymMatrix, build_laplacian, is_connected

CUT_NORM_MAX_N = 14
BRUTE_FORCE_MAX_N = 8


# ---------------------------------------------------------------------------
# Functional shifts
# ---------------------------------------------------------------------------

def haar_orthogonal(k: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed R diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    d = np.diag(r)
    return q * np.where(d >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class FunctionalShift:
    """Orthogonal operator commuting with a protected set of projections.

    block_columns records which eigenvector columns each rotated block
    spans (the last entry is the complement block).
    """

    u: np.ndarray
    block_columns: tuple
    mode: str

    def self_test(self, basis: SpectralBasis, tol: float = 1e-10) -> None:
        n = self.u.shape[0]
        if not np.allclose(self.u.T @ self.u, np.eye(n), atol=tol):
            raise DataError("sampled shift is not orthogonal")
        for cols in self.block_columns:
            v = basis.eigenvectors[:, cols]
            p = v @ v.T
            if not np.allclose(self.u @ p, p @ self.u, atol=tol):
                raise DataError("sampled shift does not commute with a block projection")


def _assemble_block_unitary(basis: SpectralBasis, retained: list, rng) -> FunctionalShift:
    n = basis.eigenvectors.shape[0]
    if not basis.complete:
        raise CoverageError("functional-shift sampling requires a complete basis")
    used = np.concatenate([c for c in retained]) if retained else np.zeros(0, dtype=int)
    comp = np.setdiff1d(np.arange(n), used)
    blocks = [np.asarray(c, dtype=int) for c in retained] + [comp]
    u = np.zeros((n, n))
    for cols in blocks:
        if cols.size == 0:
            continue
        v = basis.eigenvectors[:, cols]
        u += v @ haar_orthogonal(cols.size, rng) @ v.T
    return u, tuple(blocks)


def sample_functional_shift(basis: SpectralBasis, seed: int, j: int | None = None,
                            bank: FilterBank | None = None) -> FunctionalShift:
    """Random orthogonal operator commuting with the protected projections.

    Pass ``j`` to protect the first J eigenspace projections (plus their
    complement) or ``bank`` to protect the band projections. One independent
    Haar-random orthogonal block is drawn per protected subspace.
    """
    if (j is None) == (bank is None):
        raise DataError("specify exactly one of j= (index mode) or bank= (value mode)")
    rng = np.random.default_rng(seed)
    if j is not None:
        if j < 1 or j > basis.num_groups:
            raise IndexError(f"J={j} out of range [1, {basis.num_groups}]")
        retained = [np.arange(start, stop) for start, stop in basis.groups[:j]]
        mode = "index"
    else:
        retained = bank.band_members(basis.eigenvalues)[:-1]
        mode = "value"
    u, blocks = _assemble_block_unitary(basis, retained, rng)
    shift = FunctionalShift(u, blocks, mode)
    shift.self_test(basis)
    return shift


@dataclass
class EquivarianceReport:
    residuals: np.ndarray
    tol: float
    worst_shift: int

    @property
    def worst(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol


def check_equivariance(model_fn, basis: SpectralBasis, x: np.ndarray,
                       num_shifts: int = 50, tol: float = 1e-7, seed: int = 0,
                       j: int | None = None, bank: FilterBank | None = None) -> EquivarianceReport:
    """Max relative residual of model_fn(U x) vs U model_fn(x) over sampled U.

    The residual is ||f(Ux) - U f(x)||_F / max(1, ||f(x)||_F).
    """
    x = np.asarray(x, dtype=np.float64)
    base = model_fn(x)
    scale = max(1.0, float(np.linalg.norm(base)))
    residuals = np.zeros(num_shifts)
    seeds = np.random.SeedSequence(seed).spawn(num_shifts)
    for t in range(num_shifts):
        shift = sample_functional_shift(
            basis, seed=seeds[t].generate_state(1)[0], j=j, bank=bank
        )
        lhs = model_fn(shift.u @ x)
        residuals[t] = np.linalg.norm(lhs - shift.u @ base) / scale
    return EquivarianceReport(residuals, tol, int(np.argmax(residuals)))


@dataclass
class CommutationReport:
    block_scalar_residual: float
    generic_residual: float

    def passed(self, commute_tol: float = 1e-8, break_tol: float = 1e-3) -> bool:
        return (self.block_scalar_residual <= commute_tol
                and self.generic_residual > break_tol)


def check_linear_commutation(basis: SpectralBasis, seed: int = 0, num_shifts: int = 100,
                             j: int | None = None, bank: FilterBank | None = None) -> CommutationReport:
    """Block-scalar linear maps commute with every sampled shift; generic ones fail.

    The operators that commute with all protected shifts are exactly the
    block-scalar maps sum_b c_b P_b, which are the linear-response spectral
    filters. The report carries the worst relative commutator residual of a
    random block-scalar map and of a random dense map.
    """
    rng = np.random.default_rng(seed)
    n = basis.eigenvectors.shape[0]
    if j is not None:
        retained = [np.arange(start, stop) for start, stop in basis.groups[:j]]
    else:
        retained = bank.band_members(basis.eigenvalues)[:-1]
    used = np.concatenate(retained) if retained else np.zeros(0, dtype=int)
    comp = np.setdiff1d(np.arange(n), used)
    block_scalar = np.zeros((n, n))
    for cols in list(retained) + [comp]:
        if len(cols):
            v = basis.eigenvectors[:, cols]
            block_scalar += rng.uniform(0.5, 2.0) * (v @ v.T)
    generic = rng.standard_normal((n, n))
    worst_bs = 0.0
    worst_gen = 0.0
    seeds = np.random.SeedSequence(seed + 1).spawn(num_shifts)
    for t in range(num_shifts):
        u = sample_functional_shift(basis, seed=seeds[t].generate_state(1)[0],
                                    j=j, bank=bank).u
        worst_bs = max(worst_bs, np.linalg.norm(block_scalar @ u - u @ block_scalar)
                       / np.linalg.norm(block_scalar))
        worst_gen = max(worst_gen, np.linalg.norm(generic @ u - u @ generic)
                        / np.linalg.norm(generic))
    return CommutationReport(worst_bs, worst_gen)


# ---------------------------------------------------------------------------
# Cut norm and the low-rank approximation bound
# ---------------------------------------------------------------------------

def cut_norm_exact(m: np.ndarray) -> float:
    """(1/N^2) sup over row/column subsets of the absolute block sum.

    Enumerates the 2^N row subsets; the inner column optimization is exact
    per column once the row subset is fixed.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"cut norm needs a square matrix, got {m.shape}")
    n = m.shape[0]
    if n == 0:
        return 0.0
    if n > CUT_NORM_MAX_N:
        raise DataError(f"exact cut norm capped at N <= {CUT_NORM_MAX_N}, got {n}")
    return _kernels.cut_norm_scan(m) / float(n * n)


def cut_norm_bruteforce(m: np.ndarray) -> float:
    """Reference oracle: full enumeration over all subset pairs (N <= 8)."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise DataError(f"brute force capped at N <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 0:
        return 0.0
    masks = np.arange(1 << n, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(n, dtype=np.uint32)) & 1).astype(np.float64)
    sums = bits @ m @ bits.T
    return float(np.abs(sums).max()) / float(n * n)


def low_rank_bound(alpha: float, j: int, r: float) -> float:
    return 1.5 * alpha * np.sqrt(r / j)


def _symmetric_uniform(n, alpha, rng):
    a = rng.uniform(-alpha, alpha, size=(n, n))
    return np.triu(a) + np.triu(a, 1).T


def leading_eig_approx(m: np.ndarray, rank: int) -> np.ndarray:
    """Projection of m onto its `rank` leading-|eigenvalue| eigenpairs."""
    w, v = np.linalg.eigh(m)
    order = np.argsort(-np.abs(w), kind="stable")[:rank]
    return (v[:, order] * w[order]) @ v[:, order].T


@dataclass
class LowRankReport:
    bound: float
    pass_rate: float
    threshold: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.pass_rate >= self.threshold


def check_low_rank_bound(alpha: float = 1.0, j: int = 4, r: int = 2,
                         trials: int = 200, n: int = 10, seed: int = 0) -> LowRankReport:
    """Monte-Carlo check of ||M - C||_cut < (3 alpha / 2) sqrt(R / J).

    Each trial draws a bounded symmetric matrix, a uniform rank m in [J],
    and the leading-eigenpair approximation C of rank m. Passes when the
    empirical success rate clears 1 - 1/R minus three binomial standard
    deviations.
    """
    if j % r != 0:
        raise DataError(f"J/R must be an integer, got J={j}, R={r}")
    bound = low_rank_bound(alpha, j, r)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        m_mat = _symmetric_uniform(n, alpha, rng)
        rank = int(rng.integers(1, j + 1))
        resid = m_mat - leading_eig_approx(m_mat, rank)
        if cut_norm_exact(resid) <= bound + 1e-12:
            hits += 1
    p = 1.0 - 1.0 / r
    threshold = p - 3.0 * np.sqrt(p * (1.0 - p) / trials)
    return LowRankReport(bound, hits / trials, threshold, trials)


def sparse_cut_norm(m: np.ndarray, e: int) -> float:
    """Cut norm renormalized by N^2 / E for sparse comparisons."""
    if e == 0:
        raise DataError("edge count E must be positive for the sparse cut norm")
    n = m.shape[0]
    return (n * n / e) * cut_norm_exact(m)


def sparse_low_rank_bound(alpha: float, j: int, r: int, n: int, e: int) -> float:
    if e == 0:
        raise DataError("edge count E must be positive")
    return (3.0 * alpha * n * n) / (2.0 * e) * np.sqrt(r / j)


def check_sparse_low_rank_bound(j: int = 4, r: int = 2, trials: int = 100,
                                n: int = 12, p_in: float = 0.7, p_out: float = 0.15,
                                seed: int = 0) -> LowRankReport:
    """Sparse-normalized variant of the bound on two-block SBM adjacencies."""
    if j % r != 0:
        raise DataError(f"J/R must be an integer, got J={j}, R={r}")
    rng = np.random.default_rng(seed)
    half = n // 2
    hits = 0
    bound_seen = 0.0
    for _ in range(trials):
        labels = np.repeat([0, 1], (half, n - half))
        a = np.zeros((n, n))
        for i in range(n):
            for k in range(i + 1, n):
                prob = p_in if labels[i] == labels[k] else p_out
                if rng.random() < prob:
                    a[i, k] = a[k, i] = 1.0
        e = int(np.count_nonzero(a))
        if e == 0:
            continue
        rank = int(rng.integers(1, j + 1))
        resid = a - leading_eig_approx(a, rank)
        bound = sparse_low_rank_bound(1.0, j, r, n, e)
        bound_seen = bound
        if sparse_cut_norm(resid, e) <= bound + 1e-12:
            hits += 1
    prob = 1.0 - 1.0 / r
    threshold = prob - 3.0 * np.sqrt(prob * (1.0 - prob) / trials)
    return LowRankReport(bound_seen, hits / trials, threshold, trials)


# ---------------------------------------------------------------------------
# Random geometric graphs and transferability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricSpaceSpec:
    """Sampling recipe for a random geometric graph on a compact space."""

    space: str = "circle"        # "circle" | "torus"
    radius: float = 0.5          # connectivity radius (geodesic)
    weight: str = "uniform"      # "uniform" | "smooth"
    n: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.radius <= 0:
            raise DataError("radius must be positive")
        if self.n < 2:
            raise DataError("need at least two sample points")
        if self.space not in ("circle", "torus"):
            raise DataError(f"unknown space {self.space!r}")
        if self.weight not in ("uniform", "smooth"):
            raise DataError(f"unknown weight {self.weight!r}")


def _sample_points(spec: MetricSpaceSpec, rng) -> np.ndarray:
    dim = 1 if spec.space == "circle" else 2
    if spec.weight == "uniform":
        return rng.uniform(0.0, 2.0 * np.pi, size=(spec.n, dim))
    # smooth nonuniform density ~ 1 + 0.5 sin(theta_1), via rejection
    out = np.zeros((spec.n, dim))
    count = 0
    while count < spec.n:
        cand = rng.uniform(0.0, 2.0 * np.pi, size=dim)
        if rng.uniform(0.0, 1.5) < 1.0 + 0.5 * np.sin(cand[0]):
            out[count] = cand
            count += 1
    return out


def _geodesic_distances(points: np.ndarray) -> np.ndarray:
    diff = np.abs(points[:, None, :] - points[None, :, :])
    diff = np.minimum(diff, 2.0 * np.pi - diff)
    return np.sqrt(np.sum(diff * diff, axis=2))


def random_geometric_graph(spec: MetricSpaceSpec) -> GraphSignal:
    """Unit-weight graph connecting samples at geodesic distance <= radius.

    Node positions are stored as the feature matrix so signals can be
    evaluated at the sample points. Disconnected results are flagged with a
    warning, not an error.
    """
    rng = np.random.default_rng(spec.seed)
    points = _sample_points(spec, rng)
    dist = _geodesic_distances(points)
    iu, ju = np.nonzero(np.triu(dist <= spec.radius, 1))
    adj = SparseSymMatrix.from_entries(spec.n, [(int(i), int(j), 1.0)
                                                for i, j in zip(iu, ju)])
    g = GraphSignal(adj, points)
    if not is_connected(adj):
        warnings.warn("random geometric graph is disconnected", stacklevel=2)
    return g


def circle_harmonic_signal(points: np.ndarray, freqs, coeffs: np.ndarray) -> np.ndarray:
    """f(theta) = a_0 + sum_k a_k cos(k theta) + b_k sin(k theta) at the samples."""
    theta = points[:, 0]
    out = np.full(theta.shape, coeffs[0])
    for idx, k in enumerate(freqs):
        out = out + coeffs[1 + 2 * idx] * np.cos(k * theta)
        out = out + coeffs[2 + 2 * idx] * np.sin(k * theta)
    return out[:, None]


def _block_norm_coefficients(basis: SpectralBasis, x: np.ndarray, blocks) -> np.ndarray:
    """Norms of index-block projections, 1/sqrt(n)-normalized, plus complement."""
    n = x.shape[0]
    out = []
    total = np.zeros_like(x)
    for start, stop in blocks:
        v = basis.eigenvectors[:, start:stop]
        p = v @ (v.T @ x)
        total += p
        out.append(np.linalg.norm(p) / np.sqrt(n))
    out.append(np.linalg.norm(x - total) / np.sqrt(n))
    return np.array(out)


def circle_laplacian_eigenvalue(k: int, radius: float) -> float:
    """Continuum prediction for the normalized operator: 1 - sin(kr) / (kr)."""
    if k == 0:
        return 0.0
    return 1.0 - np.sin(k * radius) / (k * radius)


def index_coefficients_circle(n: int, seed: int, radius: float, freqs,
                              coeffs: np.ndarray, num_blocks: int = 3,
                              max_tries: int = 20) -> np.ndarray:
    """Index-mode coefficients (combinatorial Laplacian) on a uniform circle.

    Index blocks follow the continuum multiplicity pattern 1, 2, 2, ... so
    near-degenerate sampled pairs are grouped the way their limiting
    eigenspaces are.
    """
    g = _connected_sample(MetricSpaceSpec("circle", radius, "uniform", n, seed), max_tries)
    basis = dense_eig(build_laplacian(g, GsoKind.COMBINATORIAL))
    x = circle_harmonic_signal(g.features, freqs, coeffs)
    blocks = [(0, 1)] + [(1 + 2 * b, 3 + 2 * b) for b in range(num_blocks - 1)]
    return _block_norm_coefficients(basis, x, blocks)


def value_coefficients_circle(n: int, seed: int, radius: float, freqs,
                              coeffs: np.ndarray, band_edges: np.ndarray,
                              max_tries: int = 20) -> np.ndarray:
    """Value-mode coefficients (normalized Laplacian, shared band grid) on a
    smooth-nonuniform circle."""
    g = _connected_sample(MetricSpaceSpec("circle", radius, "smooth", n, seed), max_tries)
    basis = dense_eig(build_laplacian(g, GsoKind.NORMALIZED))
    x = circle_harmonic_signal(g.features, freqs, coeffs)
    out = []
    total = np.zeros_like(x)
    lam = basis.eigenvalues + 1e-9  # snap: numerical zeros stay in the first band
    for lo, hi in zip(band_edges[:-1], band_edges[1:]):
        cols = np.nonzero((lam >= lo) & (lam < hi))[0]
        if cols.size:
            v = basis.eigenvectors[:, cols]
            p = v @ (v.T @ x)
        else:
            p = np.zeros_like(x)
        total += p
        out.append(np.linalg.norm(p) / np.sqrt(n))
    out.append(np.linalg.norm(x - total) / np.sqrt(n))
    return np.array(out)


def _connected_sample(spec: MetricSpaceSpec, max_tries: int) -> GraphSignal:
    for attempt in range(max_tries):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = random_geometric_graph(
                MetricSpaceSpec(spec.space, spec.radius, spec.weight, spec.n,
                                spec.seed + 1_000_003 * attempt)
            )
        if is_connected(g.adjacency):
            return g
    raise DataError(f"no connected sample within {max_tries} tries")


def shared_band_edges(radius: float, num_bands: int = 3) -> np.ndarray:
    """Band grid with edges at midpoints between continuum eigenvalues."""
    levels = [circle_laplacian_eigenvalue(k, radius) for k in range(num_bands + 1)]
    edges = [0.0]
    for a, b in zip(levels[:-1], levels[1:]):
        edges.append(0.5 * (a + b))
    return np.array(edges)


@dataclass
class TransferReport:
    sizes: tuple
    medians: list
    passed: bool


def transferability_check(mode: str, sizes=(100, 200, 400), reps: int = 20,
                          seed: int = 0, radius: float = 1.0, freqs=(1, 2),
                          num_blocks: int = 3) -> TransferReport:
    """Median cross-size coefficient distance must decrease up the size ladder.

    Per repetition one continuum signal is drawn and evaluated on freshly
    sampled graphs of each size; the coefficient distance between
    consecutive sizes is the transfer error at that rung.
    """
    if mode not in ("index", "value"):
        raise DataError(f"unknown transferability mode {mode!r}")
    rng = np.random.default_rng(seed)
    edges = shared_band_edges(radius, num_blocks)
    ladder = [[] for _ in range(len(sizes) - 1)]
    for rep in range(reps):
        coeffs = rng.uniform(-1.0, 1.0, size=1 + 2 * len(freqs))
        rep_seed = int(rng.integers(0, 2**31 - 1))
        vectors = []
        for si, n in enumerate(sizes):
            if mode == "index":
                c = index_coefficients_circle(n, rep_seed + si, radius, freqs,
                                              coeffs, num_blocks)
            else:
                c = value_coefficients_circle(n, rep_seed + si, radius, freqs,
                                              coeffs, edges)
            vectors.append(c)
        for step in range(len(sizes) - 1):
            ladder[step].append(float(np.linalg.norm(vectors[step + 1] - vectors[step])))
    medians = [float(np.median(np.array(d))) for d in ladder]
    passed = all(b < a for a, b in zip(medians[:-1], medians[1:]))
    return TransferReport(tuple(sizes), medians, passed)


# ---------------------------------------------------------------------------
# Two-speed functional translation on the circular grid
# ---------------------------------------------------------------------------

def grid_translation_matrix(m: int, t_row: int, t_col: int) -> np.ndarray:
    """Permutation realizing (T x)_{i,j} = x_{(i - t_row) mod m, (j - t_col) mod m}."""
    t = np.zeros((m * m, m * m))
    for i in range(m):
        for j in range(m):
            src = ((i - t_row) % m) * m + (j - t_col) % m
            t[i * m + j, src] = 1.0
    return t


@dataclass
class GridTranslationReport:
    operator: np.ndarray
    translated: np.ndarray
    band_commutation: float
    orthogonality: float
    min_distance_to_translation: float
    matches_classical: float  # ||U - T(t,t)||_F when speeds are equal, else inf


def grid_functional_translation(m: int, t_low: int, t_high: int,
                                cutoff: float | None = None,
                                sigma: float = 1.0) -> GridTranslationReport:
    """Translate low and high frequency content of a Gaussian at separate speeds.

    The operator T_low P_low + T_high P_high is orthogonal and commutes with
    both band projections, so it is a relaxed functional shift; when the two
    speeds agree it coincides with the classical circular translation.
    """
    from .datasets import grid_graph

    g = grid_graph(m)
    basis = dense_eig(build_laplacian(g, GsoKind.COMBINATORIAL))
    if cutoff is None:
        cutoff = 0.25 * basis.lambda_max
    low_cols = np.nonzero(basis.eigenvalues < cutoff)[0]
    v_low = basis.eigenvectors[:, low_cols]
    p_low = v_low @ v_low.T
    p_high = np.eye(m * m) - p_low

    u = (grid_translation_matrix(m, t_low, t_low) @ p_low
         + grid_translation_matrix(m, t_high, t_high) @ p_high)

    ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    c = m // 2
    x = np.exp(-((ii - c) ** 2 + (jj - c) ** 2) / (2.0 * sigma ** 2)).ravel()[:, None]

    band_comm = max(
        float(np.linalg.norm(u @ p_low - p_low @ u)),
        float(np.linalg.norm(u @ p_high - p_high @ u)),
    )
    orth = float(np.linalg.norm(u.T @ u - np.eye(m * m)))
    min_dist = min(
        float(np.linalg.norm(u - grid_translation_matrix(m, a, b)))
        for a in range(m) for b in range(m)
    )
    if t_low == t_high:
        matches = float(np.linalg.norm(u - grid_translation_matrix(m, t_low, t_low)))
    else:
        matches = np.inf
    return GridTranslationReport(u, u @ x, band_comm, orth, min_dist, matches)
