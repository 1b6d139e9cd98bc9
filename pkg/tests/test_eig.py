import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsf.datasets import complete_graph, cycle_graph, erdos_renyi, path_graph
from nlsf.errors import MaxIterExceeded
from nlsf.eig import (
    EigConfig,
    dense_eig,
    estimate_lambda_max,
    group_eigenspaces,
    lanczos_smallest,
    project_complement,
    project_group,
)
from nlsf.graph import GsoKind, SparseSymMatrix, build_laplacian, spmv

# hand oracle for L(P2) = [[1,-1],[-1,1]]: det(L - t I) = t^2 - 2t, roots 0 and 2,
# kernels spanned by (1,1) and (1,-1)
P2_EIGENVALUES = (0.0, 2.0)

# hand oracle for L(K3): char poly -t(t-3)^2, eigenvalues 0, 3, 3
K3_EIGENVALUES = (0.0, 3.0, 3.0)

# closed form for the cycle C8: 2 - 2 cos(2 pi k / 8)
C8_SECOND = 2.0 - math.sqrt(2.0)


def lap(g, kind=GsoKind.COMBINATORIAL):
    return build_laplacian(g, kind)


class TestDenseEig:
    def test_p2(self):
        basis = dense_eig(lap(path_graph(2)))
        np.testing.assert_allclose(basis.eigenvalues, P2_EIGENVALUES, atol=1e-12)
        # eigenvector spans, not signs: compare projection matrices
        v0 = basis.group_columns(0)
        v1 = basis.group_columns(1)
        np.testing.assert_allclose(v0 @ v0.T, np.full((2, 2), 0.5), atol=1e-12)
        np.testing.assert_allclose(v1 @ v1.T, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)

    def test_k3_groups(self):
        basis = dense_eig(lap(complete_graph(3)))
        np.testing.assert_allclose(basis.eigenvalues, K3_EIGENVALUES, atol=1e-12)
        assert basis.groups == ((0, 1), (1, 3))

    def test_zero_matrix(self):
        basis = dense_eig(SparseSymMatrix.from_entries(4, []))
        np.testing.assert_allclose(basis.eigenvalues, 0.0)
        assert basis.groups == ((0, 4),)
        assert basis.complete
        assert basis.lambda_max == 0.0

    def test_validate(self):
        delta = lap(cycle_graph(6))
        dense_eig(delta).validate(delta)


class TestGroupEigenspaces:
    def test_repeated(self):
        assert group_eigenspaces(np.array([0.0, 3.0, 3.0])) == ((0, 1), (1, 3))

    def test_distinct(self):
        assert group_eigenspaces(np.array([0.0, 1.0, 2.0])) == ((0, 1), (1, 2), (2, 3))

    def test_within_tolerance(self):
        grouped = group_eigenspaces(np.array([0.0, 1e-12, 5.0]), 1e-8)
        assert grouped == ((0, 2), (2, 3))

    @given(st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_partition_property(self, values):
        w = np.sort(np.array(values))
        groups = group_eigenspaces(w)
        covered = [i for start, stop in groups for i in range(start, stop)]
        assert covered == list(range(len(w)))
        for (s1, e1), (s2, e2) in zip(groups, groups[1:]):
            assert e1 == s2


class TestLanczos:
    def test_p2_matches_dense(self):
        delta = lap(path_graph(2))
        ref = dense_eig(delta)
        got = lanczos_smallest(delta, EigConfig(num_pairs=2, seed=0))
        np.testing.assert_allclose(got.eigenvalues, ref.eigenvalues, atol=1e-10)
        for col in range(2):
            dot = abs(got.eigenvectors[:, col] @ ref.eigenvectors[:, col])
            assert dot == pytest.approx(1.0, abs=1e-8)

    def test_c8_closed_form(self):
        delta = lap(cycle_graph(8))
        got = lanczos_smallest(delta, EigConfig(num_pairs=3, seed=1))
        np.testing.assert_allclose(
            got.eigenvalues, [0.0, C8_SECOND, C8_SECOND], atol=1e-8
        )

    def test_single_pair_is_kernel(self):
        delta = lap(erdos_renyi(12, 0.3, seed=5))
        got = lanczos_smallest(delta, EigConfig(num_pairs=1, seed=2))
        assert got.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        v = got.eigenvectors[:, 0]
        expected = np.full(12, 1.0 / math.sqrt(12))
        assert min(np.abs(v - expected).max(), np.abs(v + expected).max()) < 1e-7

    def test_agrees_with_dense_full_rank(self):
        for seed in range(3):
            g = erdos_renyi(16, 0.3, seed=seed)
            delta = lap(g)
            ref = dense_eig(delta)
            got = lanczos_smallest(delta, EigConfig(num_pairs=16, seed=seed))
            assert got.complete
            np.testing.assert_allclose(got.eigenvalues, ref.eigenvalues, atol=1e-8)
            # projection matrices agree per eigenspace group
            assert got.groups == ref.groups
            for i in range(len(ref.groups)):
                vg = got.group_columns(i)
                vr = ref.group_columns(i)
                np.testing.assert_allclose(vg @ vg.T, vr @ vr.T, atol=1e-6)

    def test_deterministic(self):
        delta = lap(erdos_renyi(20, 0.2, seed=3))
        cfg = EigConfig(num_pairs=5, seed=11)
        a = lanczos_smallest(delta, cfg)
        b = lanczos_smallest(delta, cfg)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    def test_residuals_within_tolerance(self):
        delta = lap(erdos_renyi(24, 0.2, seed=9))
        cfg = EigConfig(num_pairs=6, seed=4, residual_tol=1e-9)
        basis = lanczos_smallest(delta, cfg)
        resid = spmv(delta, basis.eigenvectors) - basis.eigenvectors * basis.eigenvalues
        rnorm = np.linalg.norm(resid, axis=0)
        assert (rnorm / np.maximum(1.0, np.abs(basis.eigenvalues))).max() <= 1e-9

    def test_max_iter_exceeded_carries_partial(self):
        delta = lap(erdos_renyi(30, 0.2, seed=1))
        cfg = EigConfig(num_pairs=4, seed=0, residual_tol=1e-14, max_iter=1)
        try:
            lanczos_smallest(delta, cfg)
        except MaxIterExceeded as err:
            assert err.basis is not None
            assert err.basis.eigenvalues.shape == (4,)
            assert err.worst_residual > 1e-14
        # convergence on the first round is also acceptable; nothing to assert then


class TestProjections:
    def test_p2_group0(self):
        basis = dense_eig(lap(path_graph(2)))
        out = project_group(basis, 0, np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(out, [[0.5], [0.5]], atol=1e-12)

    def test_constant_signal_kernel_group(self):
        g = erdos_renyi(10, 0.4, seed=2)
        basis = dense_eig(lap(g))
        x = np.ones((10, 1))
        np.testing.assert_allclose(project_group(basis, 0, x), x, atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        basis = dense_eig(lap(cycle_graph(7)))
        x = rng.standard_normal((7, 2))
        for i in range(basis.num_groups):
            once = project_group(basis, i, x)
            np.testing.assert_allclose(project_group(basis, i, once), once, atol=1e-10)

    def test_index_out_of_range(self):
        basis = dense_eig(lap(path_graph(2)))
        with pytest.raises(IndexError):
            project_group(basis, 5, np.zeros((2, 1)))

    def test_complement_complete_is_zero(self):
        basis = dense_eig(lap(path_graph(2)))
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 3))
        np.testing.assert_allclose(
            project_complement(basis, basis.num_groups, x), 0.0, atol=1e-12
        )

    def test_complement_p2(self):
        basis = dense_eig(lap(path_graph(2)))
        out = project_complement(basis, 1, np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(out, [[0.5], [-0.5]], atol=1e-12)

    def test_complement_orthogonal_to_groups(self):
        rng = np.random.default_rng(3)
        basis = dense_eig(lap(erdos_renyi(9, 0.4, seed=7)))
        x = rng.standard_normal((9, 1))
        j = 3
        comp = project_complement(basis, j, x)
        for i in range(j):
            assert abs(float(project_group(basis, i, x).ravel() @ comp.ravel())) < 1e-9

    def test_rotation_invariance_on_degenerate_block(self):
        # K3 has a 2-dimensional eigenspace; projections must not change
        # under an orthonormal rotation of its eigenvector columns
        basis = dense_eig(lap(complete_graph(3)))
        rng = np.random.default_rng(5)
        x = rng.standard_normal((3, 2))
        before = project_group(basis, 1, x)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        v = basis.eigenvectors.copy()
        v[:, 1:3] = v[:, 1:3] @ q
        from nlsf.eig import SpectralBasis

        rotated = SpectralBasis(basis.eigenvalues.copy(), v, basis.groups,
                                basis.lambda_max, True)
        np.testing.assert_allclose(project_group(rotated, 1, x), before, atol=1e-10)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(8)
        g = erdos_renyi(8, 0.4, seed=4)
        delta = lap(g)
        basis = dense_eig(delta)
        x = rng.standard_normal((8, 2))
        perm = rng.permutation(8)
        pmat = np.zeros((8, 8))
        pmat[perm, np.arange(8)] = 1.0
        permuted = dense_eig(build_laplacian(g.permuted(perm)))
        assert permuted.groups == basis.groups
        for i in range(basis.num_groups):
            np.testing.assert_allclose(
                project_group(permuted, i, pmat @ x),
                pmat @ project_group(basis, i, x),
                atol=1e-8,
            )


class TestLambdaMax:
    def test_p2(self):
        assert estimate_lambda_max(lap(path_graph(2)), seed=0) == pytest.approx(2.0, abs=1e-3)

    def test_k3(self):
        assert estimate_lambda_max(lap(complete_graph(3)), seed=0) == pytest.approx(3.0, abs=1e-3)

    def test_normalized_bound(self):
        for g in (path_graph(6), cycle_graph(9), complete_graph(4)):
            est = estimate_lambda_max(build_laplacian(g, GsoKind.NORMALIZED), seed=1)
            assert est <= 2.0 + 1e-3

    def test_zero_matrix(self):
        assert estimate_lambda_max(SparseSymMatrix.from_entries(3, []), seed=0) == 0.0
