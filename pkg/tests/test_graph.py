import numpy as np
import pytest

from nlsf import _kernels
from nlsf.datasets import complete_graph, path_graph, star_graph
from nlsf.errors import DataError, DimensionMismatch
from nlsf.graph import (
    GraphSignal,
    GsoKind,
    SparseSymMatrix,
    add_degree_features,
    build_laplacian,
    channel_lp_norms,
    channel_norms,
    is_connected,
    spmv,
)


def p2():
    return path_graph(2)


def k3():
    return complete_graph(3)


class TestSparseSymMatrix:
    def test_duplicate_entries_are_summed(self):
        m = SparseSymMatrix.from_entries(3, [(0, 1, 1.0), (1, 0, 2.0), (0, 1, 0.5)])
        assert m.nnz_stored == 1
        assert m.to_dense()[0, 1] == pytest.approx(3.5)

    def test_explicit_zeros_dropped(self):
        m = SparseSymMatrix.from_entries(2, [(0, 1, 1.0), (0, 1, -1.0)])
        assert m.nnz_stored == 0

    def test_index_out_of_range(self):
        with pytest.raises(DataError):
            SparseSymMatrix.from_entries(2, [(0, 2, 1.0)])

    def test_dense_round_trip(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((5, 5))
        a = a + a.T
        m = SparseSymMatrix.from_dense(a)
        np.testing.assert_allclose(m.to_dense(), a, atol=1e-12)

    def test_degrees_count_diagonal_once(self):
        m = SparseSymMatrix.from_entries(2, [(0, 0, 3.0), (0, 1, 1.0)])
        np.testing.assert_allclose(m.degrees(), [4.0, 1.0])


class TestLaplacian:
    def test_p2_combinatorial(self):
        lap = build_laplacian(p2(), GsoKind.COMBINATORIAL)
        np.testing.assert_allclose(lap.to_dense(), [[1, -1], [-1, 1]])

    def test_p2_normalized_equals_combinatorial(self):
        lap = build_laplacian(p2(), GsoKind.NORMALIZED)
        np.testing.assert_allclose(lap.to_dense(), [[1, -1], [-1, 1]])

    def test_k3_combinatorial(self):
        lap = build_laplacian(k3(), GsoKind.COMBINATORIAL)
        np.testing.assert_allclose(
            lap.to_dense(), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]
        )

    def test_constant_in_kernel(self):
        for g in (p2(), k3(), star_graph(3), path_graph(7)):
            lap = build_laplacian(g)
            np.testing.assert_allclose(spmv(lap, np.ones(g.n)), 0.0, atol=1e-12)

    def test_normalized_spectrum_in_0_2(self):
        for g in (p2(), k3(), star_graph(5), path_graph(9)):
            nrm = build_laplacian(g, GsoKind.NORMALIZED)
            w = np.linalg.eigvalsh(nrm.to_dense())
            assert w.min() >= -1e-10
            assert w.max() <= 2.0 + 1e-10

    def test_isolated_node_convention(self):
        adj = SparseSymMatrix.from_entries(3, [(0, 1, 1.0)])  # node 2 isolated
        g = GraphSignal(adj, np.zeros((3, 0)))
        nrm = build_laplacian(g, GsoKind.NORMALIZED)
        dense = nrm.to_dense()
        np.testing.assert_allclose(dense[2], 0.0)
        np.testing.assert_allclose(dense[:, 2], 0.0)
        with pytest.raises(DataError):
            build_laplacian(g, GsoKind.NORMALIZED, strict=True)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        g = path_graph(6)
        for _ in range(5):
            perm = rng.permutation(6)
            pg = g.permuted(perm)
            pmat = np.zeros((6, 6))
            pmat[perm, np.arange(6)] = 1.0
            lap = build_laplacian(g).to_dense()
            np.testing.assert_allclose(
                build_laplacian(pg).to_dense(), pmat @ lap @ pmat.T, atol=1e-12
            )


class TestSpmv:
    def test_p2(self):
        lap = build_laplacian(p2())
        np.testing.assert_allclose(spmv(lap, np.array([1.0, 0.0])), [1.0, -1.0])

    def test_zero(self):
        lap = build_laplacian(k3())
        np.testing.assert_allclose(spmv(lap, np.zeros((3, 2))), 0.0)

    def test_k3_constant(self):
        lap = build_laplacian(k3())
        np.testing.assert_allclose(spmv(lap, np.ones(3)), 0.0, atol=1e-12)

    def test_matches_dense(self):
        rng = np.random.default_rng(1)
        g = star_graph(6)
        lap = build_laplacian(g)
        x = rng.standard_normal((7, 3))
        np.testing.assert_allclose(spmv(lap, x), lap.to_dense() @ x, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spmv(build_laplacian(p2()), np.ones(3))

    def test_kernel_backends_agree(self):
        rng = np.random.default_rng(2)
        lap = build_laplacian(path_graph(11))
        indptr, indices, data = lap._csr()
        x = rng.standard_normal((11, 4))
        ref = _kernels.csr_matvec_numpy(indptr, indices, data, x)
        if _kernels.csr_matvec_numba is not None:
            np.testing.assert_allclose(
                _kernels.csr_matvec_numba(indptr, indices, data, x), ref, atol=1e-12
            )


class TestNorms:
    def test_three_four_five(self):
        np.testing.assert_allclose(channel_norms(np.array([[3.0], [4.0]])), [5.0])

    def test_zero_matrix(self):
        np.testing.assert_allclose(channel_norms(np.zeros((4, 2))), [0.0, 0.0])

    def test_identity(self):
        np.testing.assert_allclose(channel_norms(np.eye(2)), [1.0, 1.0])

    def test_lp_norm_normalized(self):
        x = np.array([[2.0], [0.0]])
        assert channel_lp_norms(x, 1.0, normalized=True)[0] == pytest.approx(1.0)


class TestDegreeFeatures:
    def test_p2(self):
        g = add_degree_features(p2())
        np.testing.assert_allclose(g.features, [[1.0], [1.0]])

    def test_k3(self):
        g = add_degree_features(k3())
        np.testing.assert_allclose(g.features, [[2.0], [2.0], [2.0]])

    def test_star(self):
        g = add_degree_features(star_graph(3))
        np.testing.assert_allclose(g.features.ravel(), [3.0, 1.0, 1.0, 1.0])

    def test_appends_to_existing(self):
        g = GraphSignal(p2().adjacency, np.array([[5.0], [6.0]]))
        g2 = add_degree_features(g)
        np.testing.assert_allclose(g2.features, [[5.0, 1.0], [6.0, 1.0]])


class TestGraphSignal:
    def test_negative_weight_rejected(self):
        adj = SparseSymMatrix.from_entries(2, [(0, 1, -1.0)])
        with pytest.raises(DataError):
            GraphSignal(adj, np.zeros((2, 0)))

    def test_self_loop_needs_flag(self):
        adj = SparseSymMatrix.from_entries(2, [(0, 0, 1.0), (0, 1, 1.0)])
        with pytest.raises(DataError):
            GraphSignal(adj, np.zeros((2, 0)))
        GraphSignal(adj, np.zeros((2, 0)), allow_self_loops=True)

    def test_feature_row_mismatch(self):
        with pytest.raises(DimensionMismatch):
            GraphSignal(p2().adjacency, np.zeros((3, 1)))


def test_is_connected():
    assert is_connected(path_graph(5).adjacency)
    assert not is_connected(SparseSymMatrix.from_entries(3, [(0, 1, 1.0)]))
