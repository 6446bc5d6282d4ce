"""Dense-kernel checks: structure matrices, eigenvalues, exp, det/inv."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floquet_dirac import linalg


def random_matrix(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


class TestStructureMatrices:
    def test_j1_signature(self):
        j1 = linalg.j1_matrix(3)
        assert j1.shape == (6, 6)
        assert np.array_equal(np.diag(j1), [1, 1, 1, -1, -1, -1])
        assert np.allclose(j1 @ j1, np.eye(6))

    def test_j_symplectic_unit(self):
        j = linalg.j_matrix(2)
        assert np.allclose(j @ j, -np.eye(4))
        assert np.allclose(j.T, -j)

    def test_j2_swap_involution(self):
        j2 = linalg.j2_matrix(2)
        assert np.allclose(j2 @ j2, np.eye(4))
        assert np.allclose(j2, j2.conj().T)

    def test_mixing_unitary_selfadjoint_involution(self):
        u = linalg.mixing_unitary(2)
        assert np.allclose(u, u.conj().T)
        assert np.allclose(u @ u, np.eye(4))

    def test_mixing_unitary_exchanges_structures(self):
        n = 2
        u = linalg.mixing_unitary(n)
        j1 = linalg.j1_matrix(n)
        j = linalg.j_matrix(n)
        # conjugation by the mixer turns the signature matrix into the
        # symplectic unit (up to the factor i that keeps it self-adjoint)
        assert np.allclose(u @ j1 @ u, 1j * j)


class TestValidation:
    def test_rejects_nonsquare(self):
        with pytest.raises(linalg.LinalgError):
            linalg.as_cmatrix(np.zeros((2, 3)))

    def test_rejects_oversize(self):
        with pytest.raises(linalg.LinalgError):
            linalg.as_cmatrix(np.eye(linalg.MAX_DIM + 2))

    def test_rejects_nonfinite(self):
        bad = np.eye(2, dtype=complex)
        bad[0, 0] = np.nan
        with pytest.raises(linalg.LinalgError):
            linalg.as_cmatrix(bad)


class TestEigenvalues:
    def test_diagonal_exact(self):
        es = linalg.eigenvalues(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(sorted(es.values.real), [1, 2, 3], atol=1e-12)
        assert np.max(np.abs(es.values.imag)) < 1e-12

    def test_defective_jordan_block(self):
        es = linalg.eigenvalues(np.array([[2.0, 1.0], [0.0, 2.0]]))
        assert np.allclose(es.values, [2.0, 2.0], atol=1e-6)

    def test_matches_reference_solver(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            m = random_matrix(rng, 6)
            got = np.sort_complex(linalg.eigenvalues(m).values)
            ref = np.sort_complex(np.linalg.eigvals(m))
            assert np.max(np.abs(got - ref)) < 1e-8 * max(1.0, np.abs(ref).max())

    def test_vectors_residual(self):
        rng = np.random.default_rng(11)
        m = random_matrix(rng, 5)
        es = linalg.eigenvalues(m, vectors=True)
        assert es.vectors is not None
        assert es.residual < 1e-10

    def test_polish_tightens_clustered_roots(self):
        # companion-type matrix of (x - 1)^1 (x - 1 - 1e-4): Newton polish
        # should not worsen the raw QR output
        m = np.array([[2.0 + 1e-4, -(1.0 + 1e-4)], [1.0, 0.0]])
        es = linalg.eigenvalues(m)
        roots = np.sort(es.values.real)
        assert abs(roots[0] - 1.0) < 1e-9
        assert abs(roots[1] - (1.0 + 1e-4)) < 1e-9


class TestMatExp:
    def test_identity(self):
        assert np.allclose(linalg.mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_nilpotent(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(linalg.mat_exp(n), [[1, 1], [0, 1]], atol=1e-14)

    def test_diagonal_phases(self):
        z = 0.7 - 0.3j
        got = linalg.mat_exp(np.diag([1j * z, -1j * z]))
        assert np.allclose(np.diag(got), [np.exp(1j * z), np.exp(-1j * z)])

    def test_norm_cap(self):
        with pytest.raises(linalg.LinalgError):
            linalg.mat_exp(800.0 * np.eye(2))


class TestDetInvLogDet:
    def test_det_inv_roundtrip(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 4) + 3 * np.eye(4)
        det, inv = linalg.det_inv(m)
        assert inv is not None
        assert abs(det - np.linalg.det(m)) < 1e-9 * abs(det)
        assert np.allclose(m @ inv, np.eye(4), atol=1e-10)

    def test_singular_returns_none_inverse(self):
        det, inv = linalg.det_inv(np.array([[1.0, 2.0], [2.0, 4.0]]))
        assert inv is None
        assert abs(det) < 1e-12

    def test_log_det_vs_trace(self):
        rng = np.random.default_rng(5)
        a = 0.3 * random_matrix(rng, 4)
        ld = linalg.log_det(linalg.mat_exp(a))
        assert abs(ld - np.trace(a)) < 1e-10

    def test_log_det_singular_raises(self):
        with pytest.raises(linalg.LinalgError):
            linalg.log_det(np.diag([1.0, 0.0]))


@given(st.integers(min_value=1, max_value=8))
def test_structure_algebra_any_size(n):
    j1, j, j2 = linalg.j1_matrix(n), linalg.j_matrix(n), linalg.j2_matrix(n)
    assert np.allclose(j1 @ j2 + j2 @ j1, 0)  # anticommute
    assert np.allclose(j, j1 @ j2)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_det_inv_consistency(seed):
    rng = np.random.default_rng(seed)
    m = random_matrix(rng, 3) + 2.5 * np.eye(3)
    det, inv = linalg.det_inv(m)
    if inv is not None:
        assert abs(det * np.linalg.det(inv) - 1.0) < 1e-8
