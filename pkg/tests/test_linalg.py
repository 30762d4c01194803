import numpy as np
import pytest
import scipy.linalg

from mcanm.errors import ContractViolationError
from mcanm.linalg import (
    HermitianToeplitz,
    check_hermitian,
    diagonal_means,
    hermitian_eig,
    least_squares,
    psd_project,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


class TestHermitianEig:
    def test_identity(self):
        w, u = hermitian_eig(np.eye(3))
        assert np.allclose(w, 1.0)
        assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-12)

    def test_diagonal_sorted_descending(self):
        w, _ = hermitian_eig(np.diag([1.0, 3.0, 2.0]))
        assert np.allclose(w, [3.0, 2.0, 1.0])

    def test_rank_one_atom(self):
        # a(f) = exp(i 2 pi f k), k = 0..3, at f = 0.25: eigenvalues (4, 0, 0, 0)
        a = np.exp(2j * np.pi * 0.25 * np.arange(4))
        w, u = hermitian_eig(np.outer(a, a.conj()))
        assert np.allclose(w, [4.0, 0.0, 0.0, 0.0], atol=1e-12)
        # dominant eigenvector is the atom up to phase
        v = u[:, 0] * 2.0
        phase = v[0] / abs(v[0])
        assert np.allclose(v / phase, a, atol=1e-12)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(7)
        for n in (2, 5, 16, 64):
            a = random_hermitian(rng, n)
            w, u = hermitian_eig(a)
            assert np.all(np.diff(w) <= 1e-12)
            assert np.allclose(u @ np.diag(w) @ u.conj().T, a, atol=1e-10)
            assert np.allclose(u.conj().T @ u, np.eye(n), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractViolationError):
            hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ContractViolationError):
            hermitian_eig(np.zeros((2, 3)))

    def test_rejects_nan(self):
        a = np.eye(3, dtype=complex)
        a[1, 1] = np.nan
        with pytest.raises(ContractViolationError):
            hermitian_eig(a)


class TestPsdProject:
    def test_psd_fixed_point(self):
        rng = np.random.default_rng(3)
        b = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        a = b @ b.conj().T
        assert np.allclose(psd_project(a), a, atol=1e-10)

    def test_negative_definite_maps_to_zero(self):
        assert np.allclose(psd_project(-np.eye(4)), 0.0, atol=1e-14)

    def test_clips_against_direct_eigh(self):
        rng = np.random.default_rng(11)
        for n in (2, 7, 31):
            a = random_hermitian(rng, n)
            w, u = scipy.linalg.eigh(a)
            expected = (u * np.maximum(w, 0.0)) @ u.conj().T
            p = psd_project(a)
            assert np.allclose(p, expected, atol=1e-10)
            wp = np.linalg.eigvalsh(p)
            assert wp.min() > -1e-10

    def test_result_is_frobenius_nearest(self):
        # any Hermitian competitor that is PSD must be at least as far away
        rng = np.random.default_rng(5)
        a = random_hermitian(rng, 6)
        p = psd_project(a)
        d0 = np.linalg.norm(a - p)
        for _ in range(25):
            b = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            q = b @ b.conj().T
            assert np.linalg.norm(a - q) >= d0 - 1e-12


class TestLeastSquares:
    def test_exact_square_system(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        assert np.allclose(least_squares(a, a @ x), x, atol=1e-10)

    def test_overdetermined_residual_orthogonal(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
        b = rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2))
        x = least_squares(a, b)
        # normal equations: A^H (A x - b) = 0
        assert np.allclose(a.conj().T @ (a @ x - b), 0.0, atol=1e-10)

    def test_vector_rhs_round_trip(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        out = least_squares(a, a @ x)
        assert out.shape == (3,)
        assert np.allclose(out, x, atol=1e-10)

    def test_rank_deficient_warns(self):
        a = np.ones((4, 2), dtype=complex)
        with pytest.warns(UserWarning, match="rank-deficient"):
            least_squares(a, np.ones(4, dtype=complex))

    def test_underdetermined_rejected(self):
        with pytest.raises(ContractViolationError):
            least_squares(np.ones((2, 3)), np.ones(2))


class TestHermitianToeplitz:
    def test_materialize_small(self):
        t = HermitianToeplitz([2.0, 1.0 + 1.0j, 0.5j])
        m = t.materialize()
        expected = np.array(
            [
                [2.0, 1.0 + 1.0j, 0.5j],
                [1.0 - 1.0j, 2.0, 1.0 + 1.0j],
                [-0.5j, 1.0 - 1.0j, 2.0],
            ]
        )
        assert np.allclose(m, expected)

    def test_materialize_matches_scipy(self):
        rng = np.random.default_rng(9)
        for n in (1, 2, 8, 33):
            t = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            t[0] = t[0].real
            m = HermitianToeplitz(t).materialize()
            assert np.allclose(m, scipy.linalg.toeplitz(np.conj(t), t))
            check_hermitian(m)

    def test_generator_round_trip(self):
        rng = np.random.default_rng(4)
        t = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        t[0] = abs(t[0])
        m = HermitianToeplitz(t).materialize()
        assert np.allclose(m[0, :], t)

    def test_rejects_complex_t0(self):
        with pytest.raises(ContractViolationError):
            HermitianToeplitz([1.0 + 1.0j, 0.0])

    def test_rejects_empty(self):
        with pytest.raises(ContractViolationError):
            HermitianToeplitz([])


class TestDiagonalMeans:
    def test_toeplitz_input_recovers_generator(self):
        rng = np.random.default_rng(6)
        t = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        t[0] = t[0].real
        m = HermitianToeplitz(t).materialize()
        assert np.allclose(diagonal_means(m), t, atol=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
        d = diagonal_means(a)
        for j in range(7):
            vals = [a[m, m + j] for m in range(7 - j)]
            assert np.isclose(d[j], np.mean(vals), atol=1e-12)
