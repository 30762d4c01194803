"""Complex linear-algebra kernels shared by the solvers.

Everything here operates on plain ``numpy`` arrays of ``complex128``. The
routines are pure functions; none of them mutate their inputs.
"""

import warnings

import numpy as np

from .errors import ContractViolationError, NumericalFailureError

HERMITIAN_RTOL = 1e-10


def _as_complex_matrix(a, name="A"):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ContractViolationError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def check_hermitian(a, rtol=HERMITIAN_RTOL, name="A"):
    """Validate that ``a`` is square and Hermitian within ``rtol`` (relative
    to its Frobenius norm). Returns the exactly Hermitian part (A + A^H)/2."""
    a = _as_complex_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"{name} must be square, got {a.shape}")
    scale = np.linalg.norm(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > rtol * max(scale, 1e-300):
        raise ContractViolationError(
            f"{name} is not Hermitian: ||A - A^H|| = {dev:.3e} "
            f"exceeds {rtol:.1e} * ||A||"
        )
    return 0.5 * (a + a.conj().T)


def hermitian_eig(a, rtol=HERMITIAN_RTOL):
    """Eigendecomposition A = U diag(w) U^H of a Hermitian matrix.

    Args:
        a: square Hermitian matrix (validated within ``rtol`` relative).

    Returns:
        (w, U): real eigenvalues sorted descending and the matching unitary
        eigenvector matrix (columns).

    Raises:
        ContractViolationError: input not square/Hermitian within tolerance.
        NumericalFailureError: the eigensolver did not converge.
    """
    h = check_hermitian(a, rtol)
    try:
        w, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    return w[::-1].copy(), u[:, ::-1].copy()


def psd_project(a, rtol=HERMITIAN_RTOL):
    """Frobenius-nearest positive semidefinite matrix: clip negative eigenvalues."""
    w, u = hermitian_eig(a, rtol)
    pos = w > 0.0
    if np.all(pos):
        # already PSD; return the Hermitian part untouched
        return 0.5 * (np.asarray(a, dtype=np.complex128) + np.asarray(a).conj().T)
    uw = u[:, pos] * w[pos]
    return uw @ u[:, pos].conj().T


def least_squares(a, b):
    """Minimize ||A X - B||_F for A (m x n), B (m x L), m >= n.

    Returns the unique minimizer when A has full column rank; otherwise the
    minimum-norm solution, with a rank-deficiency warning.
    """
    a = _as_complex_matrix(a, "A")
    b = np.asarray(b, dtype=np.complex128)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.shape[0] < a.shape[1]:
        raise ContractViolationError(
            f"least_squares needs m >= n, got shape {a.shape}"
        )
    if a.shape[0] != b.shape[0]:
        raise ContractViolationError(
            f"row mismatch: A has {a.shape[0]} rows, B has {b.shape[0]}"
        )
    x, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < a.shape[1]:
        warnings.warn(
            f"rank-deficient least-squares system (rank {rank} < {a.shape[1]}); "
            "returning the minimum-norm solution",
            stacklevel=2,
        )
    return x[:, 0] if squeeze else x


class HermitianToeplitz:
    """Hermitian Toeplitz matrix stored by its first-row generator.

    The materialized matrix satisfies ``T[m, l] = t[l - m]`` for ``m <= l``
    and ``T = T^H`` below the diagonal, so ``t[0]`` must be real.
    """

    def __init__(self, t):
        t = np.asarray(t, dtype=np.complex128)
        if t.ndim != 1 or t.size == 0:
            raise ContractViolationError("generator must be a non-empty vector")
        if abs(t[0].imag) > HERMITIAN_RTOL * max(abs(t[0]), 1.0):
            raise ContractViolationError(
                f"t[0] must be real, got imaginary part {t[0].imag:.3e}"
            )
        t = t.copy()
        t[0] = t[0].real
        self.t = t

    @property
    def n(self):
        return self.t.size

    def materialize(self):
        """Dense n x n matrix T with T[m, l] = t[l - m] (l >= m), T = T^H."""
        n = self.n
        full = np.empty(2 * n - 1, dtype=np.complex128)
        full[n - 1:] = self.t
        full[: n - 1] = np.conj(self.t[1:][::-1])
        idx = np.arange(n)
        return full[(idx[None, :] - idx[:, None]) + n - 1]

    def __repr__(self):
        return f"HermitianToeplitz(n={self.n})"


def diagonal_means(a):
    """Mean of each upper diagonal of a square matrix.

    Returns the length-n vector ``d`` with ``d[j] = mean_m a[m, m + j]``;
    used to assemble the nearest Hermitian Toeplitz generator.
    """
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    offsets = (np.arange(n)[None, :] - np.arange(n)[:, None]).ravel()
    upper = offsets >= 0
    flat = a.ravel()[upper]
    off = offsets[upper]
    sums = np.bincount(off, weights=flat.real, minlength=n) + 1j * np.bincount(
        off, weights=flat.imag, minlength=n
    )
    return sums / (n - np.arange(n))
