"""From solver output to frequencies, amplitudes, and magnitudes.

Two independent retrieval paths are provided: the primary one decomposes the
Toeplitz block T = sum_j c_j a(f_j) a(f_j)^H by ESPRIT on its dominant
eigenspace, the secondary one locates the unit-norm peaks of the dual
polynomial. On an exact-recovery run the two agree and the Vandermonde
weights c_j equal the amplitude row norms ||s_j||_2.
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import (
    ContractViolationError,
    DecompositionError,
    NumericalFailureError,
)
from .linalg import HermitianToeplitz, hermitian_eig
from .model import atoms, wrap_distance
from .serialize import complex_to_pairs

RANK_RTOL = 1e-6
ESPRIT_COND_LIMIT = 1e12
PEAK_GRID = 1 << 14
PEAK_TOL = 1e-3
NEWTON_STEPS = 50


@dataclass
class SpectralEstimate:
    """Recovered support: frequencies, amplitude rows, Vandermonde weights."""

    freqs: np.ndarray
    amps: np.ndarray
    weights: np.ndarray
    residual: float = 0.0

    @property
    def k(self):
        return self.freqs.size

    def to_dict(self):
        return {
            "freqs": np.asarray(self.freqs, dtype=float).tolist(),
            "amps": complex_to_pairs(np.atleast_2d(self.amps)),
            "weights": np.asarray(self.weights, dtype=float).tolist(),
            "residual": float(self.residual),
        }


def esprit(u_signal, cond_limit=ESPRIT_COND_LIMIT):
    """Frequencies from an orthonormal basis of a Vandermonde signal subspace.

    Solves the shift-invariance system (rows 0..N-2 of U) Psi = (rows 1..N-1)
    in the least-squares sense and reads the frequencies off the eigenvalue
    angles of Psi.
    """
    u = np.atleast_2d(np.asarray(u_signal, dtype=np.complex128))
    n, r = u.shape
    if r == 0:
        return np.zeros(0)
    if n < r + 1:
        raise ContractViolationError(
            f"need at least r+1 = {r + 1} rows for the shift system, got {n}"
        )
    head, tail = u[:-1], u[1:]
    cond = np.linalg.cond(head)
    if not np.isfinite(cond) or cond > cond_limit:
        raise NumericalFailureError(
            f"shift-invariance system is ill-conditioned (cond = {cond:.3e})"
        )
    psi, _, _, _ = np.linalg.lstsq(head, tail, rcond=None)
    lam = np.linalg.eigvals(psi)
    return np.sort((np.angle(lam) / (2.0 * np.pi)) % 1.0)


def vandermonde_decompose(t, rank_rtol=RANK_RTOL, psd_rtol=1e-6):
    """Decompose a PSD Hermitian Toeplitz matrix as sum_j c_j a(f_j) a(f_j)^H.

    Args:
        t: HermitianToeplitz or dense Hermitian Toeplitz matrix.
        rank_rtol: eigenvalues above rank_rtol * lambda_max count toward the
            numerical rank r.
        psd_rtol: tolerated relative negativity of the smallest eigenvalue.

    Returns:
        (freqs, weights): r sorted frequencies in [0,1) and positive weights.

    Raises:
        ContractViolationError: input not PSD within tolerance.
        DecompositionError: full numerical rank (decomposition not unique),
            or a recovered weight below -1e-8.
    """
    if isinstance(t, HermitianToeplitz):
        gen = t.t
        dense = t.materialize()
    else:
        dense = np.asarray(t, dtype=np.complex128)
        gen = dense[0, :].copy()
    n = dense.shape[0]
    w, u = hermitian_eig(dense)
    lam_max = w[0] if n else 0.0
    if lam_max <= 0.0:
        if np.allclose(w, 0.0, atol=1e-12):
            return np.zeros(0), np.zeros(0)
        raise ContractViolationError("matrix is not PSD: all eigenvalues <= 0")
    if w[-1] < -psd_rtol * lam_max:
        raise ContractViolationError(
            f"matrix is not PSD within tolerance: min eigenvalue {w[-1]:.3e}"
        )
    r = int(np.count_nonzero(w > rank_rtol * lam_max))
    if r == 0:
        return np.zeros(0), np.zeros(0)
    if r == n:
        raise DecompositionError(
            f"matrix has full numerical rank {n}; "
            "low-rank decomposition is not unique"
        )
    freqs = esprit(u[:, :r])

    # weights from the generator system t_k = sum_j c_j exp(-i 2 pi k f_j),
    # solved as a real least-squares problem to keep c real
    a = np.conj(atoms(freqs, n))
    a_real = np.concatenate([a.real, a.imag])
    rhs = np.concatenate([gen.real, gen.imag])
    weights, _, _, _ = np.linalg.lstsq(a_real, rhs, rcond=None)
    if weights.min() < -1e-8:
        raise DecompositionError(
            f"recovered weight {weights.min():.3e} is negative beyond tolerance"
        )
    return freqs, weights


def recover_amplitudes(freqs, observed, mask):
    """Least-squares amplitude rows for known frequencies on observed rows.

    Returns (amps, residual) with amps of shape (r, L) and residual the
    Frobenius norm of the misfit. Raises NumericalFailureError when the
    restricted atoms are linearly dependent (frequency retrieval failed).
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    observed = np.atleast_2d(np.asarray(observed, dtype=np.complex128))
    if freqs.size == 0:
        return np.zeros((0, observed.shape[1]), dtype=np.complex128), float(
            np.linalg.norm(observed)
        )
    a = atoms(freqs, mask.n)[mask.indices]
    if a.shape[0] < freqs.size:
        raise ContractViolationError(
            f"{a.shape[0]} observed rows cannot determine {freqs.size} amplitudes"
        )
    amps, _, rank, _ = np.linalg.lstsq(a, observed, rcond=None)
    if rank < freqs.size:
        raise NumericalFailureError(
            "restricted atoms are linearly dependent; frequencies are degenerate"
        )
    return amps, float(np.linalg.norm(a @ amps - observed))


def estimate_spectrum(sol, rank_rtol=RANK_RTOL):
    """Full retrieval pipeline on a solver solution.

    Decomposes the Toeplitz block for frequencies and weights, then fits
    amplitude rows to the observed data at those frequencies.
    """
    freqs, weights = vandermonde_decompose(sol.toeplitz, rank_rtol=rank_rtol)
    amps, residual = recover_amplitudes(freqs, sol.observed, sol.mask)
    return SpectralEstimate(freqs=freqs, amps=amps, weights=weights, residual=residual)


def peaks_from_dual(q, grid=PEAK_GRID, peak_tol=PEAK_TOL, newton_steps=NEWTON_STEPS):
    """Frequencies where the dual polynomial reaches unit norm.

    Scans ||Q||^2 on a dense uniform grid for local maxima with
    ||Q|| > 1 - peak_tol and polishes each by Newton iterations on
    d||Q||^2/df. Raises NumericalFailureError when more than N peaks
    qualify (degenerate dual).
    """
    norms = q.grid_norms(grid)
    if norms.max() < 1.0 - peak_tol:
        return np.zeros(0)
    is_peak = (
        (norms >= np.roll(norms, 1))
        & (norms > np.roll(norms, -1))
        & (norms > 1.0 - peak_tol)
    )
    cand = np.flatnonzero(is_peak) / grid
    if cand.size > q.n:
        raise NumericalFailureError(
            f"{cand.size} near-unit peaks for a degree-{q.n - 1} dual polynomial"
        )
    refined = []
    for f in cand:
        for _ in range(newton_steps):
            qf = q(f)
            dq = q(f, order=1)
            d2q = q(f, order=2)
            slope = 2.0 * np.sum(dq * np.conj(qf)).real
            curv = 2.0 * np.sum(d2q * np.conj(qf)).real + 2.0 * np.sum(
                np.abs(dq) ** 2
            )
            if abs(slope) < 1e-12 or curv >= 0.0:
                break
            f = (f - slope / curv) % 1.0
        refined.append(f % 1.0)
    refined = np.sort(np.asarray(refined))
    # merge refinements that collapsed onto the same peak
    keep = []
    for f in refined:
        if not keep or wrap_distance(f, keep[-1]) > 1.0 / grid:
            keep.append(f)
    if len(keep) > 1 and wrap_distance(keep[0], keep[-1]) <= 1.0 / grid:
        keep.pop()
    return np.asarray(keep)


def rmse(true_freqs, est_freqs):
    """Root mean squared wrap-around error under the best matching.

    Returns None when the counts differ (counts as a failed trial); the
    matching minimizes the total squared wrap-around distance.
    """
    true_freqs = np.atleast_1d(np.asarray(true_freqs, dtype=float))
    est_freqs = np.atleast_1d(np.asarray(est_freqs, dtype=float))
    if true_freqs.size != est_freqs.size:
        return None
    if true_freqs.size == 0:
        return 0.0
    cost = wrap_distance(true_freqs[:, None], est_freqs[None, :]) ** 2
    row, col = scipy.optimize.linear_sum_assignment(cost)
    return float(np.sqrt(cost[row, col].mean()))
