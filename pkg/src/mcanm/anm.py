"""ADMM solver for the atomic-norm semidefinite program.

The primal problem over (X, Y, t) is

    minimize   tr(X)/2 + t[0]/2
    subject to [[X, Y^H], [Y, T(t)]] >= 0   (PSD),
               Y[mask] = observed,

with T(t) the Hermitian Toeplitz matrix generated by t. The solver splits the
PSD constraint off with a consensus variable Z: the (X, Y, t) update is closed
form (diagonal averaging for the Toeplitz block, pinning of observed rows),
the Z update is a projection onto the PSD cone, and the scaled multiplier
accumulates the gap. The dual polynomial coefficients V are read off the
multiplier block sitting at the Y position, so a converged solve hands back a
certificate of support along with the completed data.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ContractViolationError, NumericalFailureError
from .linalg import HermitianToeplitz
from .model import SampleMask

DUAL_CHECK_GRID = 1 << 14


@dataclass
class SolverOptions:
    """Knobs for :func:`solve_anm`.

    tol bounds the relative primal/dual residuals; tol_gap bounds the
    primal-dual objective gap relative to max(1, |objective|). rho adapts by
    residual balancing (doubling/halving when one residual exceeds
    adapt_ratio times the other, checked every adapt_every iterations).
    """

    rho: float = 1.0
    tol: float = 1e-6
    tol_gap: float = 1e-4
    max_iter: int = 20000
    dual_slack: float = 1e-3
    adapt_ratio: float = 10.0
    adapt_every: int = 50


@dataclass
class AnmProblem:
    """Observed rows of an N x L data matrix plus where they sit."""

    n: int
    observed: np.ndarray
    mask: SampleMask
    variant: str = "standard"

    def __post_init__(self):
        self.observed = np.atleast_2d(np.asarray(self.observed, dtype=np.complex128))
        if self.mask.n != self.n:
            raise ContractViolationError(
                f"mask is over {self.mask.n} samples, problem has N={self.n}"
            )
        if self.observed.shape[0] != self.mask.m:
            raise ContractViolationError(
                f"observed has {self.observed.shape[0]} rows, mask selects {self.mask.m}"
            )
        if self.mask.m < 1:
            raise ContractViolationError("need at least one observed row")
        if not np.all(np.isfinite(self.observed)):
            raise ContractViolationError("observed data contains non-finite entries")
        if self.variant not in ("standard", "reduced"):
            raise ContractViolationError(f"unknown variant {self.variant!r}")

    @classmethod
    def full_data(cls, y):
        """Problem with every row observed."""
        y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
        n = y.shape[0]
        return cls(n=n, observed=y, mask=SampleMask(n=n, indices=np.arange(n)))


@dataclass
class AnmSolution:
    """Converged (or best-effort) iterate of the SDP."""

    y: np.ndarray
    toeplitz: HermitianToeplitz
    x: np.ndarray
    v: np.ndarray
    objective: float
    dual_objective: float
    iterations: int
    converged: bool
    primal_residuals: np.ndarray
    dual_residuals: np.ndarray
    mask: SampleMask
    observed: np.ndarray
    variant: str = "standard"

    @property
    def gap(self):
        """Primal-dual objective gap, relative to max(1, |objective|)."""
        return abs(self.objective - self.dual_objective) / max(1.0, abs(self.objective))

    def to_dict(self):
        """JSON-ready summary (objective, iterations, residuals, t, V)."""
        from .serialize import complex_to_pairs

        return {
            "objective": self.objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "primal_residual": float(self.primal_residuals[-1]),
            "dual_residual": float(self.dual_residuals[-1]),
            "t": complex_to_pairs(self.toeplitz.t),
            "V": complex_to_pairs(self.v),
        }


def _psd_part(a, w, u):
    """Positive part of a Hermitian matrix given its eigendecomposition."""
    npos = int(np.count_nonzero(w > 0.0))
    n = w.size
    if npos == 0:
        return np.zeros_like(a)
    if npos <= n - npos:
        pos = w > 0.0
        return (u[:, pos] * w[pos]) @ u[:, pos].conj().T
    neg = w < 0.0
    if not np.any(neg):
        return a
    return a - (u[:, neg] * w[neg]) @ u[:, neg].conj().T


def solve_anm(problem, opts=None):
    """Run ADMM on the atomic-norm SDP until the stopping test passes.

    Stops when the relative primal and dual residuals are both below
    opts.tol and the primal-dual gap is below opts.tol_gap; otherwise runs to
    opts.max_iter and returns the best iterate seen, flagged non-converged.
    """
    opts = opts or SolverOptions()
    n, l = problem.n, problem.observed.shape[1]
    obs = problem.observed
    mi = problem.mask.indices
    nb = n + l
    rho = float(opts.rho)

    # gather/scatter indices for the Toeplitz block: entry (m, k) of the
    # T block reads generator offset k - m, stored at position k - m + n - 1
    # of the full two-sided generator
    idx = np.arange(n)
    offsets = (idx[None, :] - idx[:, None]) + (n - 1)
    offsets_flat = offsets.ravel()
    denom = 2.0 * (n - idx)
    eye_l = np.eye(l)

    Z = np.zeros((nb, nb), dtype=np.complex128)
    Lam = np.zeros_like(Z)
    B = np.zeros_like(Z)
    obj = 0.0
    dual_obj = 0.0
    prim_hist, dual_hist = [], []
    best_score = np.inf
    best = None
    converged = False
    it = 0

    for it in range(1, opts.max_iter + 1):
        W = Z - Lam / rho

        # --- (X, Y, t) step: closed-form minimizer of the augmented term ---
        wx = W[:l, :l]
        X = 0.5 * (wx + wx.conj().T) - (0.5 / rho) * eye_l
        Y = 0.5 * (W[l:, :l] + W[:l, l:].conj().T)
        Y[mi] = obs
        wt = W[l:, l:]
        sums = np.bincount(
            offsets_flat, weights=wt.real.ravel(), minlength=2 * n - 1
        ) + 1j * np.bincount(offsets_flat, weights=wt.imag.ravel(), minlength=2 * n - 1)
        t = (sums[n - 1 :] + np.conj(sums[n - 1 :: -1])) / denom
        t[0] -= 0.5 / (rho * n)

        full_gen = np.concatenate([np.conj(t[1:][::-1]), t])
        B[:l, :l] = X
        B[l:, :l] = Y
        B[:l, l:] = Y.conj().T
        B[l:, l:] = full_gen[offsets]

        # --- Z step: project onto the PSD cone ---
        A = B + Lam / rho
        A = 0.5 * (A + A.conj().T)
        try:
            w, u = scipy.linalg.eigh(A, driver="evd", check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalFailureError(f"PSD projection failed: {exc}") from exc
        Z_new = _psd_part(A, w, u)

        # --- multiplier step and residuals ---
        R = B - Z_new
        r_norm = np.linalg.norm(R)
        s_norm = rho * np.linalg.norm(Z_new - Z)
        Lam += rho * R
        Z = Z_new

        r_rel = r_norm / max(np.linalg.norm(B), np.linalg.norm(Z), 1.0)
        s_rel = s_norm / max(np.linalg.norm(Lam), 1.0)
        prim_hist.append(r_rel)
        dual_hist.append(s_rel)

        obj = 0.5 * (np.trace(X).real + t[0].real)
        V_obs = 2.0 * Lam[l + mi, :l]
        dual_obj = float(np.sum(np.conj(V_obs) * obs).real)
        gap_ok = abs(obj - dual_obj) <= opts.tol_gap * max(1.0, abs(obj))

        score = max(r_rel, s_rel)
        if score < best_score:
            best_score = score
            best = (X.copy(), Y.copy(), t.copy(), Lam.copy(), obj, dual_obj, it)

        if r_rel <= opts.tol and s_rel <= opts.tol and gap_ok:
            best = (X, Y, t, Lam, obj, dual_obj, it)
            converged = True
            break

        # residual balancing keeps the two residuals within a decade; the
        # cooldown stops rho from running away geometrically when the
        # ratio stays skewed over consecutive iterations
        if it % opts.adapt_every == 0:
            if r_rel > opts.adapt_ratio * s_rel:
                rho *= 2.0
            elif s_rel > opts.adapt_ratio * r_rel:
                rho *= 0.5

    X, Y, t, Lam, obj, dual_obj, it_best = best
    t = t.copy()
    t[0] = t[0].real
    return AnmSolution(
        y=Y,
        toeplitz=HermitianToeplitz(t),
        x=0.5 * (X + X.conj().T),
        v=2.0 * Lam[l:, :l],
        objective=float(obj),
        dual_objective=float(dual_obj),
        iterations=it if converged else it_best,
        converged=converged,
        primal_residuals=np.asarray(prim_hist),
        dual_residuals=np.asarray(dual_hist),
        mask=problem.mask,
        observed=obs,
        variant=problem.variant,
    )


def reduce_channels(observed=None, covariance=None, eig_rtol=1e-13):
    """Replace many channels by an equivalent small set.

    Exactly one of ``observed`` / ``covariance`` must be given. With
    ``observed`` (M x L), returns W of shape (M, L') with
    W W^H = observed observed^H / L and L' its numerical rank. With
    ``covariance`` (a Hermitian PSD M x M matrix, the large-L limit of that
    scaled Gram), returns W with W W^H = covariance.

    The reduced matrix feeds :class:`AnmProblem` in place of the observed
    data; frequencies are unchanged and recovered magnitudes shrink by
    sqrt(L) in the finite-L mode.
    """
    if (observed is None) == (covariance is None):
        raise ContractViolationError("pass exactly one of observed / covariance")
    if observed is not None:
        observed = np.atleast_2d(np.asarray(observed, dtype=np.complex128))
        l = observed.shape[1]
        gram = observed @ observed.conj().T / l
    else:
        gram = np.asarray(covariance, dtype=np.complex128)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ContractViolationError("covariance must be square")
        dev = np.linalg.norm(gram - gram.conj().T)
        if dev > 1e-10 * max(np.linalg.norm(gram), 1e-300):
            raise ContractViolationError("covariance must be Hermitian")
        gram = 0.5 * (gram + gram.conj().T)

    w, u = np.linalg.eigh(gram)
    wmax = w[-1] if w.size else 0.0
    scale = max(abs(w[0]), abs(wmax)) if w.size else 0.0
    if covariance is not None and w[0] < -1e-10 * scale:
        raise ContractViolationError(
            f"covariance is not PSD: min eigenvalue {w[0]:.3e}"
        )
    if wmax <= 0.0:
        return np.zeros((gram.shape[0], 0), dtype=np.complex128)
    keep = w > eig_rtol * wmax
    return u[:, keep][:, ::-1] * np.sqrt(w[keep][::-1])


class DualPolynomial:
    """Vector trigonometric polynomial Q(f) = a(f)^H V and its derivatives."""

    def __init__(self, v):
        self.v = np.atleast_2d(np.asarray(v, dtype=np.complex128))
        self.n, self.l = self.v.shape

    def __call__(self, f, order=0):
        """Evaluate d^order Q / df^order at frequencies ``f``.

        Returns shape (L,) for scalar f, else (len(f), L).
        """
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        j = np.arange(self.n)
        phase = np.exp(-2j * np.pi * np.outer(f_arr, j))
        if order:
            phase = phase * (-2j * np.pi * j) ** order
        out = phase @ self.v
        return out[0] if np.isscalar(f) or np.ndim(f) == 0 else out

    def norm(self, f):
        """Euclidean norm ||Q(f)||_2, vectorized over f."""
        q = self.__call__(f)
        return np.linalg.norm(q, axis=-1)

    def grid_norms(self, points=DUAL_CHECK_GRID):
        """||Q|| on the uniform grid p/points, evaluated by FFT."""
        if points < self.n:
            raise ContractViolationError("grid must have at least N points")
        pad = np.zeros((points, self.l), dtype=np.complex128)
        pad[: self.n] = self.v
        return np.linalg.norm(np.fft.fft(pad, axis=0), axis=1)


def dual_polynomial(sol, slack=None, grid=DUAL_CHECK_GRID):
    """Dual polynomial of a converged solve, validated for feasibility.

    Raises NumericalFailureError if the solve did not converge or if
    sup ||Q|| on the check grid exceeds 1 + slack (dual infeasibility —
    an upstream solver failure).
    """
    if not sol.converged:
        raise NumericalFailureError("dual polynomial requires a converged solve")
    slack = 1e-3 if slack is None else float(slack)
    q = DualPolynomial(sol.v)
    sup = q.grid_norms(grid).max()
    if sup > 1.0 + slack:
        raise NumericalFailureError(
            f"dual polynomial infeasible: sup ||Q|| = {sup:.6f} > 1 + {slack:g}"
        )
    return q
