"""Row-sparse recovery on a fixed frequency grid.

Solves

    minimize   sum_g ||s_g||_2
    subject to sum_g a_mask(grid_g) s_g = observed,

the grid-restricted counterpart of the atomic-norm program: when the true
frequencies lie on the grid, the minimizers agree (same objective, support at
the true grid indices). The algorithm is ADMM with an affine-projection step
(cached factorization of A A^H) and a row-wise group soft-threshold step.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolationError, InfeasibleError, NumericalFailureError
from .model import SampleMask, atoms, wrap_distance

SUPPORT_RTOL = 1e-6
MIN_GRID_SPACING = 1e-8


def uniform_grid(g):
    """The canonical grid of g equispaced frequencies 0, 1/g, ..., (g-1)/g."""
    if g < 1:
        raise ContractViolationError(f"grid size must be positive, got {g}")
    return np.arange(g) / g


@dataclass
class GridProblem:
    """Observed rows plus the candidate frequency grid."""

    grid: np.ndarray
    mask: SampleMask
    observed: np.ndarray

    def __post_init__(self):
        self.grid = np.atleast_1d(np.asarray(self.grid, dtype=float)) % 1.0
        self.observed = np.atleast_2d(np.asarray(self.observed, dtype=np.complex128))
        if self.observed.shape[0] != self.mask.m:
            raise ContractViolationError(
                f"observed has {self.observed.shape[0]} rows, mask selects {self.mask.m}"
            )
        if self.grid.size < 1:
            raise ContractViolationError("grid must contain at least one frequency")
        srt = np.sort(self.grid)
        gaps = np.diff(np.concatenate([srt, [srt[0] + 1.0]]))
        if self.grid.size > 1 and gaps.min() < MIN_GRID_SPACING:
            raise ContractViolationError(
                f"grid points closer than {MIN_GRID_SPACING:g} "
                "are numerically indistinguishable"
            )

    @property
    def g(self):
        return self.grid.size


@dataclass
class L21Options:
    rho: float = 1.0
    tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 20000
    adapt_ratio: float = 10.0


def row_norms(s):
    return np.linalg.norm(np.atleast_2d(s), axis=1)


def support_rows(s, rtol=SUPPORT_RTOL):
    """Indices of rows whose norm exceeds rtol times the largest row norm."""
    norms = row_norms(s)
    top = norms.max() if norms.size else 0.0
    if top == 0.0:
        return np.zeros(0, dtype=np.intp)
    return np.flatnonzero(norms > rtol * top)


def l21_objective(s):
    """Sum of row norms — the value the program minimizes."""
    return float(row_norms(s).sum())


def _group_soft_threshold(v, thresh):
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.maximum(1.0 - thresh / np.maximum(norms, 1e-300), 0.0)
    return v * scale


def solve_l21(problem, opts=None):
    """Minimize the sum of row norms subject to exact data consistency.

    Returns the G x L coefficient matrix (a feasible iterate whose objective
    has converged). Raises InfeasibleError when no coefficient matrix can
    reproduce the observed rows (residual floor above opts.feas_tol), or
    when the iteration cap is hit before the split converges.
    """
    opts = opts or L21Options()
    a = atoms(problem.grid, problem.mask.n)[problem.mask.indices]
    b = problem.observed
    m, g = a.shape
    l = b.shape[1]
    rho = float(opts.rho)
    b_norm = max(np.linalg.norm(b), 1.0)

    # feasibility floor: the best unconstrained fit must already hit b
    fit, _, _, _ = np.linalg.lstsq(a, b, rcond=None)
    floor = np.linalg.norm(a @ fit - b)
    if floor > opts.feas_tol * b_norm:
        raise InfeasibleError(
            f"constraints are inconsistent: residual floor {floor:.3e} "
            f"exceeds {opts.feas_tol:g} * ||observed||"
        )

    # projection onto {s : A s = b} via s - A^H (A A^H)^+ (A s - b);
    # for the uniform full grid A A^H = G I and the solve collapses
    gram = a @ a.conj().T
    if np.allclose(gram, g * np.eye(m), atol=1e-8 * g):
        solve_gram = lambda r: r / g
    else:
        try:
            cho = scipy.linalg.cho_factor(gram + 1e-12 * np.eye(m))
            solve_gram = lambda r: scipy.linalg.cho_solve(cho, r)
        except scipy.linalg.LinAlgError:
            pinv = np.linalg.pinv(gram)
            solve_gram = lambda r: pinv @ r

    def project(w):
        return w - a.conj().T @ solve_gram(a @ w - b)

    z = project(np.zeros((g, l), dtype=np.complex128))
    u = np.zeros_like(z)
    for _ in range(opts.max_iter):
        s = project(z - u)
        z_new = _group_soft_threshold(s + u, 1.0 / rho)
        r_norm = np.linalg.norm(s - z_new)
        s_norm = rho * np.linalg.norm(z_new - z)
        u += s - z_new
        z = z_new
        r_rel = r_norm / max(np.linalg.norm(s), np.linalg.norm(z), 1.0)
        s_rel = s_norm / max(rho * np.linalg.norm(u), 1.0)
        if r_rel <= opts.tol and s_rel <= opts.tol:
            return s
        if r_rel > opts.adapt_ratio * s_rel:
            rho *= 2.0
            u *= 0.5
        elif s_rel > opts.adapt_ratio * r_rel:
            rho *= 0.5
            u *= 2.0
    raise NumericalFailureError(
        f"no convergence within {opts.max_iter} iterations "
        f"(primal {r_rel:.2e}, dual {s_rel:.2e})"
    )


def grid_estimate(problem, coeffs, rtol=SUPPORT_RTOL):
    """(frequencies, rows) of the active grid points of a solution."""
    sup = support_rows(coeffs, rtol)
    return problem.grid[sup], np.atleast_2d(coeffs)[sup]
