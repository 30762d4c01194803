"""Dual-certificate construction and numerical verification.

Works on the symmetric index set J = {-2n, ..., 2n} (data length N = 4n + n0,
n0 in {1,...,4}) rather than the solver's {0, ..., N-1}; the shift between the
two conventions multiplies every atom by a unimodular phase and so changes no
norms. The certificate

    Qbar(f) = sum_k alpha_k Kbar(f - f_k) + beta_k Kbar'(f - f_k)

is built from the squared Fejer kernel K (or its randomly masked analog Kbar)
by solving a 2K x 2K interpolation system: Qbar(f_k) = phi_k with vanishing
derivative at each f_k. Verification checks the interpolation residuals, that
||Qbar|| stays below 1 away from the support, and that ||Qbar||^2 is strictly
concave on a +-0.16/n neighborhood of each support point.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    InfeasibleError,
    NumericalFailureError,
)
from .model import min_separation, wrap_distance

NEAR_RADIUS = 0.16
GRID_DENSITY = 1000
INTERP_TOL = 1e-8
COND_LIMIT = 1e10


@dataclass
class FejerKernel:
    """Squared Fejer kernel coefficients g(j), j = -2n..2n (stored in order)."""

    n: int
    g: np.ndarray

    @property
    def offsets(self):
        return np.arange(-2 * self.n, 2 * self.n + 1)

    @property
    def c0(self):
        """sqrt(|K''(0)|) = sqrt(4 pi^2 n (n+2) / 3)."""
        return float(np.sqrt(4.0 * np.pi**2 * self.n * (self.n + 2) / 3.0))


def fejer_coeffs(n):
    """Coefficients of the squared Fejer kernel of half-bandwidth 2n.

    K(f) = [sin(pi(n+1)f) / ((n+1) sin(pi f))]^4 = sum_j g(j) exp(-i2pi j f);
    g is the normalized self-convolution of the triangle 1 - |k|/(n+1) and
    satisfies 0 < g(j) <= 1, g(j) = g(-j), sum_j g(j) = K(0) = 1.
    """
    if n < 1:
        raise ContractViolationError(f"kernel parameter must be >= 1, got n={n}")
    k = np.arange(-n, n + 1)
    tri = 1.0 - np.abs(k) / (n + 1.0)
    g = np.convolve(tri, tri) / (n + 1.0) ** 2
    return FejerKernel(n=n, g=g)


def kernel_eval(kernel, f, order=0, mask=None):
    """Evaluate the (masked) kernel or one of its first three derivatives.

    Computes sum_{j in mask} g(j) (-i 2 pi j)^order exp(-i 2 pi j f), with
    mask a subset of {-2n,...,2n} (None means all of it). Vectorized over f.
    """
    if order not in (0, 1, 2, 3):
        raise ContractViolationError(f"derivative order must be 0..3, got {order}")
    j = kernel.offsets
    g = kernel.g
    if mask is not None:
        sel = _mask_selector(kernel.n, mask)
        j, g = j[sel], g[sel]
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    coeff = g * (-2j * np.pi * j) ** order
    out = np.exp(-2j * np.pi * np.outer(f_arr, j)) @ coeff
    return out[0] if np.ndim(f) == 0 else out


def _mask_selector(n, mask):
    """Boolean selector over the stored j = -2n..2n axis for a j-value mask."""
    mask = np.asarray(mask, dtype=int)
    if mask.size and (mask.min() < -2 * n or mask.max() > 2 * n):
        raise ContractViolationError(
            f"mask indices must lie in [-{2 * n}, {2 * n}]"
        )
    if np.unique(mask).size != mask.size:
        raise ContractViolationError("mask indices must be unique")
    sel = np.zeros(4 * n + 1, dtype=bool)
    sel[mask + 2 * n] = True
    return sel


def draw_index_mask(n, p, rng):
    """Bernoulli(p) subset of the symmetric index set {-2n, ..., 2n}."""
    if not 0.0 < p <= 1.0:
        raise ContractViolationError(f"need 0 < p <= 1, got p={p}")
    j = np.arange(-2 * n, 2 * n + 1)
    return j[rng.uniform(size=j.size) < p]


@dataclass
class CertificateSystem:
    """Solved interpolation system and the polynomial it defines."""

    kernel: FejerKernel
    freqs: np.ndarray
    phases: np.ndarray
    mask: np.ndarray  # j values, or None for full data
    dbar: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    coeffs: np.ndarray  # (4n+1) x L rows w_j of Qbar

    @property
    def k(self):
        return self.freqs.size

    @property
    def c0(self):
        return self.kernel.c0

    def evaluate(self, f, order=0):
        """d^order Qbar / df^order at f; shape (L,) scalar f, else (len(f), L)."""
        j = self.kernel.offsets
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        phase = np.exp(-2j * np.pi * np.outer(f_arr, j))
        if order:
            phase = phase * (-2j * np.pi * j) ** order
        out = phase @ self.coeffs
        return out[0] if np.ndim(f) == 0 else out

    def grid_values(self, points, order=0):
        """Qbar (or a derivative) on the uniform grid p/points, via FFT."""
        n4 = self.coeffs.shape[0]
        if points < n4:
            raise ContractViolationError(
                f"grid must have at least {n4} points for exact evaluation"
            )
        j = self.kernel.offsets
        rows = self.coeffs
        if order:
            rows = rows * ((-2j * np.pi * j) ** order)[:, None]
        pad = np.zeros((points, rows.shape[1]), dtype=np.complex128)
        pad[j % points] = rows
        return np.fft.fft(pad, axis=0)


def build_certificate(freqs, phases, n, mask=None, cond_limit=COND_LIMIT):
    """Solve the interpolation system and return the certificate polynomial.

    Args:
        freqs: K support frequencies with wrap separation >= 1/n.
        phases: K x L unit-norm sign rows phi_k to interpolate.
        n: kernel half-bandwidth parameter (N = 4n + n0).
        mask: observed index subset of {-2n,...,2n}; None for full data.
        cond_limit: 1-norm condition bound on the system matrix.

    Raises:
        InfeasibleError: system matrix singular or condition above
            cond_limit (expected when the mask is too small).
        NumericalFailureError: solved coefficients fail the interpolation
            residual checks.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float)) % 1.0
    phases = np.atleast_2d(np.asarray(phases, dtype=np.complex128))
    k = freqs.size
    if k < 1:
        raise ContractViolationError("need at least one support frequency")
    if phases.shape[0] != k:
        raise ContractViolationError(
            f"{phases.shape[0]} phase rows for {k} frequencies"
        )
    kernel = fejer_coeffs(n)
    if k > 1 and min_separation(freqs) < 1.0 / n:
        raise ContractViolationError(
            f"support separation {min_separation(freqs):.4g} below 1/n = {1.0 / n:.4g}"
        )
    if mask is not None:
        mask = np.asarray(mask, dtype=int)

    diffs = freqs[:, None] - freqs[None, :]
    d0 = kernel_eval(kernel, diffs.ravel(), 0, mask).reshape(k, k)
    d1 = kernel_eval(kernel, diffs.ravel(), 1, mask).reshape(k, k)
    d2 = kernel_eval(kernel, diffs.ravel(), 2, mask).reshape(k, k)
    c0 = kernel.c0
    dbar = np.block([[d0, d1 / c0], [-d1 / c0, -d2 / c0**2]])

    # structural sanity: the scaled system must be Hermitian with the written
    # skew pattern between its off-diagonal blocks
    assert np.allclose(dbar, dbar.conj().T, atol=1e-10 * max(1.0, abs(d0[0, 0])))
    assert np.allclose(dbar[k:, :k], -dbar[:k, k:], atol=1e-12)

    try:
        cond = abs(np.linalg.cond(dbar, 1))
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > cond_limit:
        raise InfeasibleError(
            f"certificate system is ill-conditioned (cond_1 = {cond:.3e}); "
            "the mask is likely too small for this support"
        )
    rhs = np.concatenate([phases, np.zeros_like(phases)])
    try:
        sol = np.linalg.solve(dbar, rhs)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError(f"certificate system is singular: {exc}") from exc
    alpha, beta = sol[:k], sol[k:] / c0

    # assemble the coefficient rows w_j = delta_j g(j) sum_k
    # exp(i 2 pi j f_k) (alpha_k + (-i 2 pi j) beta_k)
    j = kernel.offsets
    g = kernel.g.copy()
    if mask is not None:
        g[~_mask_selector(n, mask)] = 0.0
    ephase = np.exp(2j * np.pi * np.outer(j, freqs))
    coeffs = (g[:, None] * ephase) @ alpha + (
        (g * (-2j * np.pi * j))[:, None] * ephase
    ) @ beta

    system = CertificateSystem(
        kernel=kernel,
        freqs=freqs,
        phases=phases,
        mask=mask,
        dbar=dbar,
        alpha=alpha,
        beta=beta,
        coeffs=coeffs,
    )
    interp = np.linalg.norm(system.evaluate(freqs) - phases, axis=1)
    slope = np.linalg.norm(system.evaluate(freqs, order=1), axis=1)
    if interp.max() > INTERP_TOL or slope.max() > 1e-6 * c0:
        raise NumericalFailureError(
            f"interpolation residuals too large after solve "
            f"(value {interp.max():.3e}, derivative {slope.max():.3e})"
        )
    return system


@dataclass
class CertificateReport:
    """Outcome of numerical certificate verification."""

    interp_errors: np.ndarray
    off_support_margin: float
    near_curvature: np.ndarray
    valid: bool

    def to_dict(self, mask=None, seed=None):
        return {
            "interp_errors": np.asarray(self.interp_errors, dtype=float).tolist(),
            "off_support_margin": float(self.off_support_margin),
            "near_curvature": np.asarray(self.near_curvature, dtype=float).tolist(),
            "valid": bool(self.valid),
            "mask": None if mask is None else np.asarray(mask, dtype=int).tolist(),
            "seed": None if seed is None else int(seed),
        }


def _norm_sq_curvature(q0, q1, q2):
    """d^2 ||Q||^2 / df^2 from Q and its first two derivatives (rows)."""
    return 2.0 * np.sum(q2 * np.conj(q0), axis=-1).real + 2.0 * np.sum(
        np.abs(q1) ** 2, axis=-1
    )


def verify_certificate(system, grid_density=GRID_DENSITY, interp_tol=INTERP_TOL):
    """Check the optimality conditions of a built certificate numerically.

    Evaluates ||Qbar|| and the second derivative of ||Qbar||^2 on a uniform
    grid of grid_density * n points plus the support points. The report is
    valid when the interpolation errors stay below interp_tol, the far-region
    norm stays below 1 (positive margin), and ||Qbar||^2 is concave on every
    near region (f_k - 0.16/n, f_k + 0.16/n).
    """
    n = system.kernel.n
    points = int(grid_density * n)
    grid = np.arange(points) / points
    q0 = system.grid_values(points, 0)
    q1 = system.grid_values(points, 1)
    q2 = system.grid_values(points, 2)
    norms = np.linalg.norm(q0, axis=1)
    curv = _norm_sq_curvature(q0, q1, q2)

    radius = NEAR_RADIUS / n
    dist = wrap_distance(grid[:, None], system.freqs[None, :])
    near_any = (dist < radius).any(axis=1)

    far_sup = norms[~near_any].max() if (~near_any).any() else 0.0
    margin = 1.0 - float(far_sup)

    near_curv = np.empty(system.k)
    for k in range(system.k):
        sel = dist[:, k] < radius
        c_grid = curv[sel].max() if sel.any() else -np.inf
        fk = system.freqs[k]
        c_supp = _norm_sq_curvature(
            system.evaluate(fk), system.evaluate(fk, 1), system.evaluate(fk, 2)
        )
        near_curv[k] = max(c_grid, float(c_supp))

    interp = np.linalg.norm(system.evaluate(system.freqs) - system.phases, axis=1)
    valid = bool(
        interp.max() <= interp_tol and margin > 0.0 and np.all(near_curv < 0.0)
    )
    return CertificateReport(
        interp_errors=interp,
        off_support_margin=margin,
        near_curvature=near_curv,
        valid=valid,
    )


def verify_grid_certificate(system, grid, interp_tol=INTERP_TOL):
    """Verify the finitely many constraints of the grid-restricted program.

    The support must be a subset of ``grid``; ||Qbar|| < 1 is required only
    on the remaining grid points, and no curvature condition applies (the
    near_curvature slot is left empty).
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float)) % 1.0
    dist = wrap_distance(grid[:, None], system.freqs[None, :])
    on_support = (dist < 1e-12).any(axis=1)
    covered = (dist < 1e-12).any(axis=0)
    if not covered.all():
        raise ContractViolationError("certificate support must lie on the grid")
    off = grid[~on_support]
    far_sup = float(np.linalg.norm(system.evaluate(off), axis=1).max()) if off.size else 0.0
    interp = np.linalg.norm(system.evaluate(system.freqs) - system.phases, axis=1)
    margin = 1.0 - far_sup
    valid = bool(interp.max() <= interp_tol and margin > 0.0)
    return CertificateReport(
        interp_errors=interp,
        off_support_margin=margin,
        near_curvature=np.zeros(0),
        valid=valid,
    )
