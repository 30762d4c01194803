"""Ground-truth instances: separated frequencies, amplitude rows, sampling masks.

The signal model is ``Y[j, l] = sum_k exp(i*2*pi*j*f_k) * amps[k, l]`` with the
sample index ``j`` running over ``0..N-1``. Frequencies live on the circle
[0, 1) and their pairwise wrap-around distances must exceed the separation
``1 / floor((N-1)/4)`` for the recovery guarantees to apply.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InfeasibleError, NumericalFailureError

REJECTION_CAP = 100_000


def atoms(freqs, n):
    """Matrix of sampled complex sinusoids, one column per frequency.

    Args:
        freqs: frequencies in cycles/sample (any real values; used mod 1).
        n: number of samples.

    Returns:
        (n, K) complex matrix with column k equal to exp(i*2*pi*j*freqs[k]).
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    return np.exp(2j * np.pi * np.outer(np.arange(n), freqs))


def wrap_distance(f, g):
    """Wrap-around distance on the unit circle, elementwise; always in [0, 0.5]."""
    d = np.abs(np.asarray(f, dtype=float) - np.asarray(g, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def min_separation(freqs):
    """Smallest pairwise wrap-around distance; inf for fewer than two points."""
    freqs = np.asarray(freqs, dtype=float)
    if freqs.size < 2:
        return np.inf
    d = wrap_distance(freqs[:, None], freqs[None, :])
    return d[~np.eye(freqs.size, dtype=bool)].min()


def separation_bound(n):
    """Minimum-separation threshold 1/floor((N-1)/4) for data length ``n``."""
    if n < 5:
        raise ContractViolationError(f"need N >= 5 for a positive bound, got {n}")
    return 1.0 / ((n - 1) // 4)


def draw_frequencies(k, n, rng, separation=None):
    """Draw ``k`` frequencies in [0,1), all pairwise wrap distances > separation.

    Uses rejection sampling: draw k i.i.d. uniforms, accept if separated,
    retry up to a fixed cap.

    Args:
        k: number of frequencies.
        n: data length, setting the default separation 1/floor((n-1)/4).
        rng: numpy Generator.
        separation: override for the separation threshold.

    Raises:
        InfeasibleError: k points with the required gaps cannot fit on the
            circle (k * separation >= 1).
        NumericalFailureError: rejection cap exhausted.
    """
    if k < 1:
        raise ContractViolationError(f"need K >= 1, got {k}")
    sep = separation_bound(n) if separation is None else float(separation)
    if k == 1:
        return rng.uniform(0.0, 1.0, size=1)
    if k * sep >= 1.0:
        raise InfeasibleError(
            f"cannot place {k} frequencies with pairwise gaps > {sep:.6g} "
            f"on the unit circle (k * separation = {k * sep:.6g} >= 1)"
        )
    for _ in range(REJECTION_CAP):
        f = rng.uniform(0.0, 1.0, size=k)
        if min_separation(f) > sep:
            return np.sort(f)
    raise NumericalFailureError(
        f"no separated draw of K={k} frequencies after {REJECTION_CAP} tries"
    )


def draw_sphere_phases(k, l, rng):
    """K x L matrix whose rows are uniform on the complex unit sphere in C^L."""
    if l < 1 or k < 1:
        raise ContractViolationError(f"need K, L >= 1, got K={k}, L={l}")
    g = rng.standard_normal((k, l)) + 1j * rng.standard_normal((k, l))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def draw_amplitudes(k, l, rng):
    """K x L i.i.d. standard complex Gaussian amplitude rows (CN(0,1) entries)."""
    if l < 1 or k < 1:
        raise ContractViolationError(f"need K, L >= 1, got K={k}, L={l}")
    g = rng.standard_normal((k, l)) + 1j * rng.standard_normal((k, l))
    return g / np.sqrt(2.0)


def synthesize(freqs, amps, n):
    """Superpose sampled sinusoids: Y[j, l] = sum_k exp(i*2*pi*j*f_k) amps[k, l].

    ``freqs`` may be empty, producing an (n, L) zero matrix when amps is
    (0, L)-shaped.
    """
    amps = np.atleast_2d(np.asarray(amps, dtype=np.complex128))
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if amps.shape[0] != freqs.size:
        raise ContractViolationError(
            f"amps has {amps.shape[0]} rows but {freqs.size} frequencies given"
        )
    if freqs.size == 0:
        return np.zeros((n, amps.shape[1]), dtype=np.complex128)
    return atoms(freqs, n) @ amps


@dataclass
class SpectralModel:
    """A ground-truth instance: frequencies, amplitude rows, and full data."""

    n: int
    freqs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        self.freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float)) % 1.0
        self.amps = np.atleast_2d(np.asarray(self.amps, dtype=np.complex128))
        if self.amps.shape[0] != self.freqs.size:
            raise ContractViolationError(
                f"{self.amps.shape[0]} amplitude rows for {self.freqs.size} frequencies"
            )

    @property
    def k(self):
        return self.freqs.size

    @property
    def l(self):
        return self.amps.shape[1]

    @property
    def data(self):
        """Full N x L data matrix, synthesized on demand."""
        return synthesize(self.freqs, self.amps, self.n)

    @classmethod
    def draw(cls, n, k, l, rng, separation=None):
        """Random instance: separated frequencies, Gaussian amplitude rows."""
        freqs = draw_frequencies(k, n, rng, separation=separation)
        return cls(n=n, freqs=freqs, amps=draw_amplitudes(k, l, rng))


@dataclass
class SampleMask:
    """Subset of the sample indices {0, ..., N-1} at which data is observed."""

    n: int
    indices: np.ndarray
    mode: str = "uniform-subset"

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1:
            raise ContractViolationError("mask indices must be a vector")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ContractViolationError(
                f"mask indices must lie in [0, {self.n}), got range "
                f"[{idx.min()}, {idx.max()}]"
            )
        if np.unique(idx).size != idx.size:
            raise ContractViolationError("mask indices must be unique")
        self.indices = np.sort(idx)

    @property
    def m(self):
        return self.indices.size

    def complement(self):
        """Indices of {0,...,N-1} not in the mask, sorted."""
        keep = np.ones(self.n, dtype=bool)
        keep[self.indices] = False
        return np.flatnonzero(keep)

    def apply(self, y):
        """Restrict an (N, ...) array to the observed rows."""
        y = np.asarray(y)
        if y.shape[0] != self.n:
            raise ContractViolationError(
                f"data has {y.shape[0]} rows, mask expects {self.n}"
            )
        return y[self.indices]


def draw_mask(n, m=None, mode="uniform-subset", rng=None, p=None):
    """Draw a sampling mask.

    Args:
        n: ambient number of samples.
        m: subset size (uniform-subset mode).
        mode: "uniform-subset" (fixed size, without replacement) or
            "bernoulli" (each index kept independently with probability p).
        rng: numpy Generator.
        p: keep probability (bernoulli mode).

    Returns:
        SampleMask with sorted indices.
    """
    if mode == "uniform-subset":
        if m is None or not (1 <= m <= n):
            raise ContractViolationError(f"need 1 <= M <= N, got M={m}, N={n}")
        idx = rng.choice(n, size=m, replace=False)
    elif mode == "bernoulli":
        if p is None or not (0.0 < p <= 1.0):
            raise ContractViolationError(f"need 0 < p <= 1, got p={p}")
        idx = np.flatnonzero(rng.uniform(size=n) < p)
    else:
        raise ContractViolationError(f"unknown mask mode {mode!r}")
    return SampleMask(n=n, indices=idx, mode=mode)
