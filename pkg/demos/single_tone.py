"""
Recovering one sinusoid from full data
======================================

The smallest possible problem: a single complex sinusoid observed on a
few channels. The semidefinite solver should return its frequency to
near machine precision, the objective should equal the Euclidean norm of
the amplitude row, and the dual polynomial should peak at exactly the
true frequency.
"""

import numpy as np

from mcanm.anm import AnmProblem, SolverOptions, dual_polynomial, solve_anm
from mcanm.model import SpectralModel, draw_mask
from mcanm.retrieval import estimate_spectrum, peaks_from_dual

rng = np.random.default_rng(0)

# One tone at a random frequency, three channels, 48 samples, all observed.
n, l = 48, 3
model = SpectralModel(n=n, freqs=np.array([rng.uniform()]),
                      amps=(rng.normal(size=(1, l)) + 1j * rng.normal(size=(1, l))) / np.sqrt(2))
mask = draw_mask(n, m=n, rng=rng)

problem = AnmProblem(n, model.data, mask)
sol = solve_anm(problem, SolverOptions(tol=1e-8))
est = estimate_spectrum(sol)

print(f"true frequency      {model.freqs[0]:.12f}")
print(f"recovered frequency {est.freqs[0]:.12f}")
print(f"frequency error     {abs(est.freqs[0] - model.freqs[0]):.2e}")

# The atomic norm of a single atom is just the amplitude row norm.
print(f"\nobjective      {sol.objective:.10f}")
print(f"||s||_2        {np.linalg.norm(model.amps):.10f}")
print(f"duality gap    {sol.gap:.2e}  ({sol.iterations} iterations)")

# The dual polynomial Q(f) = a(f)^H V has unit norm exactly at the truth.
q = dual_polynomial(sol)
print(f"\n||Q(f_true)||  {q.norm(model.freqs[0]):.8f}")
print(f"peak location  {peaks_from_dual(q)[0]:.12f}")
