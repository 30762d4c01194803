import numpy as np
import pytest

from mcanm.anm import AnmProblem, solve_anm
from mcanm.errors import ContractViolationError, InfeasibleError
from mcanm.l21 import (
    GridProblem,
    L21Options,
    grid_estimate,
    l21_objective,
    solve_l21,
    support_rows,
    uniform_grid,
)
from mcanm.model import atoms, draw_amplitudes, draw_mask, synthesize


def on_grid_instance(rng, n=32, g=32, k=3, l=4, m=16):
    grid = uniform_grid(g)
    idx = np.sort(rng.choice(g, size=k, replace=False))
    amps = draw_amplitudes(k, l, rng)
    y = synthesize(grid[idx], amps, n)
    mask = draw_mask(n, m=m, rng=rng)
    problem = GridProblem(grid=grid, mask=mask, observed=mask.apply(y))
    return problem, idx, amps


class TestGridProblem:
    def test_near_coincident_grid_rejected(self):
        mask = draw_mask(8, m=4, rng=np.random.default_rng(0))
        with pytest.raises(ContractViolationError):
            GridProblem(
                grid=[0.1, 0.1 + 1e-9, 0.5], mask=mask, observed=np.zeros((4, 1))
            )

    def test_wraparound_spacing_checked(self):
        mask = draw_mask(8, m=4, rng=np.random.default_rng(0))
        with pytest.raises(ContractViolationError):
            GridProblem(
                grid=[1e-10, 0.5, 1.0 - 1e-10],
                mask=mask,
                observed=np.zeros((4, 1)),
            )


class TestSolveL21:
    def test_zero_data(self):
        mask = draw_mask(16, m=8, rng=np.random.default_rng(0))
        problem = GridProblem(
            grid=uniform_grid(16), mask=mask, observed=np.zeros((8, 2))
        )
        s = solve_l21(problem)
        assert np.allclose(s, 0.0, atol=1e-10)
        assert support_rows(s).size == 0

    def test_single_on_grid_atom_full_mask(self):
        n = 16
        mask = draw_mask(n, m=n, rng=np.random.default_rng(1))
        grid = uniform_grid(n)
        s_true = np.array([[2.0 - 1.0j, 0.5j]])
        y = synthesize([grid[5]], s_true, n)
        problem = GridProblem(grid=grid, mask=mask, observed=y)
        s = solve_l21(problem)
        sup = support_rows(s)
        assert np.array_equal(sup, [5])
        assert np.allclose(s[5], s_true[0], atol=1e-6)

    def test_support_recovery_and_anm_agreement(self):
        rng = np.random.default_rng(2)
        problem, idx, amps = on_grid_instance(rng)
        s = solve_l21(problem)
        assert np.array_equal(support_rows(s), idx)
        sol = solve_anm(
            AnmProblem(n=32, observed=problem.observed, mask=problem.mask)
        )
        assert sol.converged
        assert abs(l21_objective(s) - sol.objective) <= 1e-3

    def test_solution_is_feasible(self):
        rng = np.random.default_rng(3)
        problem, _, _ = on_grid_instance(rng)
        s = solve_l21(problem)
        a = atoms(problem.grid, problem.mask.n)[problem.mask.indices]
        resid = np.linalg.norm(a @ s - problem.observed)
        assert resid <= 1e-6 * np.linalg.norm(problem.observed)

    def test_no_feasible_candidate_beats_solution(self):
        rng = np.random.default_rng(4)
        problem, _, _ = on_grid_instance(rng, m=12)
        s = solve_l21(problem)
        obj = l21_objective(s)
        a = atoms(problem.grid, problem.mask.n)[problem.mask.indices]
        # project random perturbations back onto the constraint set
        pinv = np.linalg.pinv(a)
        for _ in range(100):
            cand = s + 0.3 * (
                rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
            )
            cand -= pinv @ (a @ cand - problem.observed)
            assert l21_objective(cand) >= obj - 1e-6

    def test_never_beats_ground_truth_by_more_than_tol(self):
        rng = np.random.default_rng(5)
        problem, idx, amps = on_grid_instance(rng)
        s = solve_l21(problem)
        truth_obj = np.linalg.norm(amps, axis=1).sum()
        assert l21_objective(s) <= truth_obj + 1e-6

    def test_grid_refinement_monotone(self):
        rng = np.random.default_rng(6)
        n, k, l, m = 32, 2, 3, 20
        base = uniform_grid(16)
        idx = np.array([4, 11])
        amps = draw_amplitudes(k, l, rng)
        y = synthesize(base[idx], amps, n)
        mask = draw_mask(n, m=m, rng=rng)
        obs = mask.apply(y)
        obj_coarse = l21_objective(
            solve_l21(GridProblem(grid=base, mask=mask, observed=obs))
        )
        fine = np.sort(np.concatenate([base, base + 1.0 / 32]))
        obj_fine = l21_objective(
            solve_l21(GridProblem(grid=fine, mask=mask, observed=obs))
        )
        assert obj_fine <= obj_coarse + 1e-6

    def test_infeasible_raises(self):
        rng = np.random.default_rng(7)
        n = 16
        y = synthesize([0.123, 0.37, 0.81], draw_amplitudes(3, 2, rng), n)
        mask = draw_mask(n, m=12, rng=rng)
        problem = GridProblem(
            grid=[0.0, 0.5], mask=mask, observed=mask.apply(y)
        )
        with pytest.raises(InfeasibleError):
            solve_l21(problem)

    def test_grid_estimate(self):
        rng = np.random.default_rng(8)
        problem, idx, amps = on_grid_instance(rng)
        s = solve_l21(problem)
        freqs, rows = grid_estimate(problem, s)
        assert np.allclose(freqs, problem.grid[idx])
        assert np.allclose(rows, amps, atol=1e-6)

    def test_options_cap(self):
        rng = np.random.default_rng(9)
        problem, _, _ = on_grid_instance(rng)
        from mcanm.errors import NumericalFailureError

        with pytest.raises(NumericalFailureError):
            solve_l21(problem, L21Options(max_iter=2, tol=1e-14))
