"""Phase-transition experiment harness.

Draws random separated spectral instances, subsamples rows, runs a
recovery pipeline, and scores each trial by frequency RMSE against a
fixed threshold. Cell results aggregate into plot-ready CSV tables plus
the M = 28 + 16/L reference curve and a JSON summary of the empirical
success boundary.

Every trial is seeded from (base seed, L, M, trial index), so cells are
reproducible in isolation and the tables are byte-identical no matter
how many worker threads run them.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .anm import AnmProblem, DualPolynomial, SolverOptions, reduce_channels, solve_anm
from .certificate import build_certificate, draw_index_mask, verify_certificate
from .errors import (
    ContractViolationError,
    DecompositionError,
    InfeasibleError,
    NumericalFailureError,
)
from .l21 import GridProblem, L21Options, grid_estimate, solve_l21, uniform_grid
from .model import (
    REJECTION_CAP,
    SpectralModel,
    atoms,
    draw_amplitudes,
    draw_frequencies,
    draw_mask,
    draw_sphere_phases,
    min_separation,
    separation_bound,
    wrap_distance,
)
from .retrieval import estimate_spectrum, rmse

INF_CHANNELS = -1  # internal code for the L -> infinity (covariance) cells
PIPELINES = ("anm", "l21", "certificate-only")
BOUNDARY_RATE = 0.95


def _parse_l(value):
    if value in ("inf", "Inf", "INF") or (
        isinstance(value, float) and math.isinf(value)
    ):
        return INF_CHANNELS
    l = int(value)
    if l != value or (l < 1 and l != INF_CHANNELS):
        raise ContractViolationError(f"L_values entries must be >= 1 or inf, got {value!r}")
    return l


def _l_label(l_value):
    return "inf" if l_value == INF_CHANNELS else str(l_value)


@dataclass
class ExperimentConfig:
    """Grid description for one phase-transition run."""

    n: int
    k: int
    l_values: tuple
    m_values: tuple
    trials: int
    seed: int = 0
    pipeline: str = "anm"
    success_threshold: float = 1e-4
    solver_tol: float = None
    out_dir: str = None

    def __post_init__(self):
        self.n = int(self.n)
        self.k = int(self.k)
        self.trials = int(self.trials)
        self.seed = int(self.seed)
        if self.n < 1:
            raise ContractViolationError(f"N must be positive, got {self.n}")
        if not (1 <= self.k <= self.n):
            raise ContractViolationError(f"K must lie in [1, N], got K={self.k}")
        self.l_values = tuple(_parse_l(l) for l in self.l_values)
        if not self.l_values:
            raise ContractViolationError("L_values must not be empty")
        self.m_values = tuple(int(m) for m in self.m_values)
        if not self.m_values:
            raise ContractViolationError("M_values must not be empty")
        if any(m < 1 or m > self.n for m in self.m_values):
            raise ContractViolationError(
                f"M_values must lie in [1, N={self.n}], got {list(self.m_values)}"
            )
        if self.trials < 1:
            raise ContractViolationError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ContractViolationError(f"seed must be >= 0, got {self.seed}")
        if self.pipeline not in PIPELINES:
            raise ContractViolationError(
                f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}"
            )
        if self.pipeline != "anm" and INF_CHANNELS in self.l_values:
            raise ContractViolationError(
                f"L_values: infinite channels need the anm pipeline, not {self.pipeline!r}"
            )
        if not (self.success_threshold > 0):
            raise ContractViolationError(
                f"success_threshold must be positive, got {self.success_threshold}"
            )
        if self.solver_tol is not None and not (self.solver_tol > 0):
            raise ContractViolationError(
                f"solver_tol must be positive, got {self.solver_tol}"
            )

    @classmethod
    def from_dict(cls, payload):
        """Build from the JSON config layout (N, K, L_values, ...)."""
        if not isinstance(payload, dict):
            raise ContractViolationError("config must be a JSON object")
        required = {"N": "n", "K": "k", "L_values": "l_values",
                    "M_values": "m_values", "trials": "trials"}
        optional = {"seed": "seed", "pipeline": "pipeline",
                    "success_threshold": "success_threshold",
                    "solver_tol": "solver_tol", "out_dir": "out_dir"}
        kwargs = {}
        for name, attr in required.items():
            if name not in payload:
                raise ContractViolationError(f"config is missing required field {name!r}")
            kwargs[attr] = payload[name]
        for name, attr in optional.items():
            if name in payload:
                kwargs[attr] = payload[name]
        unknown = set(payload) - set(required) - set(optional)
        if unknown:
            raise ContractViolationError(
                f"config has unknown field {sorted(unknown)[0]!r}"
            )
        return cls(**kwargs)

    def to_dict(self):
        d = {
            "N": self.n,
            "K": self.k,
            "L_values": [(_l_label(l) if l == INF_CHANNELS else l) for l in self.l_values],
            "M_values": list(self.m_values),
            "trials": self.trials,
            "seed": self.seed,
            "pipeline": self.pipeline,
            "success_threshold": self.success_threshold,
        }
        if self.solver_tol is not None:
            d["solver_tol"] = self.solver_tol
        return d


@dataclass
class TrialResult:
    l_value: int
    m: int
    trial: int
    success: bool
    converged: bool
    rmse: float = math.nan
    weight_rel_err: float = math.nan
    rel_gap: float = math.nan
    dual_sup: float = math.nan


@dataclass
class CellResult:
    l_value: int
    m: int
    successes: int
    trials: int
    mean_rmse_on_success: float
    nonconverged: int

    def __post_init__(self):
        if self.successes > self.trials:
            raise ContractViolationError("successes cannot exceed trials")

    @property
    def success_rate(self):
        return self.successes / self.trials


@dataclass
class GridResult:
    config: ExperimentConfig
    cells: list
    curve: list  # (l_value, reference M) pairs
    boundary: dict  # L label -> smallest M with rate >= BOUNDARY_RATE, or None
    trial_results: list = field(default_factory=list)


def trial_rng(seed, l_value, m, trial):
    """Generator for one trial, independent of every other trial."""
    l_code = 0 if l_value == INF_CHANNELS else int(l_value)
    return np.random.default_rng(np.random.SeedSequence([seed, l_code, int(m), int(trial)]))


def reference_m(l_value):
    """The M = 28 + 16/L curve, with the L -> infinity limit at 28."""
    return 28.0 if l_value == INF_CHANNELS else 28.0 + 16.0 / l_value


def _weight_error(true_freqs, true_amps, est):
    """Worst relative mismatch between recovered weights and row norms."""
    if est.freqs.size != true_freqs.size:
        return math.nan
    targets = np.linalg.norm(true_amps, axis=1)
    worst = 0.0
    for f, c in zip(est.freqs, est.weights):
        j = int(np.argmin(wrap_distance(true_freqs, f)))
        worst = max(worst, abs(c - targets[j]) / targets[j])
    return worst


def _draw_grid_support(k, g, rng, separation):
    """Distinct grid indices whose frequencies keep the usual separation."""
    grid = uniform_grid(g)
    for _ in range(REJECTION_CAP):
        idx = np.sort(rng.choice(g, size=k, replace=False))
        if k == 1 or min_separation(grid[idx]) >= separation:
            return idx
    raise NumericalFailureError(
        f"could not place {k} separated frequencies on a grid of {g} points"
    )


def _run_anm_trial(config, l_value, m, trial):
    rng = trial_rng(config.seed, l_value, m, trial)
    if l_value == INF_CHANNELS:
        freqs = draw_frequencies(config.k, config.n, rng)
        mask = draw_mask(config.n, m=m, rng=rng)
        rows = atoms(freqs, config.n)[mask.indices]
        reduced = reduce_channels(covariance=rows @ rows.conj().T)
        problem = AnmProblem(config.n, reduced, mask, variant="reduced")
        amps = None
    else:
        model = SpectralModel.draw(config.n, config.k, l_value, rng)
        freqs, amps = model.freqs, model.amps
        mask = draw_mask(config.n, m=m, rng=rng)
        problem = AnmProblem(config.n, model.data[mask.indices], mask)

    opts = SolverOptions() if config.solver_tol is None else SolverOptions(tol=config.solver_tol)
    sol = solve_anm(problem, opts)
    result = TrialResult(l_value, m, trial, success=False, converged=sol.converged,
                         rel_gap=sol.gap)
    if not sol.converged:
        return result
    result.dual_sup = float(DualPolynomial(sol.v).grid_norms().max())
    try:
        est = estimate_spectrum(sol)
    except (ContractViolationError, NumericalFailureError, DecompositionError):
        # e.g. a wrong-rank solution with more atoms than observed rows
        return result
    err = rmse(freqs, est.freqs)
    if err is None:
        return result
    result.rmse = err
    result.success = err < config.success_threshold
    if result.success and amps is not None:
        result.weight_rel_err = _weight_error(freqs, amps, est)
    return result


def _run_l21_trial(config, l_value, m, trial):
    rng = trial_rng(config.seed, l_value, m, trial)
    sep = separation_bound(config.n)
    idx = _draw_grid_support(config.k, config.n, rng, sep)
    freqs = uniform_grid(config.n)[idx]
    amps = draw_amplitudes(config.k, l_value, rng)
    data = atoms(freqs, config.n) @ amps
    mask = draw_mask(config.n, m=m, rng=rng)
    problem = GridProblem(uniform_grid(config.n), mask, data[mask.indices])

    result = TrialResult(l_value, m, trial, success=False, converged=False)
    opts = L21Options() if config.solver_tol is None else L21Options(tol=config.solver_tol)
    try:
        coeffs = solve_l21(problem, opts)
    except (InfeasibleError, NumericalFailureError):
        return result
    result.converged = True
    est_freqs, est_rows = grid_estimate(problem, coeffs)
    err = rmse(freqs, est_freqs)
    if err is None:
        return result
    result.rmse = err
    result.success = err < config.success_threshold
    if result.success:
        targets = np.linalg.norm(amps, axis=1)
        got = np.linalg.norm(est_rows, axis=1)
        result.weight_rel_err = float(np.max(np.abs(got - targets) / targets))
    return result


def _run_certificate_trial(config, l_value, m, trial):
    rng = trial_rng(config.seed, l_value, m, trial)
    n = (config.n - 1) // 4
    if n < 1:
        raise ContractViolationError(
            f"certificate pipeline needs N >= 5, got N={config.n}"
        )
    freqs = draw_frequencies(config.k, 4 * n + 1, rng)
    phases = draw_sphere_phases(config.k, l_value, rng)
    mask = draw_index_mask(n, m / (4.0 * n), rng)
    result = TrialResult(l_value, m, trial, success=False, converged=True)
    try:
        report = verify_certificate(build_certificate(freqs, phases, n, mask=mask))
    except InfeasibleError:
        return result
    result.success = bool(report.valid)
    return result


_TRIAL_RUNNERS = {
    "anm": _run_anm_trial,
    "l21": _run_l21_trial,
    "certificate-only": _run_certificate_trial,
}


def run_trial(config, l_value, m, trial):
    """One seeded instance through the configured pipeline."""
    return _TRIAL_RUNNERS[config.pipeline](config, l_value, m, trial)


def _aggregate(l_value, m, trials):
    rmses = [t.rmse for t in trials if t.success]
    return CellResult(
        l_value=l_value,
        m=m,
        successes=sum(t.success for t in trials),
        trials=len(trials),
        mean_rmse_on_success=float(np.mean(rmses)) if rmses else math.nan,
        nonconverged=sum(not t.converged for t in trials),
    )


def run_cell(config, l_value, m, threads=1):
    """All trials of one (L, M) cell, aggregated."""
    jobs = range(config.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: run_trial(config, l_value, m, t), jobs))
    else:
        results = [run_trial(config, l_value, m, t) for t in jobs]
    return _aggregate(l_value, m, results)


def run_grid(config, threads=1, out_dir=None, keep_trials=False):
    """Every cell of the config's (L, M) grid; optionally write the tables.

    Trials run concurrently when threads > 1; the reduce is ordered, so
    the output does not depend on the thread count.
    """
    jobs = [
        (l, m, t)
        for l in config.l_values
        for m in config.m_values
        for t in range(config.trials)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(lambda j: run_trial(config, *j), jobs))
    else:
        flat = [run_trial(config, *j) for j in jobs]

    cells = []
    by_cell = {}
    for job, res in zip(jobs, flat):
        by_cell.setdefault(job[:2], []).append(res)
    for l in config.l_values:
        for m in config.m_values:
            cells.append(_aggregate(l, m, by_cell[(l, m)]))

    boundary = {}
    for l in config.l_values:
        rates = {c.m: c.success_rate for c in cells if c.l_value == l}
        hit = [m for m in sorted(config.m_values) if rates[m] >= BOUNDARY_RATE - 1e-12]
        boundary[_l_label(l)] = hit[0] if hit else None

    result = GridResult(
        config=config,
        cells=cells,
        curve=[(l, reference_m(l)) for l in config.l_values],
        boundary=boundary,
        trial_results=flat if keep_trials else [],
    )
    target = out_dir if out_dir is not None else config.out_dir
    if target is not None:
        write_tables(result, target)
    return result


def write_tables(result, out_dir):
    """Emit success_rates.csv, curve.csv, and summary.json under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "success_rates": os.path.join(out_dir, "success_rates.csv"),
        "curve": os.path.join(out_dir, "curve.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
    }
    try:
        lines = ["L,M,success_rate,mean_rmse,nonconverged"]
        for c in result.cells:
            lines.append(
                f"{_l_label(c.l_value)},{c.m},{c.success_rate:.4f},"
                f"{c.mean_rmse_on_success:.6e},{c.nonconverged}"
            )
        with open(paths["success_rates"], "w") as fh:
            fh.write("\n".join(lines) + "\n")

        lines = ["L,M_ref"]
        for l, m_ref in result.curve:
            lines.append(f"{_l_label(l)},{m_ref:.4f}")
        with open(paths["curve"], "w") as fh:
            fh.write("\n".join(lines) + "\n")

        summary = {"boundary": result.boundary, "config": result.config.to_dict()}
        with open(paths["summary"], "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise NumericalFailureError(
            f"could not write experiment tables under {out_dir!r}: {exc}"
        ) from exc
    return paths
