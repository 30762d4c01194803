"""Command-line entry points.

Four subcommands cover the artifact plumbing:

* ``gen``     -- draw a random instance and write it as JSON
* ``solve``   -- run the semidefinite solver on an instance file
* ``certify`` -- build + verify a dual certificate for an instance
* ``phase``   -- run a phase-transition grid and emit CSV tables

Every subcommand reads a JSON config (``--config``); ``--seed`` overrides
the config's seed, ``--out`` picks the output directory, and ``--threads``
(or the ``MCANM_THREADS`` environment variable, which wins) sets the
worker count for ``phase``. Exit codes: 0 on success, 2 on a config
error, 3 on a solver failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .anm import AnmProblem, SolverOptions, solve_anm
from .certificate import build_certificate, draw_index_mask, verify_certificate
from .errors import (
    ContractViolationError,
    DecompositionError,
    InfeasibleError,
    NumericalFailureError,
)
from .experiments import ExperimentConfig, run_grid
from .model import SpectralModel, draw_mask
from .retrieval import estimate_spectrum
from .serialize import estimate_to_dict, load_instance, save_instance

def _load_config(path):
    if path is None:
        raise ContractViolationError("missing required --config <json>")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ContractViolationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ContractViolationError(f"config {path!r} is not valid JSON: {exc}") from exc


def _require(cfg, name, kind=int):
    if name not in cfg:
        raise ContractViolationError(f"config is missing required field {name!r}")
    try:
        return kind(cfg[name])
    except (TypeError, ValueError) as exc:
        raise ContractViolationError(f"config field {name!r} is malformed: {exc}") from exc


def _seed(args, cfg, default=0):
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", default))


def _out_dir(args):
    out = args.out if args.out is not None else "."
    os.makedirs(out, exist_ok=True)
    return out


def _threads(args):
    env = os.environ.get("MCANM_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ContractViolationError(
                f"MCANM_THREADS must be an integer, got {env!r}"
            ) from exc
    return max(1, args.threads)


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _cmd_gen(args):
    cfg = _load_config(args.config)
    n = _require(cfg, "N")
    k = _require(cfg, "K")
    l = _require(cfg, "L")
    if l < 1:
        raise ContractViolationError(f"config field 'L' must be a positive integer, got {l}")
    seed = _seed(args, cfg)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = SpectralModel.draw(n, k, l, rng, separation=cfg.get("separation"))
    m = int(cfg.get("M", n))
    mask = draw_mask(n, m=m, rng=rng)
    path = os.path.join(_out_dir(args), "instance.json")
    save_instance(path, model, mask, seed=seed)
    print(path)
    return 0


def _cmd_solve(args):
    cfg = _load_config(args.config)
    instance = _require(cfg, "instance", str)
    try:
        model, mask, _ = load_instance(instance)
    except OSError as exc:
        raise ContractViolationError(f"cannot read instance {instance!r}: {exc}") from exc
    opts = SolverOptions()
    for name in ("rho", "tol", "tol_gap"):
        if name in cfg:
            setattr(opts, name, float(cfg[name]))
    if "max_iter" in cfg:
        opts.max_iter = _require(cfg, "max_iter")

    sol = solve_anm(AnmProblem(model.n, model.data[mask.indices], mask), opts)
    if not sol.converged:
        print(
            f"error: solver stopped after {sol.iterations} iterations with "
            f"relative gap {sol.gap:.3e}",
            file=sys.stderr,
        )
        return 3
    est = estimate_spectrum(sol)
    payload = estimate_to_dict(
        est.freqs,
        est.amps,
        weights=est.weights,
        extra={
            "objective": sol.objective,
            "dual_objective": sol.dual_objective,
            "gap": sol.gap,
            "iterations": sol.iterations,
            "residual": est.residual,
            "mask": np.asarray(mask.indices, dtype=int).tolist(),
        },
    )
    path = _write_json(os.path.join(_out_dir(args), "estimate.json"), payload)
    print(path)
    return 0


def _cmd_certify(args):
    cfg = _load_config(args.config)
    instance = _require(cfg, "instance", str)
    try:
        model, _, _ = load_instance(instance)
    except OSError as exc:
        raise ContractViolationError(f"cannot read instance {instance!r}: {exc}") from exc
    n = (model.n - 1) // 4
    if n < 1:
        raise ContractViolationError(f"instance N={model.n} too small to certify (need N >= 5)")
    norms = np.linalg.norm(model.amps, axis=1)
    if np.any(norms == 0):
        raise ContractViolationError("instance has an all-zero amplitude row")
    phases = model.amps / norms[:, None]

    seed = _seed(args, cfg)
    if "p" in cfg and "M" in cfg:
        raise ContractViolationError("config fields 'p' and 'M' are mutually exclusive")
    mask = None
    if "p" in cfg or "M" in cfg:
        p = float(cfg["p"]) if "p" in cfg else _require(cfg, "M") / (4.0 * n)
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        mask = draw_index_mask(n, p, rng)

    mask_list = None if mask is None else np.asarray(mask, dtype=int).tolist()
    try:
        report = verify_certificate(build_certificate(model.freqs, phases, n, mask=mask))
        payload = report.to_dict(mask=mask_list, seed=seed)
    except InfeasibleError as exc:
        payload = {"valid": False, "reason": str(exc), "mask": mask_list, "seed": seed}
    path = _write_json(os.path.join(_out_dir(args), "certificate.json"), payload)
    print(path)
    return 0


def _cmd_phase(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = dict(cfg, seed=args.seed)
    config = ExperimentConfig.from_dict(cfg)
    out = args.out if args.out is not None else (config.out_dir or ".")
    result = run_grid(config, threads=_threads(args), out_dir=out)
    for name in ("success_rates.csv", "curve.csv", "summary.json"):
        print(os.path.join(out, name))
    return 0 if result.cells else 3


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "phase": _cmd_phase,
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="mcanm",
        description="Multichannel line-spectrum recovery from partial samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen": "draw a random instance and write instance.json",
        "solve": "solve an instance file and write estimate.json",
        "certify": "build and verify a dual certificate, writing certificate.json",
        "phase": "run a phase-transition grid and write CSV tables",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="JSON", help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", metavar="DIR", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (MCANM_THREADS wins when set)")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ContractViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, InfeasibleError, DecompositionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
