"""JSON instance files and result payloads.

An *instance file* captures everything needed to replay a solver run:

.. code-block:: json

    {
      "N": 64, "L": 3, "K": 5,
      "freqs": [0.1, 0.3, ...],
      "amps": [[[re, im], ...] per row ...],
      "mask": {"indices": [0, 2, 5, ...], "mode": "uniform-subset"},
      "seed": 1234
    }

Complex numbers are stored as two-element ``[re, im]`` arrays so the files
stay language-neutral.
"""

import json

import numpy as np

from .errors import ContractViolationError
from .model import SampleMask, SpectralModel


def complex_to_pairs(a):
    """Nested lists of [re, im] pairs mirroring the shape of ``a``."""
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(pairs):
    """Inverse of :func:`complex_to_pairs`."""
    arr = np.asarray(pairs, dtype=float)
    if arr.shape[-1] != 2:
        raise ContractViolationError("complex payload entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def instance_to_dict(model, mask, seed=None):
    d = {
        "N": int(model.n),
        "L": int(model.l),
        "K": int(model.k),
        "freqs": np.asarray(model.freqs, dtype=float).tolist(),
        "amps": complex_to_pairs(model.amps),
        "mask": {
            "indices": np.asarray(mask.indices, dtype=int).tolist(),
            "mode": mask.mode,
        },
    }
    if seed is not None:
        d["seed"] = int(seed)
    return d


def dict_to_instance(d):
    """Parse an instance dict into (SpectralModel, SampleMask, seed)."""
    try:
        n, l, k = int(d["N"]), int(d["L"]), int(d["K"])
        freqs = np.asarray(d["freqs"], dtype=float)
        amps = pairs_to_complex(d["amps"])
        mask_d = d["mask"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractViolationError(f"malformed instance payload: {exc}") from exc
    if freqs.size != k:
        raise ContractViolationError(f"K={k} but {freqs.size} frequencies listed")
    amps = np.atleast_2d(amps)
    if amps.shape != (k, l):
        raise ContractViolationError(
            f"amps shape {amps.shape} does not match (K, L)=({k}, {l})"
        )
    model = SpectralModel(n=n, freqs=freqs, amps=amps)
    mask = SampleMask(
        n=n,
        indices=np.asarray(mask_d["indices"], dtype=np.intp),
        mode=mask_d.get("mode", "uniform-subset"),
    )
    return model, mask, d.get("seed")


def save_instance(path, model, mask, seed=None):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(model, mask, seed=seed), fh, indent=2)
        fh.write("\n")


def load_instance(path):
    with open(path) as fh:
        return dict_to_instance(json.load(fh))


def estimate_to_dict(freqs, amps, weights=None, extra=None):
    """JSON-ready dict for a recovered estimate (and optional diagnostics)."""
    d = {
        "freqs": np.asarray(freqs, dtype=float).tolist(),
        "amps": complex_to_pairs(np.atleast_2d(amps)),
    }
    if weights is not None:
        d["weights"] = np.asarray(weights, dtype=float).tolist()
    if extra:
        d.update(extra)
    return d
