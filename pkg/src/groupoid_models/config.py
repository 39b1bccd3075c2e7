"""Central tolerance and size defaults.

Every numerical check in the package reads its tolerance from here unless a
caller passes one explicitly.  Values can be overridden from the environment
with the ``GROUPOID_MODELS_`` prefix (e.g. ``GROUPOID_MODELS_TOL=1e-8``).
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace

ENV_PREFIX = "GROUPOID_MODELS_"


@dataclass(frozen=True)
class Tolerances:
    # default relative tolerance for float comparisons
    tol: float = 1e-9
    # matrix-image fidelity (convolution vs matrix product)
    matrix: float = 1e-12
    # reduced norm vs operator norm of the matrix image
    norm: float = 1e-10
    # unitarity of sampled path points and constraint conjugators
    unitary: float = 1e-10
    # Haar preservation with float weights (rational weights compare exactly)
    haar: float = 1e-12
    # constraint membership at grid points
    membership: float = 1e-9
    # adjoint compatibility of interval bondings
    adjoint: float = 1e-12
    # consecutive-sample bound for unitary paths
    path_step: float = 0.5


@dataclass(frozen=True)
class Defaults:
    grid_log2: int = 8
    seed: int = 0
    # largest matrix size for which interval elements are materialized densely
    dense_limit: int = 400


def _from_env(obj):
    updates = {}
    for f in fields(obj):
        raw = os.environ.get(ENV_PREFIX + f.name.upper())
        if raw is not None:
            updates[f.name] = type(getattr(obj, f.name))(raw)
    return replace(obj, **updates) if updates else obj


TOL = _from_env(Tolerances())
DEFAULTS = _from_env(Defaults())


@contextmanager
def override_tolerances(**values):
    """Temporarily change fields of :data:`TOL` in place (used by the CLI ``--tol``).

    Readers look the values up at call time, so the change is seen everywhere
    inside the ``with`` block and undone on exit.
    """
    names = {f.name for f in fields(TOL)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown tolerance fields: {sorted(unknown)}")
    saved = {k: getattr(TOL, k) for k in values}
    try:
        for k, v in values.items():
            object.__setattr__(TOL, k, float(v))
        yield TOL
    finally:
        for k, v in saved.items():
            object.__setattr__(TOL, k, v)
