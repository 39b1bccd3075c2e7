"""Backend selection for the groupoid kernels.

The compiled extension is used when it imports and the inputs are complex128;
everything else goes through the numpy reference code.  Set
``GROUPOID_MODELS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_ckernels = None
if os.environ.get("GROUPOID_MODELS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"


def _compiled_ok(*arrays):
    return _ckernels is not None and all(a.dtype == np.complex128 for a in arrays)


def convolve(plan, f, g, weights):
    f, g = np.ascontiguousarray(f), np.ascontiguousarray(g)
    if _compiled_ok(f, g) and weights.dtype == np.float64:
        return _ckernels.convolve(plan.x, plan.a, plan.b, weights, f, g, plan.n)
    return _pykernels.convolve(plan.x, plan.a, plan.b, weights, f, g, plan.n)


def convolve_twisted(plan, f, g, weights, sig):
    f, g = np.ascontiguousarray(f), np.ascontiguousarray(g)
    if _compiled_ok(f, g, sig) and weights.dtype == np.float64:
        return _ckernels.convolve_twisted(plan.x, plan.a, plan.b, weights, sig, f, g, plan.n)
    return _pykernels.convolve_twisted(plan.x, plan.a, plan.b, weights, sig, f, g, plan.n)


def associativity_violation(comp):
    if _ckernels is not None:
        return _ckernels.associativity_violation(comp)
    return _pykernels.associativity_violation(comp)


def cocycle_defect(comp, sigma):
    if _ckernels is not None and np.asarray(sigma).dtype == np.complex128:
        return _ckernels.cocycle_defect(comp, sigma)
    return _pykernels.cocycle_defect(comp, sigma)
