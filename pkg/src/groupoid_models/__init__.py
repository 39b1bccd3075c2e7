"""Finite groupoid convolution algebras, partial morphisms and interval-algebra chains.

The top level re-exports the public API of the submodules.  The interval
versions of ``multiply`` and ``adjoint`` are exported as
``interval_multiply`` and ``interval_adjoint``; ``adjoint`` is the groupoid
one.
"""

from __future__ import annotations

from .builders import *  # noqa: F401,F403
from .checks import CheckResult, Report, jsonable
from .config import DEFAULTS, TOL, Defaults, Tolerances, override_tolerances
from .constructions import *  # noqa: F401,F403
from .errors import CriterionViolation, GroupoidModelsError, StructuralError, VerificationError
from .gelfand import *  # noqa: F401,F403
from .groupoid import *  # noqa: F401,F403
from .interval import *  # noqa: F401,F403
from .interval import adjoint as interval_adjoint, multiply as interval_multiply
from .groupoid import adjoint  # noqa: F811  (the groupoid adjoint wins the plain name)
from .kernels import BACKEND
from .limits import *  # noqa: F401,F403
from .morphisms import *  # noqa: F401,F403
from .quotient import *  # noqa: F401,F403
from .report import SUITES, SuiteConfig, SuiteResult, run_suite
from .sampling import *  # noqa: F401,F403

__version__ = "0.1.0"
