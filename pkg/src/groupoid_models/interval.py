"""Sampled matrix-valued functions on [0, 1] with boundary constraints.

An element of ``C([0,1], M_n)`` is stored by its values on the dyadic grid
``j / 2^s`` (shape ``(2^s + 1, n, n)``) and evaluated between grid points by
linear interpolation.  Constraints pin the value at a grid point to a
standard subalgebra ``U (id_a1 (x) M_b1 + ... + id_ak (x) M_bk + 0_m) U*``;
membership is measured by the distance to the conditional expectation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .checks import CheckResult, Report
from .config import TOL
from .errors import GroupoidModelsError, StructuralError

__all__ = [
    "StandardSubalgebraSpec", "ConstrainedIntervalAlgebra", "IntervalElement", "UnitaryPath",
    "conditional_expectation", "membership_distance", "spec_refines", "subalgebra_dimension",
    "commutation_matrix", "multiply", "adjoint", "sup_norm", "twist_conjugate",
    "subalgebra_inclusion", "random_interval_element", "constant_path",
    "element_to_json", "element_from_json", "spec_to_json", "spec_from_json", "op_norm",
    "algebra_to_json", "algebra_from_json",
]


def op_norm(M):
    """Largest singular value; batched over leading axes."""
    M = np.asarray(M)
    if M.shape[-1] == 0:
        return np.zeros(M.shape[:-2]) if M.ndim > 2 else 0.0
    return np.linalg.norm(M, 2, axis=(-2, -1)) if M.ndim > 2 else float(np.linalg.norm(M, 2))


def commutation_matrix(m, n):
    """Permutation ``P`` with ``P (A kron B) P^T = B kron A`` for ``A`` m x m, ``B`` n x n."""
    P = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            P[j * m + i, i * n + j] = 1.0
    return P


@dataclass(frozen=True, eq=False)
class StandardSubalgebraSpec:
    """``U (sum_i id_{a_i} (x) M_{b_i} + 0_pad) U*`` inside ``M_n``.

    ``blocks`` is a tuple of ``(a_i, b_i)``; in the canonical layout block
    ``i`` occupies ``a_i`` consecutive diagonal copies of a ``b_i x b_i``
    matrix, followed by the zero pad.  The conjugator ``U`` is either a dense
    unitary (``conjugator``) or a permutation given as an index array
    (``permutation``, meaning ``U e_a = e_{permutation[a]}``), or neither.
    The permutation form never materialises an ``n x n`` matrix, which keeps
    very large specs cheap.
    """

    blocks: tuple
    pad: int = 0
    conjugator: np.ndarray | None = None
    permutation: np.ndarray | None = None

    def __post_init__(self):
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if any(a < 1 or b < 1 for a, b in blocks) or self.pad < 0:
            raise StructuralError("block multiplicities and sizes must be positive")
        if self.conjugator is not None and self.permutation is not None:
            raise StructuralError("give either a dense conjugator or a permutation, not both")
        if self.conjugator is not None:
            U = np.asarray(self.conjugator, dtype=np.complex128)
            if U.shape != (self.n, self.n):
                raise StructuralError("conjugator has the wrong size")
            err = op_norm(U.conj().T @ U - np.eye(self.n))
            if err > TOL.unitary:
                raise StructuralError("conjugator is not unitary", err)
            U.setflags(write=False)
            object.__setattr__(self, "conjugator", U)
        if self.permutation is not None:
            p = np.asarray(self.permutation, dtype=np.int64)
            if p.shape != (self.n,) or not np.array_equal(np.sort(p), np.arange(self.n)):
                raise StructuralError("permutation is not a bijection of range(n)")
            p.setflags(write=False)
            inv = np.empty_like(p)
            inv[p] = np.arange(self.n)
            inv.setflags(write=False)
            object.__setattr__(self, "permutation", p)
            object.__setattr__(self, "_inverse_permutation", inv)

    @property
    def n(self):
        return sum(a * b for a, b in self.blocks) + self.pad

    @property
    def dimension(self):
        return sum(b * b for _, b in self.blocks)

    @property
    def is_unital(self):
        return self.pad == 0

    def dense_conjugator(self):
        if self.conjugator is not None:
            return self.conjugator
        U = np.eye(self.n, dtype=np.complex128)
        if self.permutation is not None:
            U = U[:, self.permutation]
        return U

    def unit(self):
        """Unit of the subalgebra: the projection onto the non-padded part."""
        d = np.zeros(self.n, dtype=np.complex128)
        d[: self.n - self.pad] = 1.0
        return self._from_canonical(np.diag(d))

    def conjugated(self, V):
        """Spec of ``V* A V`` where ``A`` is this subalgebra."""
        V = np.asarray(V, dtype=np.complex128)
        return StandardSubalgebraSpec(self.blocks, self.pad, V.conj().T @ self.dense_conjugator())

    def _to_canonical(self, M):
        if self.permutation is not None:
            p = self.permutation
            return M[..., p[:, None], p[None, :]]
        if self.conjugator is None:
            return M
        U = self.conjugator
        return U.conj().T @ M @ U

    def _from_canonical(self, M):
        if self.permutation is not None:
            q = self._inverse_permutation
            return M[..., q[:, None], q[None, :]]
        if self.conjugator is None:
            return M
        U = self.conjugator
        return U @ M @ U.conj().T

    def canonical_expectation(self, M):
        """Conditional expectation for the unconjugated layout; batched."""
        M = np.asarray(M)
        out = np.zeros_like(M, dtype=np.result_type(M.dtype, np.complex128))
        off = 0
        for a, b in self.blocks:
            acc = 0
            for c in range(a):
                s = off + c * b
                acc = acc + M[..., s:s + b, s:s + b]
            acc = acc / a
            for c in range(a):
                s = off + c * b
                out[..., s:s + b, s:s + b] = acc
            off += a * b
        return out

    def embed(self, mats):
        """Canonical element built from one ``b_i x b_i`` matrix per block, then conjugated."""
        out = np.zeros((self.n, self.n), dtype=np.complex128)
        off = 0
        for (a, b), X in zip(self.blocks, mats):
            for c in range(a):
                s = off + c * b
                out[s:s + b, s:s + b] = X
            off += a * b
        return self._from_canonical(out)

    def basis(self):
        """Matrix-unit basis of the subalgebra (``dimension`` matrices)."""
        out = []
        for k, (_, b) in enumerate(self.blocks):
            for i in range(b):
                for j in range(b):
                    mats = [np.zeros((bb, bb)) for _, bb in self.blocks]
                    mats[k][i, j] = 1.0
                    out.append(self.embed(mats))
        return out

    def random(self, rng):
        mats = [rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
                for _, b in self.blocks]
        return self.embed(mats)


def conditional_expectation(M, spec: StandardSubalgebraSpec):
    """``E(M) = U E0(U* M U) U*``; accepts a single matrix or a stack."""
    M = np.asarray(M)
    if M.shape[-2:] != (spec.n, spec.n):
        raise StructuralError(f"matrix size {M.shape[-2:]} does not match spec size {spec.n}")
    return spec._from_canonical(spec.canonical_expectation(spec._to_canonical(M)))


def membership_distance(M, spec: StandardSubalgebraSpec):
    """Operator-norm distance ``||M - E(M)||``; batched input gives an array."""
    return op_norm(np.asarray(M) - conditional_expectation(M, spec))


def subalgebra_dimension(spec: StandardSubalgebraSpec, tol=1e-9):
    """Complex dimension of the range of ``E``, computed numerically.

    For ``n <= 16`` this is the rank of ``E`` as an ``n^2 x n^2`` linear map;
    for larger ``n`` it is the rank of the images of the canonical matrix
    units under ``E`` (which span the range since ``E`` is onto).
    """
    n = spec.n
    if n <= 16:
        cols = []
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=np.complex128)
                e[i, j] = 1.0
                cols.append(conditional_expectation(e, spec).ravel())
        return int(np.linalg.matrix_rank(np.array(cols).T, tol=tol))
    imgs = np.array([conditional_expectation(b, spec).ravel() for b in spec.basis()])
    return int(np.linalg.matrix_rank(imgs, tol=tol))


def spec_refines(fine: StandardSubalgebraSpec, coarse: StandardSubalgebraSpec, tol=None):
    """Whether the fine subalgebra sits inside the coarse one.

    Returns ``(ok, max_error, witness)`` where the witness is the index of
    the first fine basis element not fixed by the coarse expectation.
    """
    tol = TOL.membership if tol is None else tol
    if fine.n != coarse.n:
        return False, float("inf"), "size"
    worst, witness = 0.0, None
    for k, b in enumerate(fine.basis()):
        e = op_norm(conditional_expectation(b, coarse) - b)
        if e > worst:
            worst, witness = e, k
    return worst <= tol, worst, witness


def spec_to_json(spec: StandardSubalgebraSpec) -> dict:
    conj = None
    if spec.conjugator is not None:
        conj = [[float(v.real), float(v.imag)] for v in spec.conjugator.ravel()]
    doc = {"blocks": [list(b) for b in spec.blocks], "pad": spec.pad, "conjugator": conj}
    if spec.permutation is not None:
        doc["permutation"] = [int(v) for v in spec.permutation]
    return doc


def spec_from_json(doc) -> StandardSubalgebraSpec:
    conj = doc.get("conjugator")
    blocks = [tuple(b) for b in doc["blocks"]]
    U = None
    if conj is not None:
        n = sum(a * b for a, b in blocks) + doc.get("pad", 0)
        U = np.array([complex(r, i) for r, i in conj]).reshape(n, n)
    perm = doc.get("permutation")
    perm = None if perm is None else np.array(perm, dtype=np.int64)
    return StandardSubalgebraSpec(tuple(blocks), doc.get("pad", 0), U, perm)


# -- paths and algebras ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitaryPath:
    """Grid-sampled unitary-valued path, shape ``(2^s + 1, n, n)``."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples.setflags(write=False)

    @property
    def n(self):
        return self.samples.shape[-1]

    @property
    def grid_log2(self):
        return int(round(np.log2(self.samples.shape[0] - 1)))

    def at_index(self, j):
        return self.samples[j]

    def inverse(self):
        return UnitaryPath(np.conj(np.swapaxes(self.samples, -1, -2)).copy())

    def validate(self, tol=None, step=None) -> Report:
        tol = TOL.unitary if tol is None else tol
        step = TOL.path_step if step is None else step
        U = self.samples
        eye = np.eye(self.n)
        err = op_norm(np.conj(np.swapaxes(U, -1, -2)) @ U - eye)
        j = int(np.argmax(err))
        steps = op_norm(U[1:] - U[:-1]) if len(U) > 1 else np.zeros(1)
        k = int(np.argmax(steps))
        return Report("unitary path", (
            CheckResult.numeric("unitary_samples", err[j], tol, j),
            CheckResult.numeric("continuity_step", steps[k], step, k),
        ))


def constant_path(n, grid_log2, U=None) -> UnitaryPath:
    U = np.eye(n, dtype=np.complex128) if U is None else np.asarray(U, dtype=np.complex128)
    return UnitaryPath(np.broadcast_to(U, (2 ** grid_log2 + 1, n, n)).copy())


def _as_fraction(t):
    return t if isinstance(t, Fraction) else Fraction(t).limit_denominator(1 << 40)


@dataclass(frozen=True, eq=False)
class ConstrainedIntervalAlgebra:
    """Functions ``[0,1] -> M_n`` sampled on ``2^grid_log2 + 1`` points with constraints.

    ``constraints`` maps grid points (Fractions) to specs.  ``twist`` records
    the unitary path an algebra was conjugated by, if any; the constraint
    specs already include the conjugation.
    """

    n: int
    grid_log2: int
    constraints: dict = field(default_factory=dict)
    twist: UnitaryPath | None = None
    name: str = ""

    def __post_init__(self):
        cons = {}
        N = 2 ** self.grid_log2
        for t, spec in self.constraints.items():
            t = _as_fraction(t)
            if not (0 <= t <= 1) or (t * N).denominator != 1:
                raise StructuralError(f"constraint point {t} is not on the grid 2^-{self.grid_log2}")
            if spec.n != self.n:
                raise StructuralError(f"constraint at {t} has size {spec.n}, expected {self.n}")
            cons[t] = spec
        object.__setattr__(self, "constraints", dict(sorted(cons.items())))

    @property
    def n_points(self):
        return 2 ** self.grid_log2 + 1

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.n_points)

    def grid_index(self, t):
        t = _as_fraction(t)
        j = t * 2 ** self.grid_log2
        if j.denominator != 1:
            raise GroupoidModelsError(f"{t} is not a grid point")
        return int(j)

    def with_grid(self, grid_log2):
        return ConstrainedIntervalAlgebra(self.n, grid_log2, dict(self.constraints), None,
                                          self.name)

    def constraint_report(self, f: "IntervalElement", tol=None) -> Report:
        tol = TOL.membership if tol is None else tol
        checks = []
        for t, spec in self.constraints.items():
            d = membership_distance(f.samples[self.grid_index(t)], spec)
            checks.append(CheckResult.numeric(f"membership@{t}", d, tol, str(t)))
        return Report(f"constraints {self.name}".strip(), tuple(checks))

    def contains(self, f: "IntervalElement", tol=None) -> bool:
        return self.constraint_report(f, tol).passed

    def unit(self) -> "IntervalElement":
        return IntervalElement(self, np.broadcast_to(np.eye(self.n, dtype=np.complex128),
                                                     (self.n_points, self.n, self.n)).copy())

    def zero(self) -> "IntervalElement":
        return IntervalElement(self, np.zeros((self.n_points, self.n, self.n), np.complex128))

    def element(self, samples) -> "IntervalElement":
        return IntervalElement(self, np.asarray(samples, dtype=np.complex128))

    def from_function(self, fn) -> "IntervalElement":
        """Sample ``fn(t)`` (``t`` a Fraction) at every grid point."""
        N = 2 ** self.grid_log2
        return self.element(np.array([fn(Fraction(j, N)) for j in range(N + 1)]))


@dataclass(frozen=True, eq=False)
class IntervalElement:
    """Grid samples of a continuous ``M_n``-valued function on [0, 1]."""

    parent: ConstrainedIntervalAlgebra
    samples: np.ndarray

    def __post_init__(self):
        p = self.parent
        if self.samples.shape != (p.n_points, p.n, p.n):
            raise StructuralError(f"samples have shape {self.samples.shape}, expected "
                                  f"{(p.n_points, p.n, p.n)}")
        self.samples.setflags(write=False)

    def __call__(self, t):
        """Value at ``t`` by linear interpolation between grid points."""
        N = 2 ** self.parent.grid_log2
        t = _as_fraction(t)
        x = t * N
        j = int(x)
        if x.denominator == 1:
            return self.samples[j]
        lam = float(x - j)
        return (1 - lam) * self.samples[j] + lam * self.samples[j + 1]

    def _check(self, other):
        if not _same_algebra(self.parent, other.parent):
            raise GroupoidModelsError("elements belong to different algebras")

    def __add__(self, other):
        self._check(other)
        return IntervalElement(self.parent, self.samples + other.samples)

    def __sub__(self, other):
        self._check(other)
        return IntervalElement(self.parent, self.samples - other.samples)

    def __mul__(self, scalar):
        return IntervalElement(self.parent, self.samples * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)


def _same_algebra(a, b):
    if a is b:
        return True
    return a.n == b.n and a.grid_log2 == b.grid_log2 and a.constraints.keys() == b.constraints.keys()


def multiply(f: IntervalElement, g: IntervalElement) -> IntervalElement:
    """Pointwise matrix product."""
    f._check(g)
    return IntervalElement(f.parent, f.samples @ g.samples)


def adjoint(f: IntervalElement) -> IntervalElement:
    """Pointwise conjugate transpose."""
    return IntervalElement(f.parent, np.conj(np.swapaxes(f.samples, -1, -2)).copy())


def sup_norm(f: IntervalElement) -> float:
    """Max over grid points of the operator norm."""
    return float(np.max(op_norm(f.samples)))


def twist_conjugate(f: IntervalElement, u: UnitaryPath) -> IntervalElement:
    """``t -> u_t* f(t) u_t`` in the algebra with conjugated constraint specs."""
    p = f.parent
    if u.n != p.n or u.samples.shape[0] != p.n_points:
        raise StructuralError("unitary path does not match the algebra's size or grid")
    U = u.samples
    Uh = np.conj(np.swapaxes(U, -1, -2))
    cons = {t: spec.conjugated(U[p.grid_index(t)]) for t, spec in p.constraints.items()}
    q = ConstrainedIntervalAlgebra(p.n, p.grid_log2, cons, u, (p.name + "^u") if p.name else "")
    return IntervalElement(q, Uh @ f.samples @ U)


def subalgebra_inclusion(fine: ConstrainedIntervalAlgebra, coarse: ConstrainedIntervalAlgebra,
                         f: IntervalElement, tol=None) -> IntervalElement:
    """Re-parent ``f`` from ``fine`` to ``coarse`` after checking the constraints refine.

    Every constraint of ``coarse`` must be matched by a constraint of ``fine``
    at the same point whose subalgebra is contained in it.
    """
    if fine.n != coarse.n or fine.grid_log2 != coarse.grid_log2:
        raise StructuralError("algebras differ in matrix size or grid")
    for t, cspec in coarse.constraints.items():
        fspec = fine.constraints.get(t)
        if fspec is None:
            raise StructuralError("fine algebra is unconstrained where the coarse one is "
                                  "constrained", str(t))
        ok, err, wit = spec_refines(fspec, cspec, tol)
        if not ok:
            raise StructuralError(f"constraint at {t} does not refine (error {err:.3g})",
                                  {"point": str(t), "basis_index": wit})
    if not _same_algebra(f.parent, fine):
        raise GroupoidModelsError("element does not belong to the fine algebra")
    return IntervalElement(coarse, f.samples.copy())


def _hat_weights(points, t):
    """Piecewise-linear partition of unity on the sorted constraint points."""
    pts = [float(p) for p in points]
    w = np.zeros(len(pts))
    if len(pts) == 1:
        w[0] = 1.0
        return w
    if t <= pts[0]:
        w[0] = 1.0
    elif t >= pts[-1]:
        w[-1] = 1.0
    else:
        k = int(np.searchsorted(pts, t, side="right")) - 1
        lam = (t - pts[k]) / (pts[k + 1] - pts[k])
        w[k], w[k + 1] = 1 - lam, lam
    return w


def random_interval_element(alg: ConstrainedIntervalAlgebra, rng, degree=2) -> IntervalElement:
    """Random continuous element satisfying the constraints up to rounding.

    A random matrix polynomial in ``t`` is corrected by hat functions at the
    constraint points, replacing its value there by the conditional expectation.
    """
    n = alg.n
    coef = rng.standard_normal((degree + 1, n, n)) + 1j * rng.standard_normal((degree + 1, n, n))
    t = alg.grid
    powers = t[:, None] ** np.arange(degree + 1)[None, :]
    g = np.einsum("jk,kab->jab", powers, coef)
    if alg.constraints:
        pts = list(alg.constraints)
        corr = []
        for p, spec in alg.constraints.items():
            v = g[alg.grid_index(p)]
            corr.append(conditional_expectation(v, spec) - v)
        W = np.array([_hat_weights(pts, float(tt)) for tt in t])
        g = g + np.einsum("jk,kab->jab", W, np.array(corr))
        for p, spec in alg.constraints.items():
            j = alg.grid_index(p)
            g[j] = conditional_expectation(g[j], spec)
    return IntervalElement(alg, g)


def element_to_json(f: IntervalElement) -> dict:
    s = f.samples
    return {
        "n": int(f.parent.n),
        "grid_log2": int(f.parent.grid_log2),
        "samples": [[[float(v.real), float(v.imag)] for v in m.ravel()] for m in s],
    }


def element_from_json(doc, alg: ConstrainedIntervalAlgebra | None = None) -> IntervalElement:
    if isinstance(doc, str):
        doc = json.loads(doc)
    n, s = int(doc["n"]), int(doc["grid_log2"])
    arr = np.array([[complex(r, i) for r, i in m] for m in doc["samples"]],
                   dtype=np.complex128).reshape(2 ** s + 1, n, n)
    if alg is None:
        alg = ConstrainedIntervalAlgebra(n, s)
    elif alg.n != n or alg.grid_log2 != s:
        raise StructuralError("JSON element does not match the algebra")
    return IntervalElement(alg, arr)


def algebra_to_json(alg: ConstrainedIntervalAlgebra) -> dict:
    """Size, grid and constraint specs (keyed by the point as a fraction string)."""
    twist = None
    if alg.twist is not None:
        twist = element_to_json(IntervalElement(ConstrainedIntervalAlgebra(alg.n, alg.grid_log2),
                                                alg.twist.samples))["samples"]
    return {
        "name": alg.name,
        "n": int(alg.n),
        "grid_log2": int(alg.grid_log2),
        "constraints": {str(t): spec_to_json(s) for t, s in alg.constraints.items()},
        "twist": twist,
    }


def algebra_from_json(doc) -> ConstrainedIntervalAlgebra:
    if isinstance(doc, str):
        doc = json.loads(doc)
    n, s = int(doc["n"]), int(doc["grid_log2"])
    twist = None
    if doc.get("twist") is not None:
        samples = element_from_json({"n": n, "grid_log2": s, "samples": doc["twist"]}).samples
        twist = UnitaryPath(samples.copy())
    cons = {Fraction(t): spec_from_json(v) for t, v in doc["constraints"].items()}
    return ConstrainedIntervalAlgebra(n, s, cons, twist, doc.get("name", ""))
