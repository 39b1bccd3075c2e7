"""Finite groupoids with Haar weights and their convolution algebras.

A groupoid is stored as index tables over its arrows: ``src``, ``rng`` and
``inv`` map an arrow index to an arrow index (objects are the unit arrows),
and ``comp[x, y]`` is the index of ``xy`` or -1 when ``src[x] != rng[y]``.
``weights[x]`` is the mass of the atom at ``x`` in the measure on the range
fiber of ``x``.

Convolution follows

    (f * g)(x) = sum over y with rng(y) = src(x) of f(xy) g(y^-1) w(y),

which makes the indicator of the arrow ``(i, j)`` of the pair groupoid on
``n`` points behave as the matrix unit ``e_ij``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product as iproduct

import numpy as np

from . import kernels
from .checks import CheckResult, Report
from .config import TOL
from .errors import GroupoidModelsError, StructuralError

__all__ = [
    "FiniteGroupoid", "ConvolutionElement", "Cocycle",
    "validate_groupoid", "validate_cocycle", "element", "indicator", "zero_element",
    "random_element", "convolve", "convolve_twisted", "adjoint", "adjoint_twisted",
    "i_norm", "regular_representation", "reduced_norm", "to_matrix", "from_matrix",
    "product_groupoid", "disjoint_union", "tensor", "trivial_cocycle",
    "cocycle_from_function", "coboundary", "cocycle_product",
    "groupoid_to_json", "groupoid_from_json",
]


@dataclass(frozen=True)
class ConvolutionPlan:
    """Flattened list of the terms of every convolution sum.

    Term ``k`` contributes ``f[a[k]] * g[b[k]] * w[y[k]]`` to ``out[x[k]]``.
    """

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    n: int


def _exact_weight(w):
    if isinstance(w, (int, np.integer)):
        return Fraction(int(w))
    if isinstance(w, (float, np.floating)):
        return Fraction(float(w))
    return w


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    """Finite groupoid with a Haar system given by per-arrow weights.

    Instances are immutable.  Build them with :meth:`from_tables` or the
    constructors in :mod:`groupoid_models.constructions`; the raw constructor
    takes already-indexed arrays and performs no validation.
    """

    labels: tuple
    src: np.ndarray
    rng: np.ndarray
    inv: np.ndarray
    comp: np.ndarray
    weights: np.ndarray
    name: str = ""

    def __post_init__(self):
        for arr in (self.src, self.rng, self.inv, self.comp, self.weights):
            arr.setflags(write=False)

    # -- construction -------------------------------------------------
    @classmethod
    def from_tables(cls, arrows, source, range_, compose, inverse, weights=None, name=""):
        """Build from label-keyed tables.

        ``compose`` is an iterable of triples ``(x, y, xy)``; ``weights``
        defaults to counting measure.  Weights may be ints, Fractions or floats.
        """
        labels = tuple(arrows)
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise StructuralError("duplicate arrow labels")
        n = len(labels)
        try:
            src = np.array([index[source[lab]] for lab in labels], dtype=np.int64)
            rng = np.array([index[range_[lab]] for lab in labels], dtype=np.int64)
            inv = np.array([index[inverse[lab]] for lab in labels], dtype=np.int64)
        except KeyError as exc:
            raise StructuralError(f"table refers to unknown arrow {exc.args[0]!r}") from exc
        comp = np.full((n, n), -1, dtype=np.int64)
        for x, y, z in compose:
            comp[index[x], index[y]] = index[z]
        if weights is None:
            w = np.ones(n, dtype=np.float64)
        else:
            w = _weight_array([weights[lab] for lab in labels])
        return cls(labels, src, rng, inv, comp, w, name)

    # -- basic structure ---------------------------------------------
    @property
    def n_arrows(self):
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        nm = f" {self.name!r}" if self.name else ""
        return f"<FiniteGroupoid{nm}: {self.n_arrows} arrows, {len(self.objects)} objects>"

    @cached_property
    def index(self):
        return {lab: i for i, lab in enumerate(self.labels)}

    def idx(self, label):
        try:
            return self.index[label]
        except KeyError:
            raise KeyError(f"no arrow labelled {label!r}") from None

    @cached_property
    def objects(self):
        """Indices of the unit arrows, in increasing order."""
        return np.nonzero(self.src == np.arange(self.n_arrows))[0]

    @cached_property
    def object_position(self):
        pos = np.full(self.n_arrows, -1, dtype=np.int64)
        pos[self.objects] = np.arange(len(self.objects))
        return pos

    def range_fiber(self, u):
        return np.nonzero(self.rng == u)[0]

    def source_fiber(self, u):
        return np.nonzero(self.src == u)[0]

    @cached_property
    def exact_weights(self):
        return self.weights.dtype == object

    @cached_property
    def weights_float(self):
        w = np.array([float(v) for v in self.weights], dtype=np.float64)
        w.setflags(write=False)
        return w

    @cached_property
    def weights_object(self):
        w = np.empty(self.n_arrows, dtype=object)
        w[:] = [_exact_weight(v) for v in self.weights]
        return w

    @cached_property
    def plan_weights_float(self):
        """Weights of the convolution plan terms (``weights_float[plan.y]``)."""
        w = self.weights_float[self.plan.y]
        w.setflags(write=False)
        return w

    @cached_property
    def plan_weights_object(self):
        """Exact plan weights; integral values are plain ints to keep integer sums fast."""
        w = self.weights_object[self.plan.y].copy()
        for i, v in enumerate(w):
            if v.denominator == 1:
                w[i] = int(v)
        return w

    @cached_property
    def is_counting(self):
        return all(v == 1 for v in self.weights)

    @cached_property
    def is_principal(self):
        """Trivial isotropy: an arrow with equal source and range is a unit."""
        loops = self.src == self.rng
        return bool(np.all(self.src[loops] == np.nonzero(loops)[0]))

    @property
    def is_etale(self):
        """True when the Haar system is counting measure on every fiber."""
        return self.is_counting

    @cached_property
    def orbits(self):
        """Objects grouped by connectivity, each group sorted."""
        parent = {int(u): int(u) for u in self.objects}

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        for x in range(self.n_arrows):
            a, b = find(int(self.src[x])), find(int(self.rng[x]))
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups = {}
        for u in self.objects:
            groups.setdefault(find(int(u)), []).append(int(u))
        return tuple(tuple(v) for _, v in sorted(groups.items()))

    @cached_property
    def plan(self):
        xs, ys = np.nonzero(self.comp >= 0)
        xs = xs.astype(np.int64)
        ys = ys.astype(np.int64)
        plan = ConvolutionPlan(xs, ys, self.comp[xs, ys].astype(np.int64),
                               self.inv[ys].astype(np.int64), self.n_arrows)
        for arr in (plan.x, plan.y, plan.a, plan.b):
            arr.setflags(write=False)
        return plan

    def same_structure(self, other):
        if self is other:
            return True
        return (self.labels == other.labels
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.rng, other.rng)
                and np.array_equal(self.inv, other.inv)
                and np.array_equal(self.comp, other.comp)
                and all(a == b for a, b in zip(self.weights, other.weights)))

    def with_weights(self, weights, name=None):
        """Copy with a new weight vector (labels to weight mapping or array)."""
        if isinstance(weights, dict):
            weights = [weights[lab] for lab in self.labels]
        return FiniteGroupoid(self.labels, self.src.copy(), self.rng.copy(), self.inv.copy(),
                              self.comp.copy(), _weight_array(list(weights)),
                              self.name if name is None else name)

    def relabel(self, labels, name=None):
        return FiniteGroupoid(tuple(labels), self.src.copy(), self.rng.copy(), self.inv.copy(),
                              self.comp.copy(), self.weights.copy(),
                              self.name if name is None else name)

    def subgroupoid_mask(self, mask):
        """Check that a boolean arrow mask is a subgroupoid; return a witness or None."""
        mask = np.asarray(mask, dtype=bool)
        idx = np.nonzero(mask)[0]
        for x in idx:
            if not (mask[self.src[x]] and mask[self.rng[x]]):
                return ("missing unit", self.labels[x])
            if not mask[self.inv[x]]:
                return ("missing inverse", self.labels[x])
        sub = self.comp[np.ix_(idx, idx)]
        bad = np.argwhere((sub >= 0) & ~mask[np.where(sub >= 0, sub, 0)])
        if len(bad):
            i, j = bad[0]
            return ("not closed", self.labels[idx[i]], self.labels[idx[j]])
        return None

    def restrict(self, mask, name=None):
        """Subgroupoid on the arrows selected by ``mask``, with restricted weights."""
        mask = np.asarray(mask, dtype=bool)
        witness = self.subgroupoid_mask(mask)
        if witness is not None:
            raise StructuralError("mask is not a subgroupoid", witness)
        idx = np.nonzero(mask)[0]
        new = np.full(self.n_arrows, -1, dtype=np.int64)
        new[idx] = np.arange(len(idx))
        sub = self.comp[np.ix_(idx, idx)]
        comp = np.where(sub >= 0, new[np.where(sub >= 0, sub, 0)], -1)
        return FiniteGroupoid(tuple(self.labels[i] for i in idx), new[self.src[idx]],
                              new[self.rng[idx]], new[self.inv[idx]], comp,
                              self.weights[idx].copy(), name or self.name)


def _weight_array(values):
    if all(isinstance(v, (float, np.floating)) for v in values):
        return np.array(values, dtype=np.float64)
    out = np.empty(len(values), dtype=object)
    out[:] = [Fraction(v) if isinstance(v, (int, np.integer, str)) else v for v in values]
    return out


# -- validation ------------------------------------------------------------

def validate_groupoid(g: FiniteGroupoid, tol=None) -> Report:
    """Check the groupoid axioms and the Haar-weight conditions.

    Each entry carries a witness on failure, expressed with arrow labels.
    Left invariance for atomic weights is equivalent to ``w(xy) = w(y)`` for
    every composable pair, which is what is tested.
    """
    tol = TOL.haar if tol is None else tol
    L = g.labels
    n = g.n_arrows
    ar = np.arange(n)
    checks = []

    ok = all(t.shape == (n,) for t in (g.src, g.rng, g.inv)) and g.comp.shape == (n, n)
    ok = ok and all(((t >= 0) & (t < n)).all() for t in (g.src, g.rng, g.inv))
    ok = ok and bool(((g.comp >= -1) & (g.comp < n)).all())
    checks.append(CheckResult.boolean("tables", ok))
    if not ok:
        return Report(f"validate_groupoid {g.name}".strip(), tuple(checks))

    units_ok = np.all(g.src[g.src] == g.src) & np.all(g.rng[g.src] == g.src)
    units_ok &= np.all(g.src[g.rng] == g.rng) & np.all(g.rng[g.rng] == g.rng)
    bad = np.nonzero((g.src[g.src] != g.src) | (g.rng[g.rng] != g.rng))[0]
    checks.append(CheckResult.boolean("units", bool(units_ok),
                                      L[bad[0]] if len(bad) else None))

    defined = g.comp >= 0
    expected = g.src[:, None] == g.rng[None, :]
    bad = np.argwhere(defined != expected)
    checks.append(CheckResult.boolean(
        "composability", len(bad) == 0,
        (L[bad[0][0]], L[bad[0][1]]) if len(bad) else None))

    xs, ys = np.nonzero(defined & expected)
    z = g.comp[xs, ys]
    bad = np.nonzero((g.src[z] != g.src[ys]) | (g.rng[z] != g.rng[xs]))[0]
    checks.append(CheckResult.boolean(
        "composite_endpoints", len(bad) == 0,
        (L[xs[bad[0]]], L[ys[bad[0]]]) if len(bad) else None))

    ident = (g.comp[g.rng, ar] == ar) & (g.comp[ar, g.src] == ar)
    bad = np.nonzero(~ident)[0]
    checks.append(CheckResult.boolean("identity_laws", len(bad) == 0,
                                      L[bad[0]] if len(bad) else None))

    inv_ok = (g.inv[g.inv] == ar) & (g.comp[ar, g.inv] == g.rng) & (g.comp[g.inv, ar] == g.src)
    bad = np.nonzero(~inv_ok)[0]
    checks.append(CheckResult.boolean("inverses", len(bad) == 0,
                                      L[bad[0]] if len(bad) else None))

    trip = kernels.associativity_violation(g.comp)
    checks.append(CheckResult.boolean("associativity", trip is None,
                                      tuple(L[i] for i in trip) if trip else None))

    objs = g.objects
    support = np.all(g.rng[objs] == objs) and len(objs) > 0 or n == 0
    checks.append(CheckResult.boolean("fiber_support", bool(support)))

    pos = [i for i in range(n) if not g.weights[i] > 0]
    checks.append(CheckResult.boolean("positive_weights", not pos,
                                      L[pos[0]] if pos else None))

    checks.append(_left_invariance(g, tol))
    return Report(f"validate_groupoid {g.name}".strip(), tuple(checks))


def _left_invariance(g, tol):
    xs, ys = np.nonzero(g.comp >= 0)
    zs = g.comp[xs, ys]
    L = g.labels
    if g.exact_weights:
        w = g.weights
        for x, y, z in zip(xs, ys, zs):
            if w[z] != w[y]:
                return CheckResult.boolean("left_invariance", False, (L[x], L[y], L[z]),
                                           "w(xy) != w(y)")
        return CheckResult.numeric("left_invariance", 0.0, 0.0)
    w = g.weights_float
    if len(xs) == 0:
        return CheckResult.numeric("left_invariance", 0.0, tol)
    rel = np.abs(w[zs] - w[ys]) / np.maximum(np.abs(w[ys]), 1e-300)
    k = int(np.argmax(rel))
    return CheckResult.numeric("left_invariance", rel[k], tol,
                               (L[xs[k]], L[ys[k]], L[zs[k]]), "relative |w(xy) - w(y)|")


# -- elements --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvolutionElement:
    """Coefficient vector indexed by the arrows of ``parent``.

    ``coeffs`` is complex128 for numerical work or an object array (ints,
    Fractions, Gaussian-integer ``complex``) for exact arithmetic.
    Supports ``+``, ``-``, scalar ``*`` and ``@`` for convolution.
    """

    parent: FiniteGroupoid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.parent.n_arrows,):
            raise ValueError("coefficient vector length does not match arrow count")
        self.coeffs.setflags(write=False)

    def __getitem__(self, label):
        return self.coeffs[self.parent.idx(label)]

    def _check(self, other):
        _same_parent(self, other)

    def __add__(self, other):
        self._check(other)
        return ConvolutionElement(self.parent, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return ConvolutionElement(self.parent, self.coeffs - other.coeffs)

    def __neg__(self):
        return ConvolutionElement(self.parent, -self.coeffs)

    def __mul__(self, scalar):
        return ConvolutionElement(self.parent, self.coeffs * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return convolve(self, other)

    def equals(self, other, tol=0.0):
        self._check(other)
        if tol == 0.0:
            return bool(np.all(self.coeffs == other.coeffs))
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= tol)

    def support(self):
        return [self.parent.labels[i] for i in np.nonzero(self.coeffs != 0)[0]]

    def __repr__(self):
        nz = {self.parent.labels[i]: self.coeffs[i] for i in np.nonzero(self.coeffs != 0)[0]}
        return f"ConvolutionElement({nz})"


def _same_parent(f, g):
    if not (f.parent is g.parent or f.parent.same_structure(g.parent)):
        raise GroupoidModelsError("elements belong to different groupoids")


def element(g: FiniteGroupoid, coeffs) -> ConvolutionElement:
    """Wrap coefficients; integer/real input becomes complex128, object stays exact."""
    if isinstance(coeffs, dict):
        arr = np.zeros(g.n_arrows, dtype=complex)
        if any(not isinstance(v, (int, float, complex, np.number)) for v in coeffs.values()):
            arr = np.empty(g.n_arrows, dtype=object)
            arr[:] = 0
        for lab, v in coeffs.items():
            arr[g.idx(lab)] = v
        coeffs = arr
    arr = np.asarray(coeffs)
    if arr.dtype != object:
        arr = arr.astype(np.complex128)
    else:
        arr = arr.copy()
    return ConvolutionElement(g, arr)


def indicator(g: FiniteGroupoid, label, exact=False) -> ConvolutionElement:
    """Indicator function of a single arrow."""
    if exact:
        arr = np.empty(g.n_arrows, dtype=object)
        arr[:] = 0
        arr[g.idx(label)] = 1
    else:
        arr = np.zeros(g.n_arrows, dtype=np.complex128)
        arr[g.idx(label)] = 1.0
    return ConvolutionElement(g, arr)


def zero_element(g: FiniteGroupoid, exact=False) -> ConvolutionElement:
    if exact:
        arr = np.empty(g.n_arrows, dtype=object)
        arr[:] = 0
        return ConvolutionElement(g, arr)
    return ConvolutionElement(g, np.zeros(g.n_arrows, dtype=np.complex128))


def random_element(g: FiniteGroupoid, rng, integer=False, scale=1.0) -> ConvolutionElement:
    """Random element; ``integer=True`` gives Gaussian integers in [-3, 3] (exact in float)."""
    n = g.n_arrows
    if integer:
        re = rng.integers(-3, 4, size=n)
        im = rng.integers(-3, 4, size=n)
        return ConvolutionElement(g, (re + 1j * im).astype(np.complex128))
    return ConvolutionElement(g, scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))


# -- products and involution -----------------------------------------------

def convolve(f: ConvolutionElement, g: ConvolutionElement) -> ConvolutionElement:
    """Convolution product ``f * g`` (see module docstring for the convention)."""
    _same_parent(f, g)
    G = f.parent
    plan = G.plan
    if f.coeffs.dtype == object or g.coeffs.dtype == object:
        fo, go = f.coeffs.astype(object), g.coeffs.astype(object)
        out = kernels._pykernels.convolve(plan.x, plan.a, plan.b,
                                          G.plan_weights_object, fo, go, plan.n)
        return ConvolutionElement(G, out)
    out = kernels.convolve(plan, f.coeffs, g.coeffs, G.plan_weights_float)
    return ConvolutionElement(G, out)



def adjoint(f: ConvolutionElement) -> ConvolutionElement:
    """``f*(x) = conj(f(x^-1))``."""
    c = f.coeffs[f.parent.inv]
    if c.dtype == object:
        c = np.array([_conj(v) for v in c], dtype=object)
    else:
        c = np.conj(c)
    return ConvolutionElement(f.parent, c)


def _conj(v):
    return v.conjugate() if hasattr(v, "conjugate") else v


# -- norms and representations --------------------------------------------

def i_norm(f: ConvolutionElement) -> float:
    """Max over objects of the weighted fiber sums of ``|f|`` and ``|f o inverse|``."""
    G = f.parent
    a = np.abs(f.coeffs.astype(np.complex128)) * G.weights_float
    b = np.abs(f.coeffs.astype(np.complex128))[G.inv] * G.weights_float
    pos = G.object_position[G.rng]
    m = len(G.objects)
    left = np.bincount(pos, weights=a, minlength=m)
    right = np.bincount(pos, weights=b, minlength=m)
    return float(max(left.max(initial=0.0), right.max(initial=0.0)))


def regular_representation(f: ConvolutionElement, u) -> np.ndarray:
    """Matrix of the regular representation on the source fiber at object ``u``.

    Rows and columns are indexed by the source fiber ``G_u`` (increasing arrow
    index); the kernel ``f(x y^-1)`` is symmetrised with the square roots of
    the fiber weights ``w(y^-1)``, so the matrix is the operator on
    ``L^2(G_u)`` in an orthonormal basis.  ``u`` is an object label or index.
    """
    G = f.parent
    ui = u if isinstance(u, (int, np.integer)) else G.idx(u)
    fib = G.source_fiber(ui)
    xy = G.comp[np.ix_(fib, G.inv[fib])]
    K = f.coeffs.astype(np.complex128)[xy]
    nu = np.sqrt(G.weights_float[G.inv[fib]])
    return nu[:, None] * K * nu[None, :]


def reduced_norm(f: ConvolutionElement) -> float:
    """Max over objects of the operator norm of :func:`regular_representation`."""
    G = f.parent
    best = 0.0
    for u in G.objects:
        M = regular_representation(f, int(u))
        best = max(best, float(np.linalg.norm(M, 2)) if M.size else 0.0)
    return best


def to_matrix(f: ConvolutionElement) -> np.ndarray:
    """Matrix image of an element of a principal groupoid.

    Rows/columns are objects in index order; ``F[r(x), s(x)] = f(x)``.  With
    non-counting weights (left invariant, so depending only on the source
    object) the image is ``D^(1/2) F D^(1/2)`` with ``D`` the source weights,
    which keeps the map multiplicative and *-preserving.
    """
    G = f.parent
    if not G.is_principal:
        raise GroupoidModelsError("to_matrix needs a principal groupoid")
    m = len(G.objects)
    pos = G.object_position
    dtype = object if f.coeffs.dtype == object else np.complex128
    F = np.zeros((m, m), dtype=dtype)
    F[pos[G.rng], pos[G.src]] = f.coeffs
    if G.is_counting:
        return F
    d = np.zeros(m)
    d[pos[G.src]] = G.weights_float
    s = np.sqrt(d)
    return s[:, None] * F.astype(np.complex128) * s[None, :]


def from_matrix(G: FiniteGroupoid, M) -> ConvolutionElement:
    """Inverse of :func:`to_matrix` on the support pattern of ``G``."""
    if not G.is_principal:
        raise GroupoidModelsError("from_matrix needs a principal groupoid")
    pos = G.object_position
    M = np.asarray(M)
    if G.is_counting:
        c = M[pos[G.rng], pos[G.src]]
        return element(G, c)
    m = len(G.objects)
    d = np.zeros(m)
    d[pos[G.src]] = G.weights_float
    s = np.sqrt(d)
    c = M[pos[G.rng], pos[G.src]] / (s[pos[G.rng]] * s[pos[G.src]])
    return element(G, c)


# -- products and unions --------------------------------------------------

def product_groupoid(*factors: FiniteGroupoid, name="") -> FiniteGroupoid:
    """Cartesian product; labels are tuples, arrows ordered lexicographically.

    The weight of a tuple is the product of the factor weights, and the
    coefficient vector of a simple tensor is the Kronecker product of the
    factor vectors (see :func:`tensor`).
    """
    if not factors:
        raise ValueError("need at least one factor")
    sizes = [f.n_arrows for f in factors]
    total = int(np.prod(sizes))
    strides = [int(np.prod(sizes[i + 1:])) for i in range(len(sizes))]
    grids = np.indices(sizes).reshape(len(sizes), -1)

    def combine(tabs):
        out = np.zeros(total, dtype=np.int64)
        for k, t in enumerate(tabs):
            out += t[grids[k]] * strides[k]
        return out

    src = combine([f.src for f in factors])
    rng = combine([f.rng for f in factors])
    inv = combine([f.inv for f in factors])
    comp = np.zeros((total, total), dtype=np.int64)
    valid = np.ones((total, total), dtype=bool)
    for k, f in enumerate(factors):
        c = f.comp[np.ix_(grids[k], grids[k])]
        valid &= c >= 0
        comp += np.where(c >= 0, c, 0) * strides[k]
    comp[~valid] = -1
    if any(f.exact_weights for f in factors):
        w = np.empty(total, dtype=object)
        w[:] = 1
        for k, f in enumerate(factors):
            w = w * f.weights_object[grids[k]]
    else:
        w = np.ones(total)
        for k, f in enumerate(factors):
            w = w * f.weights_float[grids[k]]
    labels = tuple(iproduct(*[f.labels for f in factors]))
    nm = name or " x ".join(f.name or "?" for f in factors)
    return FiniteGroupoid(labels, src, rng, inv, comp, w, nm)


def disjoint_union(*parts: FiniteGroupoid, name="") -> FiniteGroupoid:
    """Disjoint union; labels are ``(component index, label)``."""
    offs = np.cumsum([0] + [p.n_arrows for p in parts])
    total = int(offs[-1])
    src = np.concatenate([p.src + o for p, o in zip(parts, offs)]).astype(np.int64)
    rng = np.concatenate([p.rng + o for p, o in zip(parts, offs)]).astype(np.int64)
    inv = np.concatenate([p.inv + o for p, o in zip(parts, offs)]).astype(np.int64)
    comp = np.full((total, total), -1, dtype=np.int64)
    for p, o in zip(parts, offs):
        comp[o:o + p.n_arrows, o:o + p.n_arrows] = np.where(p.comp >= 0, p.comp + o, -1)
    if any(p.exact_weights for p in parts):
        w = np.concatenate([p.weights_object for p in parts]) if parts else np.empty(0, object)
    else:
        w = np.concatenate([p.weights_float for p in parts]) if parts else np.empty(0)
    labels = tuple((c, lab) for c, p in enumerate(parts) for lab in p.labels)
    nm = name or " + ".join(p.name or "?" for p in parts)
    return FiniteGroupoid(labels, src, rng, inv, comp, w, nm)


def tensor(*elements: ConvolutionElement, parent=None) -> ConvolutionElement:
    """Simple tensor of elements as an element of the product groupoid."""
    vec = elements[0].coeffs
    for e in elements[1:]:
        vec = np.kron(vec, e.coeffs)
    if parent is None:
        parent = product_groupoid(*[e.parent for e in elements])
    return element(parent, vec)


# -- cocycles --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cocycle:
    """Circle-valued function on composable pairs, stored as an N x N array.

    Entries at non-composable pairs are ignored (kept at 0).
    """

    parent: FiniteGroupoid
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def __call__(self, x, y):
        G = self.parent
        return self.values[G.idx(x), G.idx(y)]

    def is_normalized(self, tol=1e-12):
        G = self.parent
        ar = np.arange(G.n_arrows)
        a = self.values[G.rng, ar]
        b = self.values[ar, G.src]
        return bool(np.all(np.abs(a - 1) <= tol) and np.all(np.abs(b - 1) <= tol))


def _cocycle_mask(G):
    return G.comp >= 0


def trivial_cocycle(G: FiniteGroupoid) -> Cocycle:
    return Cocycle(G, np.where(_cocycle_mask(G), 1.0 + 0j, 0j))


def cocycle_from_function(G: FiniteGroupoid, fn) -> Cocycle:
    """Cocycle whose value on ``(x, y)`` is ``fn(label_x, label_y)``."""
    vals = np.zeros((G.n_arrows, G.n_arrows), dtype=np.complex128)
    for x, y in zip(*np.nonzero(_cocycle_mask(G))):
        vals[x, y] = fn(G.labels[x], G.labels[y])
    return Cocycle(G, vals)


def coboundary(G: FiniteGroupoid, b) -> Cocycle:
    """``b(x) b(y) / b(xy)`` for a circle-valued array ``b`` on arrows."""
    b = np.asarray(b, dtype=np.complex128)
    m = _cocycle_mask(G)
    z = np.where(m, G.comp, 0)
    vals = np.where(m, b[:, None] * b[None, :] / b[z], 0j)
    return Cocycle(G, vals)


def cocycle_product(s1: Cocycle, s2: Cocycle) -> Cocycle:
    if not s1.parent.same_structure(s2.parent):
        raise GroupoidModelsError("cocycles live on different groupoids")
    return Cocycle(s1.parent, s1.values * s2.values)


def validate_cocycle(sigma: Cocycle, tol=None) -> Report:
    """Unit modulus on composable pairs and the 2-cocycle identity on all triples."""
    tol = TOL.tol if tol is None else tol
    G = sigma.parent
    m = _cocycle_mask(G)
    mod = np.abs(np.abs(sigma.values[m]) - 1.0)
    k = int(np.argmax(mod)) if mod.size else 0
    pairs = np.argwhere(m)
    c1 = CheckResult.numeric("unit_modulus", mod.max(initial=0.0), tol,
                             tuple(G.labels[i] for i in pairs[k]) if mod.size else None)
    defect, trip = kernels.cocycle_defect(G.comp, np.ascontiguousarray(sigma.values))
    c2 = CheckResult.numeric("cocycle_identity", defect, tol,
                             tuple(G.labels[i] for i in trip) if trip else None)
    return Report("validate_cocycle", (c1, c2))


def _require_cocycle(sigma, tol=None):
    rep = validate_cocycle(sigma, tol)
    if not rep.passed:
        bad = rep.failures()[0]
        raise GroupoidModelsError(f"invalid cocycle: {bad.name}", bad.witness)


def convolve_twisted(f: ConvolutionElement, g: ConvolutionElement, sigma: Cocycle,
                     check=True) -> ConvolutionElement:
    """Twisted product: each term of :func:`convolve` is multiplied by ``sigma(xy, y^-1)``.

    With the trivial cocycle the result is bit-for-bit the untwisted product
    (the extra factor is an exact multiplication by 1 in the same order).
    """
    _same_parent(f, g)
    G = f.parent
    if not sigma.parent.same_structure(G):
        raise GroupoidModelsError("cocycle lives on a different groupoid")
    if check:
        _require_cocycle(sigma)
    plan = G.plan
    ps = np.ascontiguousarray(sigma.values[plan.a, plan.b])
    if f.coeffs.dtype == object or g.coeffs.dtype == object:
        out = kernels._pykernels.convolve_twisted(
            plan.x, plan.a, plan.b, G.plan_weights_object, ps.astype(object),
            f.coeffs.astype(object), g.coeffs.astype(object), plan.n)
        return ConvolutionElement(G, out)
    out = kernels.convolve_twisted(plan, f.coeffs, g.coeffs, G.plan_weights_float, ps)
    return ConvolutionElement(G, out)


def adjoint_twisted(f: ConvolutionElement, sigma: Cocycle) -> ConvolutionElement:
    """``f*(x) = conj(f(x^-1) sigma(x, x^-1))``.

    This is an involution when ``sigma`` is normalized (value 1 whenever one
    argument is a unit), which covers every cohomology class.
    """
    G = f.parent
    ar = np.arange(G.n_arrows)
    s = sigma.values[ar, G.inv]
    c = np.conj(f.coeffs.astype(np.complex128)[G.inv] * s)
    return ConvolutionElement(G, c)


# -- JSON ------------------------------------------------------------------

def _label_id(label):
    return json.dumps(_label_to_json(label), separators=(",", ":"))


def _label_to_json(label):
    if isinstance(label, tuple):
        return [_label_to_json(v) for v in label]
    if isinstance(label, np.integer):
        return int(label)
    return label


def _label_from_json(obj):
    if isinstance(obj, list):
        return tuple(_label_from_json(v) for v in obj)
    return obj


def _weight_to_json(w):
    if isinstance(w, (float, np.floating)):
        return float(w)
    return str(Fraction(w))


def _weight_from_json(w):
    if isinstance(w, str):
        return Fraction(w)
    return float(w)


def groupoid_to_json(g: FiniteGroupoid) -> dict:
    """JSON document with string arrow ids (JSON encodings of the labels)."""
    ids = [_label_id(lab) for lab in g.labels]
    xs, ys = np.nonzero(g.comp >= 0)
    return {
        "name": g.name,
        "arrows": ids,
        "objects": [ids[u] for u in g.objects],
        "source": {ids[i]: ids[g.src[i]] for i in range(g.n_arrows)},
        "range": {ids[i]: ids[g.rng[i]] for i in range(g.n_arrows)},
        "compose": [[ids[x], ids[y], ids[g.comp[x, y]]] for x, y in zip(xs, ys)],
        "inverse": {ids[i]: ids[g.inv[i]] for i in range(g.n_arrows)},
        "weights": {ids[i]: _weight_to_json(g.weights[i]) for i in range(g.n_arrows)},
    }


def groupoid_from_json(doc) -> FiniteGroupoid:
    if isinstance(doc, str):
        doc = json.loads(doc)
    ids = doc["arrows"]
    lab = {i: _label_from_json(json.loads(i)) for i in ids}
    g = FiniteGroupoid.from_tables(
        [lab[i] for i in ids],
        {lab[k]: lab[v] for k, v in doc["source"].items()},
        {lab[k]: lab[v] for k, v in doc["range"].items()},
        [(lab[x], lab[y], lab[z]) for x, y, z in doc["compose"]],
        {lab[k]: lab[v] for k, v in doc["inverse"].items()},
        {lab[k]: _weight_from_json(v) for k, v in doc["weights"].items()},
        name=doc.get("name", ""),
    )
    objs = {lab[i] for i in doc.get("objects", [])}
    if objs and objs != {g.labels[u] for u in g.objects}:
        raise StructuralError("object list disagrees with the source table")
    return g
