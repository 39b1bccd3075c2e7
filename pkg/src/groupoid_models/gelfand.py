"""Finite discrete spaces with partial maps versus commutative algebras.

A partial map ``f: U -> Y`` with ``U`` a subset of ``X`` gives the
homomorphism ``C(Y) -> C(X)`` that pulls back along ``f`` and extends by
zero off ``U``.  On delta functions its matrix ``H`` (rows ``X``, columns
``Y``) has ``H[x, y] = 1`` iff ``x`` is in ``U`` and ``f(x) = y``.  Every
*-homomorphism between these algebras has this form; the inverse recovers
``U`` as the support of the image of the constant function 1.

Spaces are discrete, so every subset counts as open.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .checks import CheckResult, Report
from .errors import GroupoidModelsError, StructuralError

__all__ = [
    "FiniteSpace", "PartialMap", "CommHom", "partial_map_to_hom", "hom_to_partial_map",
    "compose_partial_maps", "identity_map", "hom_compose", "enumerate_partial_maps",
    "exhaustive_round_trip", "brute_force_homomorphisms", "random_partial_map",
    "space_to_json", "partial_map_to_json", "partial_map_from_json",
]


@dataclass(frozen=True)
class FiniteSpace:
    """A finite set of hashable points (possibly empty)."""

    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if len(set(pts)) != len(pts):
            raise StructuralError("points must be distinct")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def index(self, p):
        try:
            return self.points.index(p)
        except ValueError:
            raise KeyError(f"{p!r} is not a point of the space") from None


@dataclass(frozen=True)
class PartialMap:
    """``f: U -> target`` with ``U`` a subset of ``source``; ``mapping`` is ``{x: f(x)}``."""

    source: FiniteSpace
    target: FiniteSpace
    mapping: tuple

    def __init__(self, source, target, mapping):
        items = mapping.items() if isinstance(mapping, dict) else mapping
        items = tuple(sorted(((x, y) for x, y in items), key=lambda xy: source.index(xy[0])))
        for x, y in items:
            source.index(x)
            target.index(y)
        if len({x for x, _ in items}) != len(items):
            raise StructuralError("a point of the domain is mapped twice")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mapping", items)

    @property
    def domain(self):
        return frozenset(x for x, _ in self.mapping)

    def __call__(self, x):
        for a, b in self.mapping:
            if a == x:
                return b
        raise KeyError(f"{x!r} is outside the domain")

    def codes(self):
        """Target index per source point, -1 off the domain."""
        c = np.full(len(self.source), -1, dtype=np.int64)
        for x, y in self.mapping:
            c[self.source.index(x)] = self.target.index(y)
        return c


@dataclass(frozen=True, eq=False)
class CommHom:
    """Linear map ``C(target) -> C(source)`` given on delta functions.

    ``matrix[x, y]`` is the coefficient of ``delta_x`` in the image of
    ``delta_y``; note the direction is opposite to the partial map.
    """

    source: FiniteSpace
    target: FiniteSpace
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.shape != (len(self.source), len(self.target)):
            raise StructuralError("matrix shape does not match the spaces")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def __call__(self, g):
        return self.matrix @ np.asarray(g)

    def __eq__(self, other):
        return (isinstance(other, CommHom) and self.source == other.source
                and self.target == other.target and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.source, self.target, self.matrix.tobytes()))

    def check(self) -> Report:
        """*-homomorphism checks on the delta basis (exact)."""
        M = self.matrix
        n = M.shape[1]
        worst, wit = 0.0, None
        for y in range(n):
            for z in range(n):
                want = M[:, y] if y == z else np.zeros(M.shape[0])
                e = float(np.max(np.abs(M[:, y] * M[:, z] - want), initial=0.0))
                if e > worst:
                    worst, wit = e, (self.target.points[y], self.target.points[z])
        star = float(np.max(np.abs(np.conj(M) - M), initial=0.0))
        return Report("commutative homomorphism", (
            CheckResult.numeric("multiplicative", worst, 0.0, wit,
                                "psi(d_y d_z) = psi(d_y) psi(d_z) on delta functions"),
            CheckResult.numeric("star_preserving", star, 0.0),
        ))


def identity_map(X: FiniteSpace) -> PartialMap:
    return PartialMap(X, X, {x: x for x in X.points})


def partial_map_to_hom(m: PartialMap) -> CommHom:
    """Pullback along ``m`` followed by extension by zero."""
    H = np.zeros((len(m.source), len(m.target)), dtype=np.int64)
    c = m.codes()
    rows = np.nonzero(c >= 0)[0]
    H[rows, c[rows]] = 1
    return CommHom(m.source, m.target, H)


def hom_to_partial_map(h: CommHom) -> PartialMap:
    """Recover ``(U, f)``: ``U`` supports the image of 1, ``f(x)`` is the unique ``y`` hit.

    Raises :class:`GroupoidModelsError` with the failing pair of delta
    functions if ``h`` is not a *-homomorphism.
    """
    rep = h.check()
    if not rep.passed:
        bad = rep.failures()[0]
        raise GroupoidModelsError(f"not a *-homomorphism ({bad.name})", bad.witness)
    M = h.matrix
    unit_image = M @ np.ones(M.shape[1])
    mapping = {}
    for i in np.nonzero(unit_image)[0]:
        j = int(np.nonzero(M[i])[0][0])
        mapping[h.source.points[i]] = h.target.points[j]
    return PartialMap(h.source, h.target, mapping)


def compose_partial_maps(outer: PartialMap, inner: PartialMap) -> PartialMap:
    """``outer o inner`` defined on ``inner^-1(domain of outer)``."""
    if inner.target != outer.source:
        raise StructuralError("inner target is not the outer source")
    dom = outer.domain
    return PartialMap(inner.source, outer.target,
                      {x: outer(y) for x, y in inner.mapping if y in dom})


def hom_compose(first: CommHom, second: CommHom) -> CommHom:
    """``first o second`` as maps of algebras (``second`` applied first)."""
    if first.target != second.source:
        raise StructuralError("homomorphisms are not composable")
    return CommHom(first.source, second.target, first.matrix @ second.matrix)


# -- exhaustive and random checks -----------------------------------------------------

def _space(n, tag):
    return FiniteSpace(tuple(f"{tag}{i + 1}" for i in range(n)))


def enumerate_partial_maps(m, n):
    """All partial maps from an ``m``-point to an ``n``-point space as a code array.

    Row ``r`` lists, per source point, the target index or -1.
    """
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([np.arange(-1, n)] * m), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def _codes_to_matrices(codes, n):
    r, m = codes.shape
    H = np.zeros((r, m, n + 1), dtype=np.int8)
    H[np.arange(r)[:, None], np.arange(m)[None, :], codes + 1] = 1
    return H[:, :, 1:]


def _matrices_to_codes(H):
    if H.shape[2] == 0:
        return np.full(H.shape[:2], -1, dtype=np.int64)
    has = H.any(axis=2)
    return np.where(has, H.argmax(axis=2), -1).astype(np.int64)


def exhaustive_round_trip(max_size=6) -> Report:
    """Bijection between partial maps and homomorphisms for all sizes up to ``max_size``.

    For every pair of sizes the full set of partial maps is converted to
    matrices (vectorised), checked to be homomorphisms (each row has at most
    one 1, which is multiplicativity on deltas), distinct, as many as all
    such 0/1 matrices, and to convert back to the same maps.  A handful are
    also pushed through the object-level functions.
    """
    checks = []
    total, bad = 0, None
    for m in range(max_size + 1):
        for n in range(max_size + 1):
            codes = enumerate_partial_maps(m, n)
            H = _codes_to_matrices(codes, n)
            rows_ok = bool(np.all(H.sum(axis=2) <= 1))
            distinct = len(np.unique(H.reshape(len(H), -1), axis=0)) == len(H) if m * n else True
            count_ok = len(H) == (n + 1) ** m
            back = np.array_equal(_matrices_to_codes(H), codes)
            total += len(H)
            if not (rows_ok and distinct and count_ok and back) and bad is None:
                bad = {"sizes": [m, n], "rows": rows_ok, "distinct": distinct,
                       "count": count_ok, "inverse": back}
    checks.append(CheckResult.boolean("hom_set_bijection", bad is None, bad,
                                      f"{total} partial maps over sizes 0..{max_size}"))
    rng = np.random.default_rng(0)
    obj_bad = None
    for _ in range(50):
        m, n = (int(v) for v in rng.integers(0, max_size + 1, size=2))
        X, Y = _space(m, "x"), _space(n, "y")
        f = random_partial_map(X, Y, rng)
        h = partial_map_to_hom(f)
        if hom_to_partial_map(h) != f or partial_map_to_hom(hom_to_partial_map(h)) != h:
            obj_bad = {"sizes": [m, n], "map": partial_map_to_json(f)}
            break
        unit = h(np.ones(n, dtype=np.int64))
        U = np.array([x in f.domain for x in X.points], dtype=np.int64)
        if not np.array_equal(unit, U):
            obj_bad = {"sizes": [m, n], "unit_support": unit.tolist()}
            break
    checks.append(CheckResult.boolean("object_round_trip", obj_bad is None, obj_bad))
    return Report(f"gelfand round trip (sizes <= {max_size})", tuple(checks))


def brute_force_homomorphisms(m, n):
    """All 0/1 matrices ``m x n`` that are multiplicative on delta functions.

    Exponential in ``m n``; an independent oracle for small sizes.
    """
    out = []
    for bits in product((0, 1), repeat=m * n):
        M = np.array(bits, dtype=np.int64).reshape(m, n)
        ok = True
        for y in range(n):
            for z in range(n):
                want = M[:, y] if y == z else 0
                if np.any(M[:, y] * M[:, z] != want):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(M)
    return out


def random_partial_map(X: FiniteSpace, Y: FiniteSpace, rng) -> PartialMap:
    codes = rng.integers(-1, len(Y), size=len(X)) if len(Y) else np.full(len(X), -1)
    return PartialMap(X, Y, {X.points[i]: Y.points[c] for i, c in enumerate(codes) if c >= 0})


# -- JSON ---------------------------------------------------------------------------

def space_to_json(X: FiniteSpace) -> list:
    return [list(p) if isinstance(p, tuple) else p for p in X.points]


def _point(p):
    return tuple(_point(v) for v in p) if isinstance(p, list) else p


def partial_map_to_json(m: PartialMap) -> dict:
    return {"source": space_to_json(m.source), "target": space_to_json(m.target),
            "map": [[_jsonable_point(x), _jsonable_point(y)] for x, y in m.mapping]}


def _jsonable_point(p):
    return [_jsonable_point(v) for v in p] if isinstance(p, tuple) else p


def partial_map_from_json(doc) -> PartialMap:
    if isinstance(doc, str):
        doc = json.loads(doc)
    X = FiniteSpace(tuple(_point(p) for p in doc["source"]))
    Y = FiniteSpace(tuple(_point(p) for p in doc["target"]))
    return PartialMap(X, Y, {_point(x): _point(y) for x, y in doc["map"]})
