"""Concrete groupoids, groupoid systems and constrained interval algebras.

Groupoid side: pair groupoids on ``n`` points (``M_n``), disjoint unions
(finite-dimensional algebras), cyclic groups, UHF and tensor-power systems,
and multiplicity embeddings between finite-dimensional algebras.

Interval side: dimension drop algebras, the algebra of functions with a
scalar value at 0, and the building blocks with a zero corner at 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULTS
from .errors import StructuralError
from .groupoid import FiniteGroupoid, disjoint_union, product_groupoid
from .interval import ConstrainedIntervalAlgebra, StandardSubalgebraSpec
from .morphisms import PartialMorphism

__all__ = [
    "make_matrix_groupoid", "make_finite_dim_groupoid", "make_cyclic_group_groupoid",
    "make_unit_space", "SupernaturalTruncation", "GroupoidSystem", "make_uhf_system",
    "make_tensor_power_truncation", "make_af_bonding", "make_dimension_drop", "make_Zn",
    "make_building_block", "make_unit_projection", "CONSTRUCTION_NAMES",
]


def make_matrix_groupoid(n: int, name=None) -> FiniteGroupoid:
    """Pair groupoid on ``{1..n}`` with counting weights; arrow ``(i, j)`` goes from ``j`` to ``i``.

    Arrows are ordered row-major, so the coefficient vector of an element is
    its matrix image read row by row.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    i, j = np.divmod(np.arange(n * n), n)
    src = j * n + j
    rng = i * n + i
    inv = j * n + i
    # (i, j)(j', k) is defined iff j == j' and equals (i, k)
    xi, xj = i[:, None], j[:, None]
    yi, yk = i[None, :], j[None, :]
    comp = np.where(xj == yi, xi * n + yk, -1).astype(np.int64)
    labels = tuple((int(a) + 1, int(b) + 1) for a, b in zip(i, j))
    return FiniteGroupoid(labels, src.astype(np.int64), rng.astype(np.int64),
                          inv.astype(np.int64), comp, np.ones(n * n), name or f"G{n}")


def make_unit_space(points, name="X") -> FiniteGroupoid:
    """Groupoid with only units (a discrete space); labels are the points."""
    pts = list(points)
    m = len(pts)
    ar = np.arange(m, dtype=np.int64)
    comp = np.full((m, m), -1, dtype=np.int64)
    comp[ar, ar] = ar
    return FiniteGroupoid(tuple(pts), ar.copy(), ar.copy(), ar.copy(), comp, np.ones(m), name)


def make_finite_dim_groupoid(sizes, name=None) -> FiniteGroupoid:
    """Disjoint union of pair groupoids; labels ``(block, (i, j))``."""
    sizes = list(sizes)
    if not sizes:
        raise ValueError("need at least one block size")
    parts = [make_matrix_groupoid(s) for s in sizes]
    return disjoint_union(*parts, name=name or "+".join(f"M{s}" for s in sizes))


def make_cyclic_group_groupoid(n: int, name=None) -> FiniteGroupoid:
    """The cyclic group of order ``n`` as a one-object groupoid; labels ``0..n-1``."""
    ar = np.arange(n, dtype=np.int64)
    comp = ((ar[:, None] + ar[None, :]) % n).astype(np.int64)
    zero = np.zeros(n, dtype=np.int64)
    return FiniteGroupoid(tuple(range(n)), zero, zero.copy(), (-ar) % n, comp, np.ones(n),
                          name or f"Z/{n}")


@dataclass(frozen=True)
class SupernaturalTruncation:
    """Finite list of factors ``n_1, ..., n_k``, each at least 2."""

    factors: tuple

    def __post_init__(self):
        f = tuple(int(v) for v in self.factors)
        if not f or any(v < 2 for v in f):
            raise ValueError("factors must be integers >= 2")
        object.__setattr__(self, "factors", f)


@dataclass(frozen=True, eq=False)
class GroupoidSystem:
    """Chain of groupoids with partial bonding morphisms ``stages[i+1] -> stages[i]``."""

    stages: list
    bondings: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        if len(self.bondings) != max(len(self.stages) - 1, 0):
            raise StructuralError("need one bonding per consecutive pair of stages")
        for i, b in enumerate(self.bondings):
            if b.domain is not self.stages[i + 1] or b.codomain is not self.stages[i]:
                raise StructuralError(f"bonding {i} does not connect stages {i + 1} -> {i}")

    @property
    def depth(self):
        return len(self.stages)


def _drop_last_factor(big: FiniteGroupoid, small: FiniteGroupoid, last: FiniteGroupoid, name):
    """Projection ``small x last -> small`` restricted to units in the last factor."""
    m = last.n_arrows
    idx = np.arange(big.n_arrows)
    tail = idx % m
    is_unit = last.src[tail] == tail
    amap = np.where(is_unit, idx // m, -1).astype(np.int64)
    return PartialMorphism(big, small, is_unit, amap, name)


def make_unit_projection(g: FiniteGroupoid, h: FiniteGroupoid) -> PartialMorphism:
    """Projection ``g x h -> h`` defined on ``units(g) x h``.

    Its induced map sends ``a`` to ``1 (x) a`` under the Kronecker
    identification of ``C*(g x h)`` with ``C*(g) (x) C*(h)`` (for ``g`` with
    finitely many objects).
    """
    gh = product_groupoid(g, h, name=f"{g.name}x{h.name}")
    m = h.n_arrows
    idx = np.arange(gh.n_arrows)
    head = idx // m
    is_unit = g.src[head] == head
    amap = np.where(is_unit, idx % m, -1).astype(np.int64)
    return PartialMorphism(gh, h, is_unit, amap, "unit-projection")


def _product_chain(factors, name):
    stages, bondings = [], []
    for k in range(1, len(factors) + 1):
        stages.append(product_groupoid(*factors[:k], name=f"{name}[{k}]"))
    for k in range(1, len(factors)):
        bondings.append(_drop_last_factor(stages[k], stages[k - 1], factors[k],
                                          f"{name}:{k + 1}->{k}"))
    return GroupoidSystem(stages, bondings, name)


def make_uhf_system(t) -> GroupoidSystem:
    """Stages ``G_{n_1} x ... x G_{n_k}`` with the unit-restricted projections.

    The induced map of stage ``k -> k+1`` is ``T -> T (x) id_{n_{k+1}}``.
    """
    if not isinstance(t, SupernaturalTruncation):
        t = SupernaturalTruncation(tuple(t))
    factors = [make_matrix_groupoid(n) for n in t.factors]
    return _product_chain(factors, "UHF" + "x".join(map(str, t.factors)))


def make_tensor_power_truncation(g: FiniteGroupoid, depth: int) -> GroupoidSystem:
    """Stages ``g^k`` for ``k = 1..depth`` with projections restricted to units of the new factor."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    return _product_chain([g] * depth, f"({g.name or 'G'})^")


def make_af_bonding(source_sizes, target_sizes, multiplicity) -> PartialMorphism:
    """Partial morphism whose induced map is the multiplicity embedding.

    ``multiplicity[j][i]`` copies of source block ``i`` sit on the diagonal of
    target block ``j``, in order of ``i``.  The morphism goes from the target
    groupoid to the source groupoid (induced maps run the other way).  The
    embedding must be unital: ``sum_i multiplicity[j][i] * source_sizes[i]``
    equals ``target_sizes[j]``.
    """
    src_sizes, tgt_sizes = list(source_sizes), list(target_sizes)
    mult = np.asarray(multiplicity, dtype=int).reshape(len(tgt_sizes), len(src_sizes))
    for j, t in enumerate(tgt_sizes):
        if int(mult[j] @ np.array(src_sizes)) != t:
            raise StructuralError(f"target block {j}: multiplicities give size "
                                  f"{int(mult[j] @ np.array(src_sizes))}, expected {t}", j)
    S = make_finite_dim_groupoid(src_sizes)
    T = make_finite_dim_groupoid(tgt_sizes)
    mapping = {}
    for j, t in enumerate(tgt_sizes):
        off = 0
        for i, s in enumerate(src_sizes):
            for _ in range(mult[j, i]):
                for r in range(1, s + 1):
                    for c in range(1, s + 1):
                        mapping[(j, (off + r, off + c))] = (i, (r, c))
                off += s
    return PartialMorphism.from_dict(T, S, mapping, "af")


# -- interval algebras -----------------------------------------------------

def make_dimension_drop(m: int, n: int, grid_log2=None) -> ConstrainedIntervalAlgebra:
    """``f(0) in M_m (x) 1_n`` and ``f(1) in 1_m (x) M_n`` inside ``C([0,1], M_m (x) M_n)``.

    The value at 0 is stored as ``id_n (x) M_m`` conjugated by the shuffle
    permutation (see :func:`~groupoid_models.interval.commutation_matrix`),
    since ``A (x) 1_n`` is not block diagonal in Kronecker order.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    s = DEFAULTS.grid_log2 if grid_log2 is None else grid_log2
    # canonical copy c, local index l  <->  Kronecker index l * n + c
    c, l = np.divmod(np.arange(m * n), m)
    at0 = StandardSubalgebraSpec(((n, m),), 0, permutation=l * n + c)
    at1 = StandardSubalgebraSpec(((m, n),), 0)
    return ConstrainedIntervalAlgebra(m * n, s, {Fraction(0): at0, Fraction(1): at1},
                                      name=f"Z[{m},{n}]")


def make_Zn(n: int, grid_log2=None) -> ConstrainedIntervalAlgebra:
    """Functions with a scalar value at 0."""
    if n < 1:
        raise ValueError("n must be positive")
    s = DEFAULTS.grid_log2 if grid_log2 is None else grid_log2
    return ConstrainedIntervalAlgebra(n, s, {Fraction(0): StandardSubalgebraSpec(((n, 1),))},
                                      name=f"Z{n}")


def make_building_block(n: int, n_prime: int, grid_log2=None) -> ConstrainedIntervalAlgebra:
    """``f(0) = diag(c, ..., c, 0)`` with ``a = n'/n - 1`` copies, ``f(1) = diag(c, ..., c)``."""
    if n < 1 or n_prime % n != 0 or n_prime // n - 1 < 1:
        raise ValueError("need n | n' and n'/n - 1 > 0")
    a = n_prime // n - 1
    s = DEFAULTS.grid_log2 if grid_log2 is None else grid_log2
    return ConstrainedIntervalAlgebra(
        n_prime, s,
        {Fraction(0): StandardSubalgebraSpec(((a, n),), n),
         Fraction(1): StandardSubalgebraSpec(((a + 1, n),), 0)},
        name=f"A[{n},{n_prime}]")


CONSTRUCTION_NAMES = ("matrix", "finite-dim", "uhf", "af", "dimension-drop", "zn",
                      "building-block", "tensor-power")
