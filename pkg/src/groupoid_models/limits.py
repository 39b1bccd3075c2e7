"""Finite-depth truncations of inverse systems and of their dual inductive systems.

Three pieces:

* :class:`InductiveSystemTruncation` chains algebra stages (finite groupoid
  convolution algebras or constrained interval algebras) along verified
  bondings; :func:`push_forward` moves elements up the chain and checks it
  against a composite computed in one step.
* :func:`enumerate_threads` builds the thread groupoid of a finite
  inverse system of groupoids with partial bondings: arrows are the maximal
  compatible tuples, and the piece ``Z_k`` holds the threads defined from
  level ``k`` upwards.
* :func:`glue_haar_weights` combines weight tables over an increasing union
  of finite groupoids, refusing when two pieces disagree on an overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .checks import CheckResult, Report
from .config import TOL
from .constructions import GroupoidSystem, make_unit_space
from .errors import CriterionViolation, GroupoidModelsError, StructuralError, VerificationError
from .groupoid import ConvolutionElement, FiniteGroupoid, validate_groupoid
from .interval import IntervalElement
from .morphisms import PartialMorphism, check_partial_morphism, compose_partial, induced_map

__all__ = [
    "InductiveSystemTruncation", "push_forward", "coherence_report", "composite_value",
    "ThreadTruncation", "enumerate_threads", "make_binary_cantor_system",
    "binary_cantor_piece_mask", "glue_haar_weights", "restrict_weights",
]


# -- inductive systems ----------------------------------------------------------

@dataclass(eq=False)
class InductiveSystemTruncation:
    """Algebra stages ``A_0 -> A_1 -> ...`` joined by bondings.

    For groupoid stages the bonding ``i`` is a :class:`PartialMorphism` from
    stage ``i + 1`` to stage ``i`` and acts on elements by its induced map.
    For interval stages it is an
    :class:`~groupoid_models.builders.IntervalBonding` from stage ``i`` to
    stage ``i + 1``.
    """

    stages: list
    bondings: list
    name: str = ""
    kind: str = field(init=False)

    def __post_init__(self):
        if len(self.bondings) != max(len(self.stages) - 1, 0):
            raise StructuralError("need one bonding per consecutive pair of stages")
        if all(isinstance(s, FiniteGroupoid) for s in self.stages):
            self.kind = "groupoid"
            for i, b in enumerate(self.bondings):
                if not isinstance(b, PartialMorphism) or not (
                        _same(b.domain, self.stages[i + 1]) and _same(b.codomain, self.stages[i])):
                    raise StructuralError(f"bonding {i} does not connect stage {i + 1} to {i}")
        else:
            self.kind = "interval"
            for i, b in enumerate(self.bondings):
                src, tgt = self.stages[i], self.stages[i + 1]
                if (b.source.n, b.source.grid_log2) != (src.n, src.grid_log2) or \
                        (b.target.n, b.target.grid_log2) != (tgt.n, tgt.grid_log2):
                    raise StructuralError(f"bonding {i} does not connect stage {i} to {i + 1}")
                if b.report is not None and not b.report.passed:
                    raise VerificationError(f"bonding {i} failed verification")

    @classmethod
    def from_groupoid_system(cls, system: GroupoidSystem):
        return cls(list(system.stages), list(system.bondings), system.name)

    @classmethod
    def from_bondings(cls, bondings, name=""):
        stages = [bondings[0].source] + [b.target for b in bondings]
        return cls(stages, list(bondings), name)

    @property
    def depth(self):
        return len(self.stages)


def _same(a, b):
    return a is b or a.same_structure(b)


def _check_indices(sys, i, j):
    if not (0 <= i <= j < sys.depth):
        raise GroupoidModelsError(f"stage indices must satisfy 0 <= i <= j < {sys.depth}", (i, j))


def _stepwise(sys, i, j, f):
    for k in range(i, j):
        b = sys.bondings[k]
        f = induced_map(b, f) if sys.kind == "groupoid" else b.apply(f)
    return f


def push_forward(sys: InductiveSystemTruncation, i, j, f, check=True, tol=None):
    """Image of ``f`` (stage ``i``) at stage ``j`` by composing the bondings.

    With ``check`` set and ``j - i >= 2`` the result is compared with the
    one-step composite (a composed partial morphism, or a direct evaluation
    of the nested block formula) and :class:`VerificationError` is raised on
    disagreement.
    """
    _check_indices(sys, i, j)
    out = _stepwise(sys, i, j, f)
    if check and j - i >= 2:
        err = _coherence_error(sys, i, j, f, out)
        tol = (0.0 if sys.kind == "groupoid" else TOL.membership) if tol is None else tol
        if err > tol:
            raise VerificationError(f"push_forward {i}->{j} is not coherent (error {err:.3g})",
                                    "coherence", {"i": i, "j": j, "error": err})
    return out


def _composite_morphism(sys, i, j):
    comp = sys.bondings[j - 1]
    for k in range(j - 2, i - 1, -1):
        comp = compose_partial(sys.bondings[k], comp)
    return comp


def composite_value(bondings, f: IntervalElement, t):
    """``phi(f)(t)`` for the composite of ``bondings``, evaluated by nesting.

    The value at ``t`` of the last stage is assembled from the values of the
    previous composite at ``xi(t)`` for each path ``xi`` of the last bonding,
    recursing down to samples of ``f``.  No intermediate grid is used, so
    this is independent of the stepwise images.
    """
    t = Fraction(t)
    if not bondings:
        N = 2 ** f.parent.grid_log2
        s = t * N
        if s.denominator != 1:
            raise StructuralError("composite path value is not a grid point of the first stage")
        return f.samples[int(s)]
    last = bondings[-1]
    blocks = np.array([composite_value(bondings[:-1], f, m(t)) for m in last.paths.maps])
    return last.assemble(blocks, t)


def _coherence_error(sys, i, j, f, out):
    if sys.kind == "groupoid":
        direct = induced_map(_composite_morphism(sys, i, j), f)
        d = (direct.coeffs - out.coeffs).astype(complex)
        return float(np.max(np.abs(d), initial=0.0))
    bonds = sys.bondings[i:j]
    Nt = 2 ** sys.stages[j].grid_log2
    worst = 0.0
    for jj in range(Nt + 1):
        d = composite_value(bonds, f, Fraction(jj, Nt)) - out.samples[jj]
        worst = max(worst, float(np.sqrt(np.sum(np.abs(d) ** 2))))
    return worst


def coherence_report(sys: InductiveSystemTruncation, samples) -> Report:
    """Coherence of every triple ``i < j < k`` on ``samples[i]`` (lists per stage).

    Groupoid systems compare exactly; interval systems allow the membership
    tolerance (Frobenius norms, which bound operator norms).  Interval stages
    beyond the dense limit are compared blockwise: the blocks of the last
    bonding evaluated directly against the stored previous-stage samples.
    """
    checks = []
    exact = sys.kind == "groupoid"
    tol = 0.0 if exact else TOL.membership
    for i in range(sys.depth):
        for f in samples.get(i, []):
            for j in range(i + 1, sys.depth):
                for k in range(j + 1, sys.depth):
                    err, wit = _triple_error(sys, i, j, k, f)
                    checks.append(CheckResult.numeric(f"coherence[{i},{j},{k}]", err, tol, wit))
    worst = {}
    for c in checks:
        if c.name not in worst or c.max_error > worst[c.name].max_error:
            worst[c.name] = c
    return Report(f"coherence {sys.name}".strip(), tuple(worst.values()))


def _triple_error(sys, i, j, k, f):
    if sys.kind == "groupoid":
        a = induced_map(_composite_morphism(sys, i, k), f)
        b = _stepwise(sys, j, k, _stepwise(sys, i, j, f))
        d = (a.coeffs - b.coeffs).astype(complex)
        return float(np.max(np.abs(d), initial=0.0)), (i, j, k)
    last = sys.bondings[k - 1]
    if last.is_dense:
        g = _stepwise(sys, i, k, f)
        return _coherence_error(sys, i, k, f, g), (i, j, k)
    # structured: compare the distinct diagonal blocks of the last bonding
    prev = _stepwise(sys, i, k - 1, f)
    bonds = sys.bondings[i:k - 1]
    Nt = 2 ** last.target.grid_log2
    Ns = 2 ** last.source.grid_log2
    worst = 0.0
    for jj in range(Nt + 1):
        for m in set(last.paths.maps):
            s = m(Fraction(jj, Nt))
            d = composite_value(bonds, f, s) - prev.samples[int(s * Ns)]
            worst = max(worst, float(np.sqrt(np.sum(np.abs(d) ** 2))))
    return worst, (i, j, k)


# -- threads --------------------------------------------------------------------------

@dataclass(eq=False)
class ThreadTruncation:
    """Thread groupoid of a finite inverse system truncated at ``depth`` levels.

    ``union`` has one arrow per arrow ``x`` of the top level, labelled by the
    maximal thread ``(x_0, ..., x_top)`` where ``x_i`` is the image of ``x``
    at level ``i`` (``None`` once a bonding is undefined).  ``pieces[k]`` is
    the subgroupoid ``Z_k`` of threads defined from level ``k`` upwards,
    relabelled by ``(x_k, ..., x_top)``; ``Z_0 <= Z_1 <= ... <= Z_top = union``.
    ``projections[k]`` is the partial morphism ``union -> G_k`` with domain
    ``Z_k``.  Weights are those of the top level.
    """

    system: GroupoidSystem
    depth: int
    union: FiniteGroupoid
    masks: list
    pieces: list
    projections: list

    def piece_mask(self, k):
        return self.masks[k]

    def report(self) -> Report:
        """Groupoid axioms, projection checks, nesting, surjectivity and inheritance."""
        checks = []
        rep = validate_groupoid(self.union)
        checks.append(CheckResult.boolean("union_valid", rep.passed,
                                          [c.name for c in rep.failures()]))
        for k, Zk in enumerate(self.pieces):
            ok = validate_groupoid(Zk).passed
            checks.append(CheckResult.boolean(f"piece_valid[{k}]", ok, k))
        for k in range(len(self.masks) - 1):
            nested = bool(np.all(self.masks[k] <= self.masks[k + 1]))
            checks.append(CheckResult.boolean(f"nested[{k}]", nested, k))
        for k, q in enumerate(self.projections):
            r = check_partial_morphism(q)
            checks.append(CheckResult.boolean(f"projection_valid[{k}]", r.passed,
                                              [c.name for c in r.failures()]))
        for k in range(self.depth):
            for n in range(k, self.depth - 1):
                ok = _restricted_surjective(self.system, k, n)
                checks.append(CheckResult.boolean(f"restricted_surjective[{k},{n}]", ok, (k, n),
                                                  "bonding n+1 -> n onto the level-k domain"))
        top = self.system.stages[self.depth - 1]
        if top.is_principal:
            checks.append(CheckResult.boolean("principal_inherited", self.union.is_principal))
        if top.is_etale:
            checks.append(CheckResult.boolean("etale_inherited", self.union.is_etale))
        return Report(f"threads depth {self.depth}", tuple(checks))


def _domain_to(system, k, n):
    """Mask of level-``n`` arrows whose composite image at level ``k`` is defined."""
    G = system.stages[n]
    mask = np.ones(G.n_arrows, dtype=bool)
    img = np.arange(G.n_arrows)
    for m in range(n - 1, k - 1, -1):
        b = system.bondings[m]
        ok = mask.copy()
        ok[mask] = b.mask[img[mask]]
        img = np.where(ok, b.arrow_map[np.where(ok, img, 0)], -1)
        mask = ok
    return mask


def _restricted_surjective(system, k, n):
    """Is ``p^{n+1}_n`` from ``V_k^{n+1}`` onto ``V_k^n``?"""
    b = system.bondings[n]
    src = _domain_to(system, k, n + 1)
    tgt = _domain_to(system, k, n)
    hit = np.zeros(len(tgt), dtype=bool)
    hit[b.arrow_map[src & b.mask]] = True
    return bool(np.all(hit[tgt]))


def enumerate_threads(system: GroupoidSystem, depth=None) -> ThreadTruncation:
    """Thread groupoid of the first ``depth`` levels (default: all)."""
    d = system.depth if depth is None else int(depth)
    if not 1 <= d <= system.depth:
        raise GroupoidModelsError(f"depth must be between 1 and {system.depth}")
    top = system.stages[d - 1]
    n = top.n_arrows
    # image of every top arrow at every level (-1 where undefined)
    images = [None] * d
    images[d - 1] = np.arange(n)
    for m in range(d - 2, -1, -1):
        b = system.bondings[m]
        up = images[m + 1]
        ok = up >= 0
        ok[ok] = b.mask[up[ok]]
        images[m] = np.where(ok, b.arrow_map[np.where(ok, up, 0)], -1)

    labels = tuple(tuple(system.stages[m].labels[images[m][x]] if images[m][x] >= 0 else None
                         for m in range(d)) for x in range(n))
    union = top.relabel(labels, name=f"threads({system.name or 'system'}, depth {d})")
    masks, pieces, projections = [], [], []
    for k in range(d):
        mask = images[k] >= 0
        masks.append(mask)
        Zk = union.restrict(mask, name=f"Z_{k}")
        pieces.append(Zk.relabel([lab[k:] for lab in Zk.labels]))
        amap = np.where(mask, images[k], -1).astype(np.int64)
        projections.append(PartialMorphism(union, system.stages[k], mask.copy(), amap,
                                           f"q_{k}"))
    return ThreadTruncation(system, d, union, masks, pieces, projections)


def make_binary_cantor_system(depth: int, weights=None) -> GroupoidSystem:
    """Levels ``X_n = {0,1}^(2n+1)`` as unit spaces; ``X_{n+1} -> X_n`` drops two coordinates.

    The bonding is defined on the points whose last coordinate is 0 and
    forgets the last two coordinates.  ``weights`` optionally maps a point
    (tuple of bits) to a positive weight; by default every point has weight 1.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    stages = []
    for lvl in range(depth):
        pts = list(product((0, 1), repeat=2 * lvl + 1))
        X = make_unit_space(pts, name=f"X_{lvl}")
        if weights is not None:
            X = X.with_weights({p: weights(p) for p in pts})
        stages.append(X)
    bondings = []
    for lvl in range(depth - 1):
        big, small = stages[lvl + 1], stages[lvl]
        mapping = {p: p[:-2] for p in big.labels if p[-1] == 0}
        bondings.append(PartialMorphism.from_dict(big, small, mapping, f"p_{lvl}"))
    return GroupoidSystem(stages, bondings, "binary-cantor")


def binary_cantor_piece_mask(depth: int, k: int):
    """Top-level points of ``Z_k``: odd coordinates ``2k+3, ..., 2 depth - 1`` (1-based) vanish.

    This is the closed-form description of the pieces (``Z_k`` is ``Z_0``
    times ``k`` free bits, and sits in ``Z_l`` where the extra bits are 0),
    used as an oracle for :func:`enumerate_threads`.
    """
    top = 2 * (depth - 1) + 1
    pts = list(product((0, 1), repeat=top))
    zero = [c - 1 for c in range(2 * k + 3, top + 1, 2)]
    return np.array([all(p[c] == 0 for c in zero) for p in pts])


# -- gluing weights over increasing unions ----------------------------------------------

def _tables_agree(small: FiniteGroupoid, big: FiniteGroupoid):
    """Is ``small`` a subgroupoid of ``big`` with the same labels and structure?"""
    try:
        pos = np.array([big.idx(lab) for lab in small.labels])
    except KeyError as exc:
        return ("missing arrow", exc.args[0])
    for name in ("src", "rng", "inv"):
        a = pos[getattr(small, name)]
        b = getattr(big, name)[pos]
        bad = np.nonzero(a != b)[0]
        if len(bad):
            return (f"{name} differs", small.labels[bad[0]])
    sub = big.comp[np.ix_(pos, pos)]
    mine = np.where(small.comp >= 0, pos[np.where(small.comp >= 0, small.comp, 0)], -1)
    bad = np.argwhere(sub != mine)
    if len(bad):
        i, j = bad[0]
        return ("composition differs", small.labels[i], small.labels[j])
    return None


def _weights_equal(a, b, exact):
    if exact:
        return Fraction(a) == Fraction(b)
    return abs(float(a) - float(b)) <= TOL.haar * max(abs(float(a)), abs(float(b)))


def glue_haar_weights(pieces) -> dict:
    """Weight table on the union of an increasing chain of finite groupoids.

    Each piece must be a subgroupoid of the next (matched by labels) carrying
    the restriction of the next piece's weights.  Returns ``{label: weight}``
    for the last piece.  Raises :class:`StructuralError` if the chain is not
    nested and :class:`CriterionViolation` (witness: the arrow and both
    weights) if two pieces disagree on a shared arrow.
    """
    pieces = list(pieces)
    if not pieces:
        return {}
    exact = all(p.exact_weights for p in pieces)
    table = {}
    for k, P in enumerate(pieces):
        if k:
            bad = _tables_agree(pieces[k - 1], P)
            if bad is not None:
                raise StructuralError(f"piece {k - 1} is not a subgroupoid of piece {k}", bad)
        w = P.weights_object if exact else P.weights_float
        for lab, v in zip(P.labels, w):
            if lab in table and not _weights_equal(table[lab], v, exact):
                raise CriterionViolation("pieces disagree on an overlap weight",
                                         {"arrow": lab, "piece": k,
                                          "weights": [table[lab], v]})
            table.setdefault(lab, v)
    return table


def restrict_weights(table: dict, piece: FiniteGroupoid) -> list:
    """Weights of ``piece``'s arrows read from a glued table."""
    return [table[lab] for lab in piece.labels]
