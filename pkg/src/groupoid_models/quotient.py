"""Quotients of finite groupoids that inherit a Haar system.

A partition of the arrows defines a quotient groupoid when source, range,
inverse and composition descend to the classes.  The quotient carries the
pushed-forward fiber weights precisely when every object in a class pushes
forward the same fiber measure; otherwise :class:`CriterionViolation` is
raised with the two disagreeing objects.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import CriterionViolation, StructuralError
from .groupoid import FiniteGroupoid, _weight_array, validate_groupoid
from .morphisms import PartialMorphism

__all__ = ["quotient_by_criterion", "partition_classes"]


def partition_classes(g: FiniteGroupoid, blocks):
    """Class index per arrow; arrows not mentioned in ``blocks`` are singletons.

    Classes are numbered in order of their first member's arrow index so the
    result does not depend on how the blocks were listed.
    """
    owner = np.full(g.n_arrows, -1, dtype=np.int64)
    for b, block in enumerate(blocks):
        for lab in block:
            i = g.idx(lab)
            if owner[i] >= 0 and owner[i] != b:
                raise StructuralError("blocks overlap", (lab,))
            owner[i] = b
    nxt = len(blocks)
    for i in range(g.n_arrows):
        if owner[i] < 0:
            owner[i] = nxt
            nxt += 1
    first = {}
    for i in range(g.n_arrows):
        first.setdefault(int(owner[i]), i)
    order = sorted(first, key=first.get)
    renum = {b: k for k, b in enumerate(order)}
    return np.array([renum[int(o)] for o in owner], dtype=np.int64)


def _descend(cls_of, table, labels, what):
    n_cls = int(cls_of.max()) + 1 if len(cls_of) else 0
    out = np.full(n_cls, -1, dtype=np.int64)
    rep = np.full(n_cls, -1, dtype=np.int64)
    for x in range(len(cls_of)):
        c = cls_of[x]
        t = cls_of[table[x]]
        if out[c] < 0:
            out[c], rep[c] = t, x
        elif out[c] != t:
            raise StructuralError(f"{what} does not descend to the classes",
                                  (labels[rep[c]], labels[x]))
    return out


def quotient_by_criterion(g: FiniteGroupoid, blocks, name=""):
    """Quotient groupoid and the quotient partial morphism ``g -> quotient``.

    ``blocks`` lists the non-singleton classes as collections of arrow labels.
    Each class is labelled by its first arrow.  Raises :class:`StructuralError`
    when the partition is incompatible with the groupoid structure and
    :class:`CriterionViolation` when two objects in one class push forward
    different fiber weights.
    """
    L = g.labels
    cls_of = partition_classes(g, blocks)
    n_cls = int(cls_of.max()) + 1 if len(cls_of) else 0
    src = _descend(cls_of, g.src, L, "source")
    rng = _descend(cls_of, g.rng, L, "range")
    inv = _descend(cls_of, g.inv, L, "inverse")

    comp = np.full((n_cls, n_cls), -1, dtype=np.int64)
    witness = {}
    xs, ys = np.nonzero(g.comp >= 0)
    for x, y in zip(xs, ys):
        a, b, c = cls_of[x], cls_of[y], cls_of[g.comp[x, y]]
        if comp[a, b] < 0:
            comp[a, b] = c
            witness[(a, b)] = (x, y)
        elif comp[a, b] != c:
            x0, y0 = witness[(a, b)]
            raise StructuralError("composition does not descend to the classes",
                                  (L[x0], L[y0], L[x], L[y]))
    # every class pair that should compose must have composable representatives
    need = src[:, None] == rng[None, :]
    miss = np.argwhere(need & (comp < 0))
    if len(miss):
        a, b = miss[0]
        first = {int(c): i for i, c in reversed(list(enumerate(cls_of)))}
        raise StructuralError("class pair composes in the quotient but has no composable "
                              "representatives", (L[first[int(a)]], L[first[int(b)]]))

    first = np.full(n_cls, -1, dtype=np.int64)
    for i in range(g.n_arrows - 1, -1, -1):
        first[cls_of[i]] = i
    labels = tuple(L[i] for i in first)

    weights = _pushforward_weights(g, cls_of, rng, n_cls)
    q = FiniteGroupoid(labels, src, rng, inv, comp, weights, name or f"{g.name}/~")
    rep = validate_groupoid(q)
    structural = [c for c in rep.failures() if c.name != "left_invariance"]
    if structural:
        raise StructuralError(f"quotient fails {structural[0].name}", structural[0].witness)
    if not rep.passed:
        raise CriterionViolation("induced weights are not left invariant",
                                 rep["left_invariance"].witness)
    qmap = PartialMorphism(g, q, np.ones(g.n_arrows, dtype=bool), cls_of.copy(), "quotient")
    return q, qmap


def _pushforward_weights(g, cls_of, q_rng, n_cls):
    exact = g.exact_weights
    w = g.weights_object if exact else g.weights_float
    mass = {}
    for x in range(g.n_arrows):
        key = (int(g.rng[x]), int(cls_of[x]))
        mass[key] = mass.get(key, 0) + w[x]
    weights = [None] * n_cls
    seen_from = [None] * n_cls
    L = g.labels
    for u in g.objects:
        U = int(cls_of[u])
        for c in np.nonzero(q_rng == U)[0]:
            m = mass.get((int(u), int(c)), 0)
            if weights[c] is None:
                weights[c], seen_from[c] = m, int(u)
            elif not _agree(weights[c], m, exact):
                raise CriterionViolation(
                    "objects in one class push forward different fiber weights",
                    {"objects": [L[seen_from[c]], L[u]], "class": L[_first(cls_of, c)],
                     "masses": [weights[c], m]})
    if exact:
        return _weight_array([Fraction(v) for v in weights])
    return np.array([float(v) for v in weights], dtype=np.float64)


def _first(cls_of, c):
    return int(np.nonzero(cls_of == c)[0][0])


def _agree(a, b, exact):
    if exact:
        return a == b
    return abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)
