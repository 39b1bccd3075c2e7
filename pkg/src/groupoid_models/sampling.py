"""Random partial morphisms out of pair groupoids, for property checks.

Three families, all Haar preserving for counting weights:

* restriction to a random sub-equivalence relation ``G_n -> K``;
* collapse of ``r`` disjoint copies of ``G_m`` inside ``G_n`` onto ``G_m``;
* a restriction followed by the quotient that glues those copies diagonally.
"""

from __future__ import annotations

import numpy as np

from .constructions import make_matrix_groupoid
from .groupoid import FiniteGroupoid
from .morphisms import PartialMorphism, principal_map, restriction_morphism
from .quotient import quotient_by_criterion

__all__ = [
    "random_sub_equivalence", "random_restriction", "random_copy_collapse",
    "random_copy_quotient", "random_partial_morphism_chain", "MORPHISM_FAMILIES",
]

MORPHISM_FAMILIES = ("restriction", "collapse", "quotient")


def _pair_index(n, i, j):
    return (i - 1) * n + (j - 1)


def random_sub_equivalence(n, rng):
    """Arrow mask of ``G_n`` for a random partition of a random nonempty set of points."""
    size = int(rng.integers(1, n + 1))
    pts = rng.permutation(np.arange(1, n + 1))[:size]
    cls = rng.integers(0, size, size=size)
    mask = np.zeros(n * n, dtype=bool)
    for a, ca in zip(pts, cls):
        for b, cb in zip(pts, cls):
            if ca == cb:
                mask[_pair_index(n, a, b)] = True
    return mask


def random_restriction(G: FiniteGroupoid, rng) -> PartialMorphism:
    n = int(round(np.sqrt(G.n_arrows)))
    return restriction_morphism(G, random_sub_equivalence(n, rng), "restriction")


def _random_copies(n, rng):
    """``r`` disjoint ordered blocks of ``m`` points of ``{1..n}``."""
    m = int(rng.integers(1, n + 1))
    r = int(rng.integers(1, n // m + 1))
    pts = rng.permutation(np.arange(1, n + 1))[: m * r]
    return m, [list(map(int, pts[c * m:(c + 1) * m])) for c in range(r)]


def random_copy_collapse(G: FiniteGroupoid, rng) -> PartialMorphism:
    """``G_n -> G_m`` sending each of ``r`` copies of ``G_m`` identically onto ``G_m``."""
    n = int(round(np.sqrt(G.n_arrows)))
    m, copies = _random_copies(n, rng)
    H = make_matrix_groupoid(m)
    omap, mask = {}, np.zeros(G.n_arrows, dtype=bool)
    for block in copies:
        for pos, a in enumerate(block, start=1):
            omap[(a, a)] = (pos, pos)
            for b in block:
                mask[_pair_index(n, a, b)] = True
    return principal_map(G, H, omap, mask, "collapse")


def random_copy_quotient(G: FiniteGroupoid, rng):
    """Restriction to ``r`` copies of ``G_m`` and the diagonal gluing quotient.

    Returns the two morphisms in order of application: ``G -> K`` and
    ``K -> K / ~``.
    """
    n = int(round(np.sqrt(G.n_arrows)))
    m, copies = _random_copies(n, rng)
    mask = np.zeros(G.n_arrows, dtype=bool)
    for block in copies:
        for a in block:
            for b in block:
                mask[_pair_index(n, a, b)] = True
    restr = restriction_morphism(G, mask, "restriction")
    blocks = []
    for i in range(m):
        for j in range(m):
            blocks.append([(block[i], block[j]) for block in copies])
    _, qmap = quotient_by_criterion(restr.codomain, blocks, name="glued")
    return restr, qmap


def random_partial_morphism_chain(G: FiniteGroupoid, rng, family=None):
    """A composable chain (order of application) starting at ``G``.

    ``family`` picks one of :data:`MORPHISM_FAMILIES`; by default it is
    drawn at random.  Collapse chains have length 2 (``G_n -> G_m -> G_l``),
    quotient chains are the restriction followed by the quotient, and
    restriction chains restrict twice.
    """
    if family is None:
        family = MORPHISM_FAMILIES[int(rng.integers(len(MORPHISM_FAMILIES)))]
    if family == "restriction":
        first = random_restriction(G, rng)
        K = first.codomain
        keep = np.zeros(K.n_arrows, dtype=bool)
        # restrict K further to a union of some of its orbits
        orbits = K.orbits
        chosen = [o for o in orbits if rng.random() < 0.6] or [orbits[0]]
        objs = {int(u) for o in chosen for u in o}
        for x in range(K.n_arrows):
            keep[x] = int(K.src[x]) in objs
        return [first, restriction_morphism(K, keep, "restriction")]
    if family == "collapse":
        first = random_copy_collapse(G, rng)
        return [first, random_copy_collapse(first.codomain, rng)]
    if family == "quotient":
        return list(random_copy_quotient(G, rng))
    raise ValueError(f"unknown family {family!r}")
