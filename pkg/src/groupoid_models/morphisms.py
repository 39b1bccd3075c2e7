"""Partial morphisms between finite groupoids and their induced maps.

A partial morphism ``G -> H`` is a subgroupoid ``K`` of ``G`` (a boolean mask)
together with a functor ``K -> H`` (an index array, -1 off ``K``).  When the
functor carries each weighted range fiber of ``K`` onto the corresponding
fiber measure of ``H``, pulling back along it and extending by zero is a
*-homomorphism ``C(H) -> C(G)``; see :func:`induced_map`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .checks import CheckResult, Report
from .config import TOL
from .errors import GroupoidModelsError, StructuralError
from .groupoid import (ConvolutionElement, FiniteGroupoid, _label_from_json, _label_id,
                       adjoint, convolve, indicator)

__all__ = [
    "PartialMorphism", "check_partial_morphism", "compose_partial", "induced_map",
    "verify_functor_laws", "verify_induced_homomorphism", "identity_morphism",
    "restriction_morphism", "principal_map", "morphism_to_json", "morphism_from_json",
]


@dataclass(frozen=True, eq=False)
class PartialMorphism:
    """Functor from the subgroupoid ``mask`` of ``domain`` into ``codomain``."""

    domain: FiniteGroupoid
    codomain: FiniteGroupoid
    mask: np.ndarray
    arrow_map: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.mask.setflags(write=False)
        self.arrow_map.setflags(write=False)

    @classmethod
    def from_dict(cls, domain, codomain, mapping, name=""):
        """Build from a ``{domain label: codomain label}`` mapping; its keys are ``K``."""
        mask = np.zeros(domain.n_arrows, dtype=bool)
        amap = np.full(domain.n_arrows, -1, dtype=np.int64)
        for a, b in mapping.items():
            i = domain.idx(a)
            mask[i] = True
            amap[i] = codomain.idx(b)
        return cls(domain, codomain, mask, amap, name)

    @property
    def domain_labels(self):
        return [self.domain.labels[i] for i in np.nonzero(self.mask)[0]]

    def __call__(self, label):
        j = self.arrow_map[self.domain.idx(label)]
        if j < 0:
            raise KeyError(f"{label!r} is outside the domain of definition")
        return self.codomain.labels[j]

    @property
    def is_surjective(self):
        hit = np.zeros(self.codomain.n_arrows, dtype=bool)
        hit[self.arrow_map[self.mask]] = True
        return bool(hit.all())

    @property
    def is_empty(self):
        return not self.mask.any()

    def __repr__(self):
        return (f"<PartialMorphism {self.name or ''} {self.domain.name or '?'} -> "
                f"{self.codomain.name or '?'}: |K|={int(self.mask.sum())}>")


def identity_morphism(G: FiniteGroupoid) -> PartialMorphism:
    return PartialMorphism(G, G, np.ones(G.n_arrows, dtype=bool),
                           np.arange(G.n_arrows, dtype=np.int64), "id")


def restriction_morphism(G: FiniteGroupoid, mask, name="") -> PartialMorphism:
    """Identity on the subgroupoid ``mask``, viewed as ``G -> K``.

    Its induced map is the inclusion of ``C(K)`` into ``C(G)`` by zero extension.
    """
    mask = np.asarray(mask, dtype=bool)
    K = G.restrict(mask, name=name or (G.name + "|K"))
    amap = np.full(G.n_arrows, -1, dtype=np.int64)
    amap[mask] = np.arange(int(mask.sum()))
    return PartialMorphism(G, K, mask.copy(), amap, name or "inclusion")


def principal_map(domain, codomain, object_map, mask=None, name="") -> PartialMorphism:
    """Partial morphism into a principal groupoid determined by an object map.

    ``object_map`` sends domain objects (labels) to codomain objects; an arrow
    ``x`` goes to the unique codomain arrow from the image of its source to the
    image of its range.  ``mask`` defaults to the arrows whose endpoints are
    both mapped.
    """
    if not codomain.is_principal:
        raise GroupoidModelsError("principal_map needs a principal codomain")
    between = {}
    for z in range(codomain.n_arrows):
        between[(int(codomain.rng[z]), int(codomain.src[z]))] = z
    omap = {domain.idx(a): codomain.idx(b) for a, b in object_map.items()}
    if mask is None:
        mask = np.array([int(domain.src[x]) in omap and int(domain.rng[x]) in omap
                         for x in range(domain.n_arrows)], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    amap = np.full(domain.n_arrows, -1, dtype=np.int64)
    for x in np.nonzero(mask)[0]:
        key = (omap[int(domain.rng[x])], omap[int(domain.src[x])])
        if key not in between:
            raise StructuralError("no codomain arrow between the image objects",
                                  (domain.labels[x],))
        amap[x] = between[key]
    return PartialMorphism(domain, codomain, mask, amap, name)


def check_partial_morphism(m: PartialMorphism, tol=None) -> Report:
    """Subgroupoid, functor and Haar-preservation checks.

    Haar preservation is tested atom by atom: for each object ``u`` of ``K``
    the pushforward of the weights on ``K`` intersected with the range fiber
    at ``u`` must equal the codomain weights on the fiber at the image of
    ``u``.  Exact weights are compared exactly, float weights to ``tol``.
    The witness is ``(u, image of u, codomain arrow, pushed mass, expected)``.
    """
    tol = TOL.haar if tol is None else tol
    G, H = m.domain, m.codomain
    L = G.labels
    mask, phi = m.mask, m.arrow_map
    checks = []
    title = f"check_partial_morphism {m.name}".strip()

    w = G.subgroupoid_mask(mask)
    checks.append(CheckResult.boolean("domain_subgroupoid", w is None, w))
    bad = np.nonzero(mask != (phi >= 0))[0]
    total = len(bad) == 0 and bool(np.all(phi[mask] < H.n_arrows))
    checks.append(CheckResult.boolean("map_total_on_domain", total,
                                      L[bad[0]] if len(bad) else None))
    if w is not None or not total:
        return Report(title, tuple(checks))

    K = np.nonzero(mask)[0]
    fx = phi[K]
    bad = np.nonzero((phi[G.src[K]] != H.src[fx]) | (phi[G.rng[K]] != H.rng[fx]))[0]
    checks.append(CheckResult.boolean("source_range", len(bad) == 0,
                                      L[K[bad[0]]] if len(bad) else None))
    units = G.objects[mask[G.objects]]
    bad = np.nonzero(H.src[phi[units]] != phi[units])[0]
    checks.append(CheckResult.boolean("units_to_units", len(bad) == 0,
                                      L[units[bad[0]]] if len(bad) else None))
    bad = np.nonzero(phi[G.inv[K]] != H.inv[fx])[0]
    checks.append(CheckResult.boolean("inverses", len(bad) == 0,
                                      L[K[bad[0]]] if len(bad) else None))
    sub = G.comp[np.ix_(K, K)]
    xi, yi = np.nonzero(sub >= 0)
    lhs = phi[sub[xi, yi]]
    rhs = H.comp[fx[xi], fx[yi]]
    bad = np.nonzero(lhs != rhs)[0]
    checks.append(CheckResult.boolean(
        "composition", len(bad) == 0,
        (L[K[xi[bad[0]]]], L[K[yi[bad[0]]]]) if len(bad) else None))
    checks.append(_haar_check(m, tol))
    return Report(title, tuple(checks))


def _haar_check(m, tol):
    G, H = m.domain, m.codomain
    mask, phi = m.mask, m.arrow_map
    exact = G.exact_weights or H.exact_weights
    wG = G.weights_object if exact else G.weights_float
    wH = H.weights_object if exact else H.weights_float
    pushed = {}
    for x in np.nonzero(mask)[0]:
        key = (int(G.rng[x]), int(phi[x]))
        pushed[key] = pushed.get(key, 0) + wG[x]
    worst, witness = 0.0, None
    for u in G.objects[mask[G.objects]]:
        v = int(phi[u])
        for z in H.range_fiber(v):
            got = pushed.get((int(u), int(z)), 0)
            want = wH[z]
            if exact:
                err = abs(Fraction(got) - Fraction(want)) if got != want else 0
            else:
                err = abs(got - want) / max(abs(want), 1e-300)
            if err > worst or (witness is None and err > 0):
                worst = float(err)
                witness = (G.labels[u], H.labels[v], H.labels[z], got, want)
    if exact:
        return CheckResult.numeric("haar_preserving", worst, 0.0, witness,
                                   "exact pushforward of fiber weights")
    return CheckResult.numeric("haar_preserving", worst, tol, witness,
                               "relative pushforward error per atom")


def compose_partial(outer: PartialMorphism, inner: PartialMorphism) -> PartialMorphism:
    """``outer o inner`` on ``{x in K_inner : inner(x) in K_outer}``."""
    if not (inner.codomain is outer.domain or inner.codomain.same_structure(outer.domain)):
        raise GroupoidModelsError("inner codomain is not the outer domain")
    phi = inner.arrow_map
    mask = inner.mask.copy()
    mask[mask] = outer.mask[phi[mask]]
    amap = np.full(inner.domain.n_arrows, -1, dtype=np.int64)
    amap[mask] = outer.arrow_map[phi[mask]]
    name = f"{outer.name or '?'}.{inner.name or '?'}"
    return PartialMorphism(inner.domain, outer.codomain, mask, amap, name)


def induced_map(m: PartialMorphism, f: ConvolutionElement) -> ConvolutionElement:
    """Pull ``f`` back along the arrow map and extend by zero off the domain."""
    if not (f.parent is m.codomain or f.parent.same_structure(m.codomain)):
        raise GroupoidModelsError("element does not live on the codomain")
    c = f.coeffs
    out = np.zeros(m.domain.n_arrows, dtype=c.dtype)
    if c.dtype == object:
        out[:] = 0
    out[m.mask] = c[m.arrow_map[m.mask]]
    return ConvolutionElement(m.domain, out)


def _basis(G, exact):
    return [indicator(G, lab, exact=exact) for lab in G.labels]


def verify_induced_homomorphism(m: PartialMorphism, samples, pairs=None) -> Report:
    """Exact multiplicativity and *-preservation of the induced map.

    Multiplicativity is checked on ``pairs`` (a list of element pairs) when
    given, otherwise on every ordered pair drawn from ``samples``.
    """
    samples = list(samples)
    if pairs is None:
        pairs = [(f, g) for f in samples for g in samples]
        labels = [(i, j) for i in range(len(samples)) for j in range(len(samples))]
    else:
        pairs = list(pairs)
        labels = list(range(len(pairs)))
    worst_mul = worst_adj = 0.0
    wit_mul = wit_adj = None
    for i, f in enumerate(samples + [f for f, _ in pairs]):
        d = induced_map(m, adjoint(f)).coeffs - adjoint(induced_map(m, f)).coeffs
        e = float(np.max(np.abs(d.astype(complex)), initial=0.0))
        if e > worst_adj:
            worst_adj, wit_adj = e, i
    for lab, (f, g) in zip(labels, pairs):
        d = induced_map(m, convolve(f, g)).coeffs - convolve(induced_map(m, f),
                                                             induced_map(m, g)).coeffs
        e = float(np.max(np.abs(d.astype(complex)), initial=0.0))
        if e > worst_mul:
            worst_mul, wit_mul = e, lab
    return Report(f"induced homomorphism {m.name}".strip(), (
        CheckResult.numeric("multiplicative", worst_mul, 0.0, wit_mul),
        CheckResult.numeric("star_preserving", worst_adj, 0.0, wit_adj),
    ))


def verify_functor_laws(chain, samples=None, rng=None, n_random=4) -> Report:
    """Check ``(psi o phi)^* = phi^* o psi^*`` for every contiguous sub-chain.

    ``chain`` is listed in the order of application, so ``chain[i + 1].domain``
    is ``chain[i].codomain``.  Each law is tested on the indicator basis of the
    last codomain plus ``samples`` (a dict from codomain index to elements, or
    ``None``) and ``n_random`` Gaussian-integer elements drawn from ``rng``.
    Comparisons are exact.
    """
    from .groupoid import random_element

    chain = list(chain)
    for a, b in zip(chain, chain[1:]):
        if not (a.codomain is b.domain or a.codomain.same_structure(b.domain)):
            raise GroupoidModelsError("chain is not composable")
    if rng is None:
        rng = np.random.default_rng(0)
    checks = []
    worst, witness = 0.0, None
    for i in range(len(chain)):
        comp = chain[i]
        for j in range(i, len(chain)):
            if j > i:
                comp = compose_partial(chain[j], comp)
            tgt = chain[j].codomain
            elems = _basis(tgt, exact=False)
            elems += [random_element(tgt, rng, integer=True) for _ in range(n_random)]
            if samples is not None:
                elems += list(samples.get(j, []))
            for f in elems:
                stepwise = f
                for k in range(j, i - 1, -1):
                    stepwise = induced_map(chain[k], stepwise)
                direct = induced_map(comp, f)
                e = float(np.max(np.abs((direct.coeffs - stepwise.coeffs).astype(complex)),
                                 initial=0.0))
                if e > worst:
                    worst, witness = e, (i, j)
            checks.append(CheckResult.boolean(f"valid_composite[{i}..{j}]",
                                              check_partial_morphism(comp).passed, (i, j)))
    checks.insert(0, CheckResult.numeric("functor_law", worst, 0.0, witness,
                                         "max |(psi o phi)^* f - phi^* psi^* f| over sub-chains"))
    return Report("verify_functor_laws", tuple(checks))


def morphism_to_json(m: PartialMorphism) -> dict:
    L, LH = m.domain.labels, m.codomain.labels
    K = np.nonzero(m.mask)[0]
    return {
        "domain_id": m.domain.name,
        "codomain_id": m.codomain.name,
        "K": [_label_id(L[x]) for x in K],
        "map": {_label_id(L[x]): _label_id(LH[m.arrow_map[x]]) for x in K},
        "name": m.name,
    }


def morphism_from_json(doc, domain: FiniteGroupoid, codomain: FiniteGroupoid) -> PartialMorphism:
    import json

    if isinstance(doc, str):
        doc = json.loads(doc)
    parse = lambda s: _label_from_json(json.loads(s))  # noqa: E731
    mapping = {parse(k): parse(v) for k, v in doc["map"].items()}
    if {parse(k) for k in doc["K"]} != set(mapping):
        raise StructuralError("K and the map keys disagree")
    return PartialMorphism.from_dict(domain, codomain, mapping, doc.get("name", ""))

