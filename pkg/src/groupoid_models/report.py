"""Verification suites, report documents and their CSV/SVG side outputs.

Each suite runs a fixed battery of checks from a seeded generator and
returns a :class:`SuiteResult`.  Report documents contain no timings or
host details, so two runs with the same configuration serialize to the same
bytes.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .builders import (
    build_bonding, build_xi_paths, build_xi_paths_rj, compose_path_families,
    jiang_su_chain_params, razak_chain_params, verify_bonding,
)
from .checks import CheckResult, Report, jsonable
from .config import DEFAULTS, TOL
from .constructions import (
    make_cyclic_group_groupoid, make_finite_dim_groupoid, make_matrix_groupoid,
    make_uhf_system, make_unit_projection, make_unit_space,
)
from .errors import CriterionViolation, GroupoidModelsError, StructuralError
from .gelfand import (
    FiniteSpace, PartialMap, exhaustive_round_trip, hom_compose, hom_to_partial_map,
    partial_map_to_hom, compose_partial_maps, random_partial_map,
)
from .groupoid import (
    FiniteGroupoid, adjoint, adjoint_twisted, coboundary, cocycle_from_function,
    cocycle_product, convolve, convolve_twisted, disjoint_union, element, i_norm, indicator,
    product_groupoid, random_element, reduced_norm, tensor, to_matrix, trivial_cocycle,
    validate_cocycle, validate_groupoid,
)
from .interval import op_norm, random_interval_element
from .limits import (
    InductiveSystemTruncation, binary_cantor_piece_mask, coherence_report, enumerate_threads,
    glue_haar_weights, make_binary_cantor_system, push_forward, restrict_weights,
)
from .morphisms import (
    PartialMorphism, check_partial_morphism, induced_map, verify_functor_laws,
    verify_induced_homomorphism,
)
from .quotient import quotient_by_criterion
from .sampling import MORPHISM_FAMILIES, random_partial_morphism_chain

__all__ = [
    "SuiteConfig", "SuiteResult", "SUITES", "run_suite", "dumps", "write_outputs",
    "xi_svg", "matrix_unit_report", "random_matrix_fidelity", "tensor_fidelity_report",
    "kronecker_isomorphism", "norm_report", "cocycle_report", "quotient_report",
    "induced_map_report", "unit_projection_report", "uhf_report", "jiang_su_report",
    "razak_jacelon_report", "gelfand_report", "threads_report", "gluing_report",
    "REPORT_SCHEMA_VERSION", "SCHEMA_NAMES", "load_schema",
]

REPORT_SCHEMA_VERSION = 1
SCHEMA_NAMES = ("report", "groupoid", "partial_morphism", "interval_element",
                "interval_algebra", "partial_map")


def load_schema(name: str) -> dict:
    """JSON Schema shipped with the package for one of :data:`SCHEMA_NAMES`."""
    if name not in SCHEMA_NAMES:
        raise GroupoidModelsError(f"unknown schema {name!r}; choose from {SCHEMA_NAMES}")
    text = resources.files(__package__).joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class SuiteConfig:
    """Knobs shared by the suites; unused fields are ignored by a given suite.

    ``stages`` counts algebras (so ``stages - 1`` bondings).  ``grid_log2``
    is the grid of the last stage; earlier stages are one level finer per
    bonding.  ``samples`` scales the random checks.
    """

    seed: int = DEFAULTS.seed
    grid_log2: int = DEFAULTS.grid_log2
    stages: int = 2
    start: tuple = None
    samples: int = 1000
    max_size: int = 6
    choice: int = 0

    def __post_init__(self):
        if self.stages < 2:
            raise ValueError("stages must be at least 2")
        if self.grid_log2 < 1:
            raise ValueError("grid_log2 must be positive")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    def to_dict(self):
        return jsonable(asdict(self))


@dataclass
class SuiteResult:
    name: str
    config: SuiteConfig
    reports: list
    data: dict = field(default_factory=dict)
    csv_rows: list = field(default_factory=list)
    svg: str | None = None

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    def to_dict(self):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "suite": self.name,
            "config": self.config.to_dict(),
            "passed": self.passed,
            "tolerances": jsonable(asdict(TOL)),
            "reports": [r.to_dict() for r in self.reports],
            "data": jsonable(self.data),
        }

    def summary(self):
        lines = [f"suite {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for r in self.reports:
            n_bad = len(r.failures())
            lines.append(f"  {'pass' if r.passed else 'FAIL'}  {r.title}"
                         f" ({len(r.checks) - n_bad}/{len(r.checks)} checks)")
            for c in r.failures():
                lines.append(f"      [FAIL] {c.name} err={c.max_error:.3g} tol={c.tolerance:.3g}")
        return "\n".join(lines)


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_outputs(result: SuiteResult, report=None, csv_path=None, svg_path=None):
    """Write the JSON report and the optional CSV table and SVG figure."""
    if report:
        with open(report, "w", encoding="utf-8") as fh:
            fh.write(dumps(result.to_dict()))
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(result.csv_rows))
    if svg_path:
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(result.svg or xi_svg([]))


def csv_text(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _rng(config, salt):
    return np.random.default_rng([config.seed, salt])


def _max_abs(a):
    return float(np.max(np.abs(np.asarray(a, dtype=complex)), initial=0.0))


def _rel(a, b):
    return _max_abs(np.asarray(a) - np.asarray(b)) / max(1.0, _max_abs(b))


# -- core ------------------------------------------------------------------------------

def matrix_unit_report(sizes=(2, 3, 5)) -> Report:
    """Products and adjoints of all indicator pairs against matrix units, in integers."""
    checks = []
    for n in sizes:
        G = make_matrix_groupoid(n)
        basis = {lab: indicator(G, lab, exact=True) for lab in G.labels}
        bad = None
        for (i, j), a in basis.items():
            star = adjoint(a)
            if not np.all(star.coeffs == basis[(j, i)].coeffs):
                bad = bad or {"adjoint": [i, j]}
            for (k, l), b in basis.items():
                prod = convolve(a, b).coeffs
                want = basis[(i, l)].coeffs if j == k else np.zeros(n * n, dtype=object)
                if not np.all(prod == want):
                    bad = bad or {"product": [[i, j], [k, l]]}
        checks.append(CheckResult.boolean(f"matrix_units[G{n}]", bad is None, bad,
                                          f"{n ** 4} exact products"))
    return Report("matrix units", tuple(checks))


def random_matrix_fidelity(sizes, n_pairs, rng) -> Report:
    """Convolution and adjoint against matrix products on random float pairs."""
    checks = []
    for n in sizes:
        G = make_matrix_groupoid(n)
        worst_p = worst_a = 0.0
        for _ in range(n_pairs):
            f, g = random_element(G, rng), random_element(G, rng)
            F, Gm = to_matrix(f), to_matrix(g)
            worst_p = max(worst_p, _rel(to_matrix(convolve(f, g)), F @ Gm))
            worst_a = max(worst_a, _rel(to_matrix(adjoint(f)), F.conj().T))
        checks.append(CheckResult.numeric(f"product_vs_matrix[G{n}]", worst_p, TOL.matrix,
                                          detail=f"{n_pairs} random pairs"))
        checks.append(CheckResult.numeric(f"adjoint_vs_matrix[G{n}]", worst_a, TOL.matrix))
    return Report("random matrix fidelity", tuple(checks))


def kronecker_isomorphism(G: FiniteGroupoid, H: FiniteGroupoid, m: int):
    """Arrow map ``((i, j), (k, l)) -> ((i-1) m + k, (j-1) m + l)`` from ``G`` to ``H``.

    Returns the index array and a report showing it is a structure and
    weight preserving bijection.
    """
    def target(lab):
        (i, j), (k, l) = lab
        return ((i - 1) * m + k, (j - 1) * m + l)

    phi = np.array([H.idx(target(lab)) for lab in G.labels])
    bij = len(set(phi.tolist())) == H.n_arrows == G.n_arrows
    ok_src = bool(np.all(phi[G.src] == H.src[phi]))
    ok_rng = bool(np.all(phi[G.rng] == H.rng[phi]))
    ok_inv = bool(np.all(phi[G.inv] == H.inv[phi]))
    mapped = np.where(G.comp >= 0, phi[np.where(G.comp >= 0, G.comp, 0)], -1)
    ok_comp = bool(np.array_equal(mapped, H.comp[np.ix_(phi, phi)]))
    ok_w = bool(np.all(G.weights_float == H.weights_float[phi]))
    rep = Report(f"isomorphism {G.name} -> {H.name}", (
        CheckResult.boolean("bijective", bij),
        CheckResult.boolean("preserves_source_range", ok_src and ok_rng),
        CheckResult.boolean("preserves_inverse", ok_inv),
        CheckResult.boolean("preserves_composition", ok_comp),
        CheckResult.boolean("preserves_weights", ok_w),
        CheckResult.boolean("single_orbit", len(G.orbits) == 1, len(G.orbits)),
    ))
    return phi, rep


def tensor_fidelity_report(n_pairs, rng) -> Report:
    """``G_2 x G_3`` against Kronecker products, and its isomorphism with ``G_6``."""
    G2, G3 = make_matrix_groupoid(2), make_matrix_groupoid(3)
    P = product_groupoid(G2, G3, name="G2xG3")
    worst_k = worst_p = 0.0
    for _ in range(n_pairs):
        a, c = random_element(G2, rng), random_element(G2, rng)
        b, d = random_element(G3, rng), random_element(G3, rng)
        ab, cd = tensor(a, b, parent=P), tensor(c, d, parent=P)
        want = np.kron(to_matrix(a) @ to_matrix(c), to_matrix(b) @ to_matrix(d))
        worst_k = max(worst_k, _rel(to_matrix(convolve(ab, cd)), want))
        f, g = random_element(P, rng), random_element(P, rng)
        worst_p = max(worst_p, _rel(to_matrix(convolve(f, g)), to_matrix(f) @ to_matrix(g)))
    checks = [
        CheckResult.numeric("simple_tensors_vs_kron", worst_k, TOL.matrix,
                            detail=f"{n_pairs} random pairs"),
        CheckResult.numeric("general_pairs_vs_matrix", worst_p, TOL.matrix),
        CheckResult.boolean("arrow_count_36", P.n_arrows == 36, P.n_arrows),
    ]
    _, iso = kronecker_isomorphism(P, make_matrix_groupoid(6), 3)
    return Report("tensor fidelity G2xG3", tuple(checks)).extend(iso, "iso_G6.")


def _norm_groupoids():
    G2, G3 = make_matrix_groupoid(2), make_matrix_groupoid(3)
    return [G2, G3, product_groupoid(G2, G3, name="G2xG3")]


def norm_report(n_samples, rng, table_rows=5):
    """Norm sandwich, matrix operator norm and C*-identity; also returns CSV rows."""
    checks, rows = [], []
    for G in _norm_groupoids():
        sandwich = match = cstar = 0.0
        for s in range(n_samples):
            f = random_element(G, rng)
            r, i = reduced_norm(f), i_norm(f)
            M = op_norm(to_matrix(f))
            ff = reduced_norm(convolve(adjoint(f), f))
            sandwich = max(sandwich, (r - i) / i)
            match = max(match, abs(r - M) / M)
            cstar = max(cstar, abs(ff - r * r) / (r * r))
            if s < table_rows:
                rows.append({"groupoid": G.name, "sample": s, "i_norm": i, "reduced_norm": r,
                             "matrix_norm": M, "cstar_rel_error": abs(ff - r * r) / (r * r)})
        # a ratio at or below 0 is the inequality; allow rounding in the last bits
        checks.append(CheckResult.numeric(f"reduced_le_i_norm[{G.name}]", max(sandwich, 0.0),
                                          TOL.matrix, detail="max (reduced - I) / I"))
        checks.append(CheckResult.numeric(f"reduced_eq_matrix_norm[{G.name}]", match, TOL.norm))
        checks.append(CheckResult.numeric(f"cstar_identity[{G.name}]", cstar, TOL.tol))
    return Report(f"norms ({n_samples} samples per groupoid)", tuple(checks)), rows


def small_groupoid_catalog():
    """Groupoids with at most 64 arrows used for the exhaustive checks."""
    G2, G3 = make_matrix_groupoid(2), make_matrix_groupoid(3)
    cat = [make_unit_space(["u"], "point")]
    cat += [make_matrix_groupoid(n) for n in range(1, 9)]
    cat += [make_cyclic_group_groupoid(n) for n in (2, 3, 4, 6, 8)]
    cat += [make_finite_dim_groupoid([1, 2, 3]), product_groupoid(G2, G3, name="G2xG3"),
            product_groupoid(G2, G2, G2, name="G2^3"),
            product_groupoid(make_cyclic_group_groupoid(2), G3, name="Z2xG3"),
            disjoint_union(G2, make_cyclic_group_groupoid(3), name="G2+Z3")]
    return [G for G in cat if G.n_arrows <= 64]


def _sign_cocycle():
    Z2 = make_cyclic_group_groupoid(2)
    return Z2, cocycle_from_function(Z2, lambda x, y: -1.0 if x == 1 and y == 1 else 1.0)


def cocycle_report(rng, n_pairs=50) -> Report:
    """Trivial twist, cocycle identity across the catalog, and the sign cocycle."""
    checks = []
    bit_bad = None
    for G in [make_matrix_groupoid(3), make_cyclic_group_groupoid(4),
              product_groupoid(make_matrix_groupoid(2), make_matrix_groupoid(3))]:
        sig = trivial_cocycle(G)
        for _ in range(n_pairs):
            f, g = random_element(G, rng), random_element(G, rng)
            if not np.array_equal(convolve_twisted(f, g, sig).coeffs, convolve(f, g).coeffs):
                bit_bad = bit_bad or G.name
            if not np.array_equal(adjoint_twisted(f, sig).coeffs, adjoint(f).coeffs):
                bit_bad = bit_bad or G.name
    checks.append(CheckResult.boolean("trivial_twist_bitwise", bit_bad is None, bit_bad))

    worst, wit, assoc_bad, n_groupoids = 0.0, None, None, 0
    for G in small_groupoid_catalog():
        n_groupoids += 1
        if kernels.associativity_violation(G.comp) is not None:
            assoc_bad = assoc_bad or G.name
        b = np.exp(2j * np.pi * rng.random(G.n_arrows))
        sig = coboundary(G, b)
        if G.name == "Z/2":
            sig = cocycle_product(sig, _sign_cocycle()[1])
        for s in (trivial_cocycle(G), sig):
            rep = validate_cocycle(s)
            err = max(c.max_error for c in rep.checks)
            if err > worst:
                worst, wit = err, G.name
    checks.append(CheckResult.boolean("associativity_all_triples", assoc_bad is None, assoc_bad,
                                      f"{n_groupoids} groupoids with at most 64 arrows"))
    checks.append(CheckResult.numeric("cocycle_identity_all_triples", worst, TOL.tol, wit,
                                      f"{n_groupoids} groupoids, trivial and twisted"))

    Z2, sign = _sign_cocycle()
    sq = convolve_twisted(indicator(Z2, 1), indicator(Z2, 1), sign)
    err = _max_abs(sq.coeffs - (-indicator(Z2, 0)).coeffs)
    checks.append(CheckResult.numeric("sign_cocycle_square", err, 0.0,
                                      detail="chi_g * chi_g = -chi_e on Z/2"))
    return Report("cocycles", tuple(checks))


def _doubled_g2(weight_second=1):
    G2 = make_matrix_groupoid(2)
    second = G2 if weight_second == 1 else G2.with_weights(
        {lab: Fraction(weight_second) for lab in G2.labels})
    return disjoint_union(G2, second, name="G2+G2")


def quotient_report() -> Report:
    """Diagonal gluing of ``G2 + G2`` and a perturbed-weight counterexample."""
    checks = []
    G = _doubled_g2()
    blocks = [[(0, lab), (1, lab)] for lab in make_matrix_groupoid(2).labels]
    Q, q = quotient_by_criterion(G, blocks, name="glued")
    checks.append(CheckResult.boolean("quotient_valid", validate_groupoid(Q).passed))
    checks.append(CheckResult.boolean("quotient_map_haar_preserving",
                                      check_partial_morphism(q).passed))
    bad = None
    for lab in Q.labels:
        img = induced_map(q, indicator(Q, lab, exact=True))
        _, (i, j) = lab
        want = element(G, {(0, (i, j)): 1, (1, (i, j)): 1}).coeffs
        if not np.array_equal(img.coeffs.astype(complex), want):
            bad = bad or lab
    checks.append(CheckResult.boolean("image_is_diagonal", bad is None, bad,
                                      "chi_(i,j) -> chi_(i,j) (+) chi_(i,j)"))
    triv, _ = quotient_by_criterion(G, [])
    checks.append(CheckResult.boolean("trivial_partition_isomorphic",
                                      triv.same_structure(G) and triv.labels == G.labels))

    H = _doubled_g2(weight_second=2)
    try:
        quotient_by_criterion(H, blocks)
        checks.append(CheckResult.boolean("perturbed_weights_rejected", False,
                                          "quotient was accepted"))
    except CriterionViolation as exc:
        checks.append(CheckResult.boolean("perturbed_weights_rejected", exc.witness is not None,
                                          detail=f"witness {jsonable(exc.witness)}"))
    try:
        quotient_by_criterion(make_matrix_groupoid(2), [[(1, 1), (1, 2)]])
        ok = False
    except StructuralError:
        ok = True
    checks.append(CheckResult.boolean("incompatible_partition_rejected", ok))
    return Report("quotient criterion", tuple(checks))


def _core(config):
    rng = _rng(config, 1)
    n = config.samples
    reports = [
        matrix_unit_report(),
        random_matrix_fidelity((2, 3, 5), 10 * n, rng),
        tensor_fidelity_report(n, rng),
    ]
    norms, rows = norm_report(n, rng)
    reports += [norms, cocycle_report(rng), quotient_report()]
    return SuiteResult("core", config, reports, csv_rows=rows)


# -- morphisms ---------------------------------------------------------------------------

def _integer_pairs(G, rng, n):
    return [(random_element(G, rng, integer=True), random_element(G, rng, integer=True))
            for _ in range(n)]


def induced_map_report(n_morphisms, n_pairs, rng, base=6):
    """Random partial morphisms out of ``G_base``: validity, exact homomorphism, functor law."""
    G = make_matrix_groupoid(base)
    valid = hom = star = law = 0
    worst_hom = worst_law = 0.0
    wit = None
    fam_count = {f: 0 for f in MORPHISM_FAMILIES}
    seen = 0
    while seen < n_morphisms:
        fam = MORPHISM_FAMILIES[(seen // 2) % len(MORPHISM_FAMILIES)]
        chain = random_partial_morphism_chain(G, rng, fam)
        for m in chain[: n_morphisms - seen]:
            fam_count[fam] += 1
            seen += 1
            valid += check_partial_morphism(m).passed
            rep = verify_induced_homomorphism(m, [], _integer_pairs(m.codomain, rng, n_pairs))
            if rep["multiplicative"].max_error > worst_hom:
                worst_hom, wit = rep["multiplicative"].max_error, m.name
            worst_hom = max(worst_hom, rep["star_preserving"].max_error)
            hom += rep["multiplicative"].passed
            star += rep["star_preserving"].passed
        fl = verify_functor_laws(chain, rng=rng)
        worst_law = max(worst_law, fl["functor_law"].max_error)
        law += fl.passed
    checks = (
        CheckResult.boolean("morphisms_valid", valid == seen, seen - valid,
                            f"{seen} morphisms: {fam_count}"),
        CheckResult.numeric("induced_homomorphism", worst_hom, 0.0, wit,
                            f"{n_pairs} Gaussian-integer pairs per morphism, exact"),
        CheckResult.numeric("functor_law", worst_law, 0.0),
    )
    return Report(f"induced maps out of G{base}", checks)


def unit_projection_report() -> Report:
    """``G2 x G3 -> G3`` on ``units(G2) x G3`` induces ``a -> 1 (x) a``; the full projection is not Haar preserving."""
    G2, G3 = make_matrix_groupoid(2), make_matrix_groupoid(3)
    p = make_unit_projection(G2, G3)
    checks = [CheckResult.boolean("restricted_projection_valid", check_partial_morphism(p).passed)]
    bad = None
    for lab in G3.labels:
        a = indicator(G3, lab, exact=True)
        img = to_matrix(induced_map(p, a))
        want = np.kron(np.eye(2, dtype=int), to_matrix(a).astype(int))
        if not np.array_equal(img.astype(int), want):
            bad = bad or lab
    checks.append(CheckResult.boolean("a_to_one_tensor_a", bad is None, bad,
                                      "all 9 basis elements, exact"))
    full = PartialMorphism(p.domain, G3, np.ones(p.domain.n_arrows, dtype=bool),
                           np.arange(p.domain.n_arrows) % G3.n_arrows, "full-projection")
    rep = check_partial_morphism(full)
    checks.append(CheckResult.boolean("full_projection_not_haar_preserving", not rep.passed,
                                      detail=", ".join(c.name for c in rep.failures())))
    return Report("unit projection G2xG3 -> G3", tuple(checks))


def surjective_norm_report(rng, n_samples=50) -> Report:
    """Surjective morphisms preserve the I-norm and the reduced norm."""
    G = make_matrix_groupoid(4)
    _, q = quotient_by_criterion(_doubled_g2(), [[(0, lab), (1, lab)]
                                                 for lab in make_matrix_groupoid(2).labels])
    ident = PartialMorphism(G, G, np.ones(G.n_arrows, dtype=bool), np.arange(G.n_arrows), "id")
    worst_i = worst_r = 0.0
    for m in (q, ident):
        for _ in range(n_samples):
            f = random_element(m.codomain, rng)
            g = induced_map(m, f)
            worst_i = max(worst_i, abs(i_norm(g) - i_norm(f)) / i_norm(f))
            worst_r = max(worst_r, abs(reduced_norm(g) - reduced_norm(f)) / reduced_norm(f))
    return Report("surjective morphisms", (
        CheckResult.numeric("i_norm_preserved", worst_i, TOL.tol),
        CheckResult.numeric("reduced_norm_preserved", worst_r, TOL.tol),
    ))


def _morphisms(config):
    rng = _rng(config, 2)
    reports = [induced_map_report(50, min(config.samples, 100), rng),
               unit_projection_report(), surjective_norm_report(rng)]
    return SuiteResult("morphisms", config, reports)


# -- UHF ---------------------------------------------------------------------------------

def _normalized_trace(f):
    """Exact normalized trace of an integer element: mean of the unit coefficients."""
    G = f.parent
    return Fraction(int(sum(f.coeffs[u] for u in G.objects)), len(G.objects))


def _unit_element(G):
    coeffs = np.zeros(G.n_arrows, dtype=object)
    coeffs[G.objects] = 1
    return element(G, coeffs)


def uhf_report(factors, rng):
    """Unital, trace preserving and coherent bondings of a UHF truncation, exact."""
    system = make_uhf_system(factors)
    sys = InductiveSystemTruncation.from_groupoid_system(system)
    checks = []
    unital_bad = trace_bad = None
    for k, b in enumerate(system.bondings):
        small, big = b.codomain, b.domain
        if not np.array_equal(induced_map(b, _unit_element(small)).coeffs,
                              _unit_element(big).coeffs):
            unital_bad = unital_bad or k
        for lab in small.labels:
            a = indicator(small, lab, exact=True)
            if _normalized_trace(induced_map(b, a)) != _normalized_trace(a):
                trace_bad = trace_bad or (k, lab)
        hom = verify_induced_homomorphism(b, [indicator(small, lab)
                                              for lab in small.labels])
        checks += [CheckResult(f"bonding[{k}].{c.name}", c.passed, c.max_error, c.tolerance,
                               c.witness, c.detail) for c in hom.checks]
    checks.append(CheckResult.boolean("unital", unital_bad is None, unital_bad))
    checks.append(CheckResult.boolean("trace_preserving", trace_bad is None, trace_bad,
                                      "normalized traces of basis elements, exact"))
    samples = {i: [indicator(s, lab, exact=True) for lab in s.labels]
               + [random_element(s, rng, integer=True) for _ in range(3)]
               for i, s in enumerate(sys.stages)}
    rep = Report(f"UHF {list(factors)}", tuple(checks))
    rep = rep.extend(coherence_report(sys, samples))
    chain = list(reversed(system.bondings))
    rep = rep.extend(verify_functor_laws(chain, rng=rng), "functor.")
    data = {"factors": list(factors), "depth": sys.depth,
            "stage_sizes": [len(s.objects) for s in sys.stages]}
    return rep, data


def _uhf(config):
    factors = tuple(config.start) if config.start else (2, 3, 2)
    rep, data = uhf_report(factors, _rng(config, 3))
    return SuiteResult("uhf", config, [rep], data)


# -- interval chains -------------------------------------------------------------------

def _chain_grids(config):
    K = config.stages - 1  # number of bondings
    return [config.grid_log2 + (K - 1 - i) for i in range(K)]


def _build_chain(params_list, grids, rng, members_dense=20, members_structured=2):
    bonds, source, elements = [], None, None
    for params, s in zip(params_list, grids):
        dense = params.n_target <= DEFAULTS.dense_limit
        n_members = members_dense if dense else members_structured
        n_pairs = 2 if dense else 1
        b = build_bonding(params, s, rng, verify=False, source=source)
        if elements is not None:
            elements = [bonds[-1].apply(f) for f in elements]
        b.report = verify_bonding(b, rng, n_pairs, n_members, source_elements=elements)
        bonds.append(b)
        if not b.is_dense:
            break
        source = b.target
        if elements is None:
            elements = [random_interval_element(b.source, rng)
                        for _ in range(max(members_structured, 2))]
    return bonds


def _chain_reports(kind, params_list, first_two, bonds, rng):
    """Parameter, path, bonding and coherence reports of a built chain.

    ``first_two`` holds the parameters of the first two bondings, used for
    the composite path check even when only one bonding is built.
    """
    build = build_xi_paths if kind == "jiang-su" else build_xi_paths_rj
    reports = []
    for i, p in enumerate(params_list):
        reports.append(Report(f"stage {i} parameters {p.to_dict()}", p.invariants().checks))
    fams = [build(p) for p in params_list]
    f0, f1 = (build(p) for p in first_two[:2])
    comp = compose_path_families(f0, f1)
    reports.append(Report("two-stage composite paths", (
        CheckResult.numeric("composite_spread", float(comp.max_spread),
                            0.25 + 1e-12, None, f"max spread {comp.max_spread}"),
        CheckResult.boolean("composite_count", comp.k == f0.k * f1.k),
        CheckResult.boolean("composite_covers", comp.covered() == [(0, 1)], comp.covered()),
    )))
    for b in bonds:
        reports.append(b.report)
    if len(bonds) < len(params_list):
        reports.append(Report("chain truncated", (CheckResult.boolean(
            "all_bondings_built", False, len(bonds),
            "a structured stage cannot be the source of a further bonding"),)))
    if len(bonds) >= 2:
        sys = InductiveSystemTruncation.from_bondings(bonds, kind)
        samples = {0: [random_interval_element(bonds[0].source, rng)]}
        reports.append(coherence_report(sys, samples))
    data = {
        "trace_diagnostic": _trace_diagnostic(bonds[0], rng) if bonds else [],
        "stages": [p.to_dict() for p in params_list],
        "xi": [f.to_dict() for f in fams],
        "bondings": [b.to_dict() for b in bonds],
        "grids": [b.target.grid_log2 for b in bonds],
        "algebras": [bonds[0].source.name] + [b.target.name for b in bonds] if bonds else [],
    }
    return reports, data, fams


def _trace_diagnostic(bond, rng):
    """Normalized traces of ``phi(f)(t)`` and of the blocks feeding it, at t = 0, 1/2, 1.

    Informational only: conjugation keeps traces, so the two columns agree
    up to rounding whenever the bonding is built correctly.
    """
    f = random_interval_element(bond.source, rng)
    Nt = 2 ** bond.target.grid_log2
    rows = []
    for j in (0, Nt // 2, Nt):
        blocks = bond.block_values(f, j)
        block_avg = complex(np.trace(blocks, axis1=1, axis2=2).mean()) / bond.n_source
        if bond.is_dense:
            image = complex(np.trace(bond.value_at(f, j))) / bond.n_target
        else:
            image = None
        rows.append({"t": str(Fraction(j, Nt)), "image_trace": image,
                     "block_trace_average": block_avg})
    return rows


def jiang_su_report(config):
    start = tuple(config.start) if config.start else (2, 3)
    params = jiang_su_chain_params(config.stages, start, config.choice)
    extra = jiang_su_chain_params(3, start, config.choice)
    rng = _rng(config, 4)
    bonds = _build_chain(params, _chain_grids(config), rng)
    reports, data, fams = _chain_reports("jiang-su", params, extra, bonds, rng)
    return SuiteResult("jiang-su", config, reports, data,
                       csv_rows=_param_rows(params), svg=xi_svg(_svg_panels(params, fams)))


def razak_jacelon_report(config):
    start = tuple(config.start) if config.start else (1, 2)
    params = razak_chain_params(config.stages, start)
    extra = razak_chain_params(3, start)
    rng = _rng(config, 5)
    bonds = _build_chain(params, _chain_grids(config), rng)
    reports, data, fams = _chain_reports("razak-jacelon", params, extra, bonds, rng)
    return SuiteResult("razak-jacelon", config, reports, data,
                       csv_rows=_param_rows(params), svg=xi_svg(_svg_panels(params, fams)))


def _param_rows(params_list):
    return [{"stage": i, **p.to_dict()} for i, p in enumerate(params_list)]


def _svg_panels(params_list, fams):
    return [(f"stage {i}: {p.n_source} -> {p.n_target}", f) for i, (p, f)
            in enumerate(zip(params_list, fams))]


def xi_svg(panels, width=240, height=240, pad=30) -> str:
    """Graphs of the path maps of each stage, one panel per stage.

    ``panels`` is a list of ``(title, PathFamily)``.  Each distinct map is a
    segment from ``(0, m(0))`` to ``(1, m(1))`` annotated with its
    multiplicity.  The output is plain deterministic SVG text.
    """
    n = max(len(panels), 1)
    W, H = n * (width + pad) + pad, height + 2 * pad + 20
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="monospace" font-size="11">']
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    for p, (title, fam) in enumerate(panels):
        x0, y0 = pad + p * (width + pad), pad + 20
        out.append(f'<text x="{x0}" y="{pad}">{_escape(title)}</text>')
        out.append(f'<rect x="{x0}" y="{y0}" width="{width}" height="{height}" '
                   f'fill="none" stroke="#888"/>')
        counts = {}
        for m in fam.maps:
            counts[m] = counts.get(m, 0) + 1
        for c, (m, mult) in enumerate(sorted(counts.items(), key=lambda kv: kv[0].describe())):
            ya, yb = float(m(Fraction(0))), float(m(Fraction(1)))
            X = lambda t: x0 + t * width  # noqa: E731
            Y = lambda v: y0 + (1 - v) * height  # noqa: E731
            col = colors[c % len(colors)]
            out.append(f'<line x1="{X(0):.2f}" y1="{Y(ya):.2f}" x2="{X(1):.2f}" '
                       f'y2="{Y(yb):.2f}" stroke="{col}" stroke-width="2"/>')
            out.append(f'<text x="{X(0.55):.2f}" y="{Y((ya + yb) / 2) - 4:.2f}" fill="{col}">'
                       f'{_escape(m.describe())} x{mult}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# -- gelfand -----------------------------------------------------------------------------

def gelfand_report(max_size, n_samples, rng) -> Report:
    """Exhaustive bijection, the one-point example, random round trips and contravariance."""
    rep = exhaustive_round_trip(max_size)
    X, Y = FiniteSpace(("x1", "x2")), FiniteSpace(("y",))
    f = PartialMap(X, Y, {"x1": "y"})
    h = partial_map_to_hom(f)
    checks = [
        CheckResult.boolean("lambda_to_lambda_zero",
                            np.array_equal(h(np.array([5])), np.array([5, 0]))),
        CheckResult.boolean("example_inverse", hom_to_partial_map(h) == f),
    ]
    rt_bad = law_bad = None
    for s in range(n_samples):
        m, n, k = (int(v) for v in rng.integers(0, max_size + 1, size=3))
        A = FiniteSpace(tuple(f"a{i}" for i in range(m)))
        B = FiniteSpace(tuple(f"b{i}" for i in range(n)))
        C = FiniteSpace(tuple(f"c{i}" for i in range(k)))
        g1, g2 = random_partial_map(A, B, rng), random_partial_map(B, C, rng)
        if hom_to_partial_map(partial_map_to_hom(g1)) != g1:
            rt_bad = rt_bad or s
        lhs = partial_map_to_hom(compose_partial_maps(g2, g1))
        rhs = hom_compose(partial_map_to_hom(g1), partial_map_to_hom(g2))
        if lhs != rhs:
            law_bad = law_bad or s
    checks.append(CheckResult.boolean("random_round_trip", rt_bad is None, rt_bad,
                                      f"{n_samples} random maps"))
    checks.append(CheckResult.boolean("contravariant", law_bad is None, law_bad,
                                      "hom(g o f) = hom(f) o hom(g)"))
    return Report(rep.title, rep.checks + tuple(checks))


def _gelfand(config):
    rep = gelfand_report(config.max_size, min(config.samples, 1000), _rng(config, 6))
    return SuiteResult("gelfand", config, [rep], {"max_size": config.max_size})


# -- limits ------------------------------------------------------------------------------

def threads_report(depth=3):
    """Thread pieces of the binary Cantor system against their closed form."""
    tt = enumerate_threads(make_binary_cantor_system(depth), depth)
    sizes = [int(m.sum()) for m in tt.masks]
    ok = all(np.array_equal(tt.masks[k], binary_cantor_piece_mask(depth, k))
             for k in range(depth))
    rep = Report(f"binary Cantor threads depth {depth}", (
        CheckResult.boolean("pieces_match_closed_form", ok, sizes),
        CheckResult.boolean("piece_sizes_double", all(b == 2 * a for a, b in
                                                      zip(sizes, sizes[1:])), sizes),
    )).extend(tt.report())
    uhf = enumerate_threads(make_uhf_system([2, 2]))
    rep = rep.extend(uhf.report(), "uhf22.")
    rep = rep.extend(Report("", (CheckResult.boolean(
        "uhf22_piece_sizes", [int(m.sum()) for m in uhf.masks] == [8, 16],
        [int(m.sum()) for m in uhf.masks]),)))
    return rep, {"cantor_piece_sizes": sizes, "depth": depth}


def _cantor_weight(p):
    # product weights: 1 for a 0 bit, 2 for a 1 bit
    return Fraction(2) ** sum(p)


def gluing_report(depth=3) -> Report:
    """Glue weights over ``Z_0 <= Z_1 <= ...`` and over nested subgroupoids of ``G_4``."""
    checks = []
    tt = enumerate_threads(make_binary_cantor_system(depth, weights=_cantor_weight), depth)
    pieces = [tt.union.restrict(m, name=f"Z_{k}") for k, m in enumerate(tt.masks)]
    table = glue_haar_weights(pieces)
    rt = all(restrict_weights(table, P) == list(P.weights_object) for P in pieces)
    checks.append(CheckResult.boolean("cantor_round_trip", rt, detail="product weights, exact"))
    checks.append(CheckResult.boolean("union_weights", list(table.values())
                                      == list(tt.union.weights_object)))
    # bump one arrow of Z_0 inside the copy of Z_1, so Z_0 and Z_1 disagree on it
    lab = pieces[0].labels[0]
    w = dict(zip(pieces[1].labels, pieces[1].weights_object))
    w[lab] += 1
    bumped = pieces[1].with_weights(w)
    try:
        glue_haar_weights([pieces[0], bumped, *pieces[2:]])
        checks.append(CheckResult.boolean("perturbed_overlap_rejected", False))
    except CriterionViolation as exc:
        checks.append(CheckResult.boolean(
            "perturbed_overlap_rejected", exc.witness["arrow"] == lab and exc.witness["piece"] == 1,
            exc.witness, f"witness arrow {jsonable(exc.witness['arrow'])}"))

    G4 = make_matrix_groupoid(4)
    nested = []
    for k in (2, 3, 4):
        mask = np.array([i <= k and j <= k for i, j in G4.labels])
        nested.append(G4.restrict(mask, name=f"G4|{k}"))
    table = glue_haar_weights(nested)
    ok = all(v == 1 for v in table.values()) and len(table) == 16
    checks.append(CheckResult.boolean("g4_chain_counting", ok))
    return Report(f"weight gluing depth {depth}", tuple(checks))


def _limits(config):
    rng = _rng(config, 7)
    threads, data = threads_report(3)
    reports = [threads, gluing_report(3)]
    system = make_uhf_system([2, 2, 2])
    sys = InductiveSystemTruncation.from_groupoid_system(system)
    e12 = indicator(sys.stages[0], ((1, 2),), exact=True)
    img = push_forward(sys, 0, 2, e12)
    want = np.kron(to_matrix(e12).astype(int), np.eye(4, dtype=int))
    same = push_forward(sys, 1, 1, indicator(sys.stages[1], sys.stages[1].labels[1]))
    reports.append(Report("push forward UHF [2,2,2]", (
        CheckResult.boolean("e12_to_e12_tensor_I4", np.array_equal(
            to_matrix(img).astype(int), want)),
        CheckResult.boolean("identity_when_equal",
                            np.array_equal(same.coeffs, indicator(
                                sys.stages[1], sys.stages[1].labels[1]).coeffs)),
    )))
    samples = {0: [random_element(sys.stages[0], rng, integer=True)]}
    reports.append(coherence_report(sys, samples))
    data["uhf_depth"] = sys.depth
    return SuiteResult("limits", config, reports, data)


SUITES = {
    "core": _core,
    "morphisms": _morphisms,
    "uhf": _uhf,
    "jiang-su": jiang_su_report,
    "razak-jacelon": razak_jacelon_report,
    "gelfand": _gelfand,
    "limits": _limits,
}


def run_suite(name: str, config: SuiteConfig | None = None) -> SuiteResult:
    """Run one named suite.  Raises :class:`GroupoidModelsError` for an unknown name."""
    if name not in SUITES:
        raise GroupoidModelsError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](config or SuiteConfig())
