"""Stage parameters, path families, permutation paths and interval bondings."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from groupoid_models import (
    IntervalBonding, JiangSuStageParams, PathFamily, PermutationPath, RazakStageParams,
    StructuralError, build_bonding, build_xi_paths, compose_path_families,
    conditional_expectation, interval_adjoint, interval_multiply, is_prime, jiang_su_chain_params,
    jiang_su_endpoint_permutations, next_jiang_su_params, next_razak_params,
    random_interval_element, razak_chain_params, razak_endpoint_permutations,
    structured_membership_bound, synthesize_permutation_path, verify_bonding,
)


def _trial_division_prime(n):
    return n >= 2 and all(n % d for d in range(2, n))


def brute_force_stage(p, q, choice=0, bound=200):
    """Admissible prime pairs found by exhaustive search, ordered by (k0 + k1, k0)."""
    found = []
    for k0 in range(2 * q + 1, bound):
        for k1 in range(2 * p + 1, bound):
            if not (_trial_division_prime(k0) and _trial_division_prime(k1)):
                continue
            pn, qn, k = p * k0, q * k1, k0 * k1
            if gcd(pn, qn) != 1:
                continue
            r0 = k % qn or qn
            r1 = k % pn or pn
            if (r0 * q) % qn or (k - r0) % qn or (r1 * p) % pn or (k - r1) % pn:
                continue
            if k - r0 - r1 <= 0:
                continue
            found.append((k0 + k1, k0, k1, pn, qn, k, r0, r1))
    found.sort()
    return found[choice][1:]


# -- parameters --------------------------------------------------------------------------

def test_is_prime_matches_trial_division():
    assert [n for n in range(1000) if is_prime(n)] == [n for n in range(1000) if _trial_division_prime(n)]


def test_jiang_su_first_stage_values():
    s = next_jiang_su_params(2, 3)
    assert (s.k0, s.k1, s.p_next, s.q_next, s.k, s.r0, s.r1) == (7, 5, 14, 15, 35, 5, 7)
    assert s.invariants().passed
    assert s.multiplicities == (5, 23, 7)


def test_jiang_su_second_stage_values():
    s = next_jiang_su_params(14, 15)
    assert (s.k0, s.k1, s.p_next, s.q_next, s.k, s.r0, s.r1) == (31, 29, 434, 435, 899, 29, 31)


@pytest.mark.parametrize("start", [(2, 3), (3, 2), (2, 5), (3, 4), (14, 15), (5, 7)])
@pytest.mark.parametrize("choice", [0, 1, 2])
def test_jiang_su_search_matches_brute_force(start, choice):
    s = next_jiang_su_params(*start, choice=choice)
    assert (s.k0, s.k1, s.p_next, s.q_next, s.k, s.r0, s.r1) == brute_force_stage(*start, choice)


def test_jiang_su_rejects_non_coprime_start():
    with pytest.raises(StructuralError):
        next_jiang_su_params(2, 4)


def test_jiang_su_invariants_flag_bad_primes():
    rep = JiangSuStageParams(2, 3, 5, 5).invariants()
    assert not rep["prime_bounds"].passed


def test_chain_params_take_the_number_of_algebras():
    chain = jiang_su_chain_params(3)
    assert len(chain) == 2
    assert (chain[1].p, chain[1].q) == (chain[0].p_next, chain[0].q_next)
    assert razak_chain_params(1) == []


def test_razak_first_two_stages():
    s = next_razak_params(1, 2)
    assert (s.a, s.b, s.k, s.n_next, s.n_prime_next) == (1, 3, 6, 3, 12)
    t = next_razak_params(3, 12)
    assert (t.a, t.b, t.k, t.n_next, t.n_prime_next) == (3, 7, 14, 21, 168)
    # the next stage's corner count equals this stage's b
    assert t.a == s.b
    assert s.multiplicities == (3, 1, 2)


@given(st.integers(1, 6), st.integers(1, 6))
def test_razak_relation_holds_for_any_start(n, a):
    s = next_razak_params(n, n * (a + 1))
    assert s.invariants().passed
    assert s.n_prime_next // s.n_next - 1 == s.b


def test_razak_rejects_bad_start():
    with pytest.raises(StructuralError):
        RazakStageParams(2, 3)


# -- path families --------------------------------------------------------------------------

def test_path_family_contracts_and_covers():
    fam = build_xi_paths(next_jiang_su_params(2, 3))
    rep = fam.verify()
    assert rep.passed
    assert fam.max_spread == Fraction(1, 2)
    assert fam.covered() == [(Fraction(0), Fraction(1))]


def test_composite_spread_is_a_quarter():
    a = build_xi_paths(next_jiang_su_params(2, 3))
    b = build_xi_paths(next_jiang_su_params(14, 15))
    c = compose_path_families(a, b)
    assert c.k == a.k * b.k
    assert c.max_spread == Fraction(1, 4)
    assert c.covered() == [(Fraction(0), Fraction(1))]
    # block (i, l) evaluates at a[l](b[i](t))
    t = Fraction(3, 7)
    assert c.maps[a.k + 2](t) == a.maps[2](b.maps[1](t))


def test_gap_in_cover_is_detected():
    fam = PathFamily.from_multiplicities(1, 0, 0)
    rep = fam.verify()
    assert not rep["covers_unit_interval"].passed


# -- endpoint permutations and paths ---------------------------------------------------------

def _block_diag(blocks):
    k, n = len(blocks), blocks[0].shape[0]
    D = np.zeros((k * n, k * n), dtype=complex)
    for i, B in enumerate(blocks):
        D[i * n:(i + 1) * n, i * n:(i + 1) * n] = B
    return D


def _perm_matrix(src):
    P = np.zeros((len(src), len(src)))
    P[src, np.arange(len(src))] = 1.0
    return P


@pytest.mark.parametrize("params", [next_jiang_su_params(2, 3), next_razak_params(1, 2),
                                    next_razak_params(2, 4)], ids=str)
def test_endpoint_permutations_land_in_boundary_subalgebras(params, rng):
    from groupoid_models.builders import _stage_algebras

    src_alg, tgt_alg = _stage_algebras(params, 2)
    if isinstance(params, JiangSuStageParams):
        src0, src1 = jiang_su_endpoint_permutations(params)
    else:
        src0, src1 = razak_endpoint_permutations(params)
    fam = PathFamily.from_multiplicities(*params.multiplicities)
    f = random_interval_element(src_alg, rng)
    for t, src, t_idx in ((0, src0, 0), (1, src1, -1)):
        blocks = [f(m(Fraction(t))) for m in fam.maps]
        P = _perm_matrix(src)
        X = P.T @ _block_diag(blocks) @ P
        spec = tgt_alg.constraints[Fraction(t)]
        assert np.linalg.norm(X - conditional_expectation(X, spec), 2) < 1e-12


def _schur_path(src0, src1, t):
    """``P0 exp(t L)`` from a complex Schur form of ``P0* P1`` (normal, so triangular = diagonal)."""
    P0, P1 = _perm_matrix(src0), _perm_matrix(src1)
    T, Z = scipy.linalg.schur(P0.T @ P1, output="complex")
    theta = np.angle(np.diag(T))
    theta[theta < -np.pi + 1e-9] = np.pi  # principal branch keeps +pi
    return P0 @ (Z * np.exp(1j * float(t) * theta)) @ Z.conj().T


@pytest.mark.parametrize("params", [next_jiang_su_params(2, 3), next_razak_params(1, 2)], ids=str)
@pytest.mark.parametrize("t", [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(7, 8), Fraction(1)])
def test_permutation_path_matches_schur_oracle(params, t):
    path = synthesize_permutation_path(params)
    np.testing.assert_allclose(path.unitary(t), _schur_path(path.src0, path.src1, t), atol=1e-10)


@given(st.integers(2, 9), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25)
def test_random_permutation_paths_are_unitary_geodesics(n, seed):
    r = np.random.default_rng(seed)
    src0, src1 = r.permutation(n), r.permutation(n)
    path = PermutationPath(src0, src1)
    assert path.validate(4).passed
    np.testing.assert_array_equal(path.unitary(0), _perm_matrix(src0))
    np.testing.assert_array_equal(path.unitary(1), _perm_matrix(src1))
    t = Fraction(int(r.integers(1, 16)), 16)
    np.testing.assert_allclose(path.unitary(t), _schur_path(src0, src1, t), atol=1e-10)


# -- bondings ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def rj_bond():
    return build_bonding(next_razak_params(1, 2), grid_log2=4, rng=np.random.default_rng(1))


@pytest.fixture(scope="module")
def js_bond():
    return build_bonding(next_jiang_su_params(2, 3), grid_log2=3, rng=np.random.default_rng(2),
                         n_members=4)


def test_bondings_verify(rj_bond, js_bond):
    for b in (rj_bond, js_bond):
        assert b.report.passed, b.report.summary()
    assert "unital" in [c.name for c in js_bond.report.checks]
    assert "unital" not in [c.name for c in rj_bond.report.checks]


def test_dense_image_is_a_homomorphism_into_target(rj_bond, rng):
    f = random_interval_element(rj_bond.source, rng)
    g = random_interval_element(rj_bond.source, rng)
    pf, pg = rj_bond(f), rj_bond(g)
    assert rj_bond.target.contains(pf)
    np.testing.assert_allclose(rj_bond(interval_multiply(f, g)).samples,
                               interval_multiply(pf, pg).samples, atol=1e-9)
    np.testing.assert_allclose(rj_bond(interval_adjoint(f)).samples,
                               interval_adjoint(pf).samples, atol=1e-12)


def test_jiang_su_bonding_is_unital(js_bond):
    one = js_bond(js_bond.source.unit())
    np.testing.assert_allclose(one.samples, js_bond.target.unit().samples, atol=1e-12)


def test_image_at_grid_point_is_conjugated_block_diagonal(rj_bond, rng):
    f = random_interval_element(rj_bond.source, rng)
    Nt = 2 ** rj_bond.target.grid_log2
    j = 5
    t = Fraction(j, Nt)
    blocks = [f(m(t)) for m in rj_bond.paths.maps]
    U = rj_bond.path.unitary(t)
    np.testing.assert_allclose(rj_bond(f).samples[j], U.conj().T @ _block_diag(blocks) @ U,
                               atol=1e-12)


def test_structured_bound_equals_dense_frobenius_distance(rj_bond, rng):
    f = random_interval_element(rj_bond.source, rng)
    # perturb so the distance is not zero
    f = rj_bond.source.element(f.samples + 0.1 * rng.standard_normal(f.samples.shape))
    for j, endpoint in ((0, 0), (2 ** rj_bond.target.grid_log2, 1)):
        spec = rj_bond.target.constraints[Fraction(endpoint)]
        X = rj_bond.gathered(f, j, endpoint)
        dense = np.linalg.norm(X - conditional_expectation(X, spec))
        src = rj_bond.path.src1 if endpoint else rj_bond.path.src0
        if spec.pad:
            continue  # the structured form handles unpadded specs only
        bound = structured_membership_bound(rj_bond.block_values(f, j), np.arange(rj_bond.paths.k),
                                            src, rj_bond.n_source, spec)
        assert bound == pytest.approx(dense, rel=1e-10)


def test_structured_bound_on_jiang_su_endpoints(js_bond, rng):
    f = random_interval_element(js_bond.source, rng)
    f = js_bond.source.element(f.samples + 0.05 * rng.standard_normal(f.samples.shape))
    for j, endpoint in ((0, 0), (2 ** js_bond.target.grid_log2, 1)):
        spec = js_bond.target.constraints[Fraction(endpoint)]
        X = js_bond.gathered(f, j, endpoint)
        dense = np.linalg.norm(X - conditional_expectation(X, spec))
        src = js_bond.path.src1 if endpoint else js_bond.path.src0
        bound = structured_membership_bound(js_bond.block_values(f, j), np.arange(js_bond.paths.k),
                                            src, js_bond.n_source, spec)
        assert bound == pytest.approx(dense, rel=1e-10)


def test_corrupted_endpoint_permutation_fails(rj_bond):
    src0 = np.array(rj_bond.path.src0)
    src0[[0, -1]] = src0[[-1, 0]]
    bad = IntervalBonding(rj_bond.params, rj_bond.paths, PermutationPath(src0, rj_bond.path.src1),
                          rj_bond.source, rj_bond.target)
    rep = verify_bonding(bad, np.random.default_rng(0), n_members=4)
    assert not rep["boundary_membership"].passed
    assert rep["boundary_membership"].witness["t"] == 0


def test_grids_must_differ_by_one_level(rj_bond):
    with pytest.raises(StructuralError):
        IntervalBonding(rj_bond.params, rj_bond.paths, rj_bond.path, rj_bond.target, rj_bond.target)


def test_source_must_match_parameters():
    from groupoid_models import make_Zn

    with pytest.raises(StructuralError):
        build_bonding(next_razak_params(1, 2), grid_log2=2, source=make_Zn(3, grid_log2=3))
