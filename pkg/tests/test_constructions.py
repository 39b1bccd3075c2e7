"""Concrete groupoids, systems and interval algebras against hand-built oracles."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from groupoid_models import (
    GroupoidSystem, StructuralError, SupernaturalTruncation, check_partial_morphism,
    conditional_expectation, induced_map, make_building_block, make_cyclic_group_groupoid,
    make_dimension_drop, make_finite_dim_groupoid, make_matrix_groupoid,
    make_tensor_power_truncation, make_uhf_system, make_unit_space, make_Zn,
    membership_distance, random_element, random_interval_element, subalgebra_dimension,
    to_matrix, validate_groupoid,
)


def _c(n, r):
    return r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))


def _block_diag(*mats):
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    off = 0
    for m in mats:
        k = m.shape[0]
        out[off:off + k, off:off + k] = m
        off += k
    return out


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_matrix_groupoid_shape(n):
    G = make_matrix_groupoid(n)
    assert G.n_arrows == n * n and len(G.objects) == n and G.is_principal and G.is_counting
    assert validate_groupoid(G).passed


def test_finite_dim_groupoid_blocks(rng):
    G = make_finite_dim_groupoid([1, 2, 3])
    assert G.n_arrows == 14 and len(G.orbits) == 3
    F = to_matrix(random_element(G, rng))
    assert F.shape == (6, 6)
    assert not F[0, 1:].any() and not F[1:3, 3:].any()


def test_cyclic_group_and_unit_space():
    Z = make_cyclic_group_groupoid(5)
    assert len(Z.objects) == 1 and not Z.is_principal and validate_groupoid(Z).passed
    X = make_unit_space("abc")
    assert X.n_arrows == 3 and len(X.orbits) == 3 and validate_groupoid(X).passed


def test_bad_sizes_rejected():
    with pytest.raises(ValueError):
        make_matrix_groupoid(0)
    with pytest.raises(ValueError):
        make_finite_dim_groupoid([])
    with pytest.raises(ValueError):
        SupernaturalTruncation((2, 1))


def test_uhf_system_induced_maps_are_tensor_with_identity(rng):
    sysm = make_uhf_system([2, 3, 2])
    assert [G.n_arrows for G in sysm.stages] == [4, 36, 144]
    for b in sysm.bondings:
        assert check_partial_morphism(b).passed
    for k, (b, extra) in enumerate(zip(sysm.bondings, (3, 2))):
        a = random_element(sysm.stages[k], rng)
        n = int(round(np.sqrt(sysm.stages[k].n_arrows)))
        np.testing.assert_array_equal(to_matrix(induced_map(b, a)),
                                      np.kron(to_matrix(a), np.eye(extra)))
        assert n * extra == int(round(np.sqrt(sysm.stages[k + 1].n_arrows)))


def test_tensor_power_truncation_of_group():
    sysm = make_tensor_power_truncation(make_cyclic_group_groupoid(2), 3)
    assert [G.n_arrows for G in sysm.stages] == [2, 4, 8]
    assert all(check_partial_morphism(b).passed for b in sysm.bondings)
    assert all(validate_groupoid(G).passed for G in sysm.stages)


def test_system_requires_matching_bondings():
    sysm = make_uhf_system([2, 2])
    with pytest.raises(StructuralError):
        GroupoidSystem(sysm.stages, [])
    with pytest.raises(StructuralError):
        GroupoidSystem(sysm.stages[::-1], sysm.bondings)


# -- interval algebras ---------------------------------------------------------------

def test_dimension_drop_endpoint_oracles(rng):
    m, n = 2, 3
    alg = make_dimension_drop(m, n, grid_log2=3)
    at0, at1 = alg.constraints[Fraction(0)], alg.constraints[Fraction(1)]
    A, B = _c(m, rng), _c(n, rng)
    assert membership_distance(np.kron(A, np.eye(n)), at0) < 1e-12
    assert membership_distance(np.kron(np.eye(m), B), at1) < 1e-12
    assert membership_distance(np.kron(np.eye(m), B), at0) > 0.1
    assert membership_distance(np.kron(A, np.eye(n)), at1) > 0.1
    assert subalgebra_dimension(at0) == m * m and subalgebra_dimension(at1) == n * n
    # the expectation onto A (x) 1 is the partial trace over the second factor
    M = _c(m * n, rng)
    ptr = np.einsum("iaja->ij", M.reshape(m, n, m, n)) / n
    np.testing.assert_allclose(conditional_expectation(M, at0), np.kron(ptr, np.eye(n)), atol=1e-12)


def test_Zn_is_scalar_at_zero(rng):
    alg = make_Zn(3, grid_log2=3)
    spec = alg.constraints[Fraction(0)]
    M = _c(3, rng)
    np.testing.assert_allclose(conditional_expectation(M, spec), np.trace(M) / 3 * np.eye(3),
                               atol=1e-12)
    assert list(alg.constraints) == [Fraction(0)]


def test_building_block_endpoint_oracles(rng):
    alg = make_building_block(2, 6, grid_log2=3)
    at0, at1 = alg.constraints[Fraction(0)], alg.constraints[Fraction(1)]
    c = _c(2, rng)
    assert membership_distance(_block_diag(c, c, np.zeros((2, 2))), at0) < 1e-12
    assert membership_distance(_block_diag(c, c, c), at1) < 1e-12
    assert membership_distance(_block_diag(c, c, c), at0) > 0.1
    assert not at0.is_unital and at1.is_unital
    f = random_interval_element(alg, rng)
    np.testing.assert_allclose(f.samples[0][4:, :], 0, atol=1e-12)


@pytest.mark.parametrize("args", [(2, 3), (2, 2), (0, 4)])
def test_building_block_requires_divisibility(args):
    with pytest.raises(ValueError):
        make_building_block(*args)
