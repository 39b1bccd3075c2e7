"""Finite spaces with partial maps versus commutative algebra homomorphisms."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from groupoid_models import (
    CommHom, FiniteSpace, GroupoidModelsError, PartialMap, StructuralError, brute_force_homomorphisms,
    compose_partial_maps, enumerate_partial_maps, exhaustive_round_trip, hom_compose,
    hom_to_partial_map, identity_map, partial_map_from_json, partial_map_to_hom,
    partial_map_to_json, random_partial_map,
)


def _space(n, tag):
    return FiniteSpace(tuple(f"{tag}{i}" for i in range(n)))


def test_lambda_to_lambda_zero_example():
    X, Y = FiniteSpace(("x1", "x2")), FiniteSpace(("y",))
    f = PartialMap(X, Y, {"x1": "y"})
    h = partial_map_to_hom(f)
    np.testing.assert_array_equal(h(np.array([3])), [3, 0])
    assert hom_to_partial_map(h) == f


def test_total_map_gives_diagonal_embedding():
    X, Y = FiniteSpace(("x1", "x2")), FiniteSpace(("y",))
    h = partial_map_to_hom(PartialMap(X, Y, {"x1": "y", "x2": "y"}))
    np.testing.assert_array_equal(h(np.array([3])), [3, 3])


@pytest.mark.parametrize("m,n", [(0, 0), (0, 2), (2, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_brute_force_count_matches_partial_maps(m, n):
    homs = brute_force_homomorphisms(m, n)
    assert len(homs) == (n + 1) ** m
    X, Y = _space(m, "x"), _space(n, "y")
    from_maps = {partial_map_to_hom(PartialMap(X, Y, {X.points[i]: Y.points[c]
                                                      for i, c in enumerate(row) if c >= 0}))
                 for row in enumerate_partial_maps(m, n)}
    assert from_maps == {CommHom(X, Y, M) for M in homs}


def test_exhaustive_round_trip_passes():
    rep = exhaustive_round_trip(4)
    assert rep.passed, rep.summary()


def test_non_homomorphism_is_rejected_with_witness():
    X, Y = _space(1, "x"), _space(2, "y")
    h = CommHom(X, Y, np.array([[1, 1]]))
    assert not h.check().passed
    with pytest.raises(GroupoidModelsError) as info:
        hom_to_partial_map(h)
    assert info.value.witness is not None


@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5), st.integers(0, 2 ** 32 - 1))
def test_contravariant_functor(m, n, k, seed):
    r = np.random.default_rng(seed)
    A, B, C = _space(m, "a"), _space(n, "b"), _space(k, "c")
    f, g = random_partial_map(A, B, r), random_partial_map(B, C, r)
    assert partial_map_to_hom(compose_partial_maps(g, f)) == hom_compose(partial_map_to_hom(f),
                                                                         partial_map_to_hom(g))
    assert hom_to_partial_map(partial_map_to_hom(f)) == f
    assert partial_map_to_hom(identity_map(A)) == CommHom(A, A, np.eye(m, dtype=np.int64))


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_unit_image_is_domain_indicator(m, n, seed):
    r = np.random.default_rng(seed)
    X, Y = _space(m, "x"), _space(n, "y")
    f = random_partial_map(X, Y, r)
    unit = partial_map_to_hom(f)(np.ones(n, dtype=np.int64))
    assert [bool(v) for v in unit] == [x in f.domain for x in X.points]


def test_partial_map_validation():
    X, Y = _space(2, "x"), _space(1, "y")
    with pytest.raises(KeyError):
        PartialMap(X, Y, {"x0": "nope"})
    with pytest.raises(StructuralError):
        PartialMap(X, Y, [("x0", "y0"), ("x0", "y0")])
    with pytest.raises(StructuralError):
        FiniteSpace(("a", "a"))


def test_json_round_trip():
    X = FiniteSpace((("p", 1), ("p", 2)))
    Y = FiniteSpace(("q",))
    f = PartialMap(X, Y, {("p", 2): "q"})
    assert partial_map_from_json(json.dumps(partial_map_to_json(f))) == f
