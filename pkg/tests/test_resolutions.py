from __future__ import annotations

import pytest

from ghostlevel.catalog import loop_module
from ghostlevel.complexes import homology
from ghostlevel.exactla import FieldSpec
from ghostlevel.graded import FreeGCAlgebra, free_module, trivial_algebra, trivial_module
from ghostlevel.resolutions import (
    ResolutionError,
    UnsupportedInputError,
    betti_table,
    diagonal_module,
    is_free,
    iterated_resolution,
    projective_dimension,
    two_sided_koszul,
    verify_resolution,
)

Q = FieldSpec.rationals()


def poly(*gens, D=40, f=Q):
    return FreeGCAlgebra(f, tuple((f"x{d}_{k}", d) for k, d in enumerate(gens)), D)


def test_two_sided_koszul_one_generator():
    r = two_sided_koszul(poly(4))
    assert r.ranks() == {0: 1, 1: 1}
    assert r.minimal and r.length == 1
    assert r.complex.gens[1] == (4,)  # internal 4, homological 1: total degree 3
    assert all(r.checks.values())


def test_two_sided_koszul_two_generators():
    r = two_sided_koszul(poly(4, 6))
    assert r.ranks() == {0: 1, 1: 2, 2: 1}
    assert r.length == 2


def test_two_sided_koszul_ground_field():
    r = two_sided_koszul(trivial_algebra(Q, 20))
    assert r.ranks() == {0: 1} and r.length == 0


def test_odd_generator_rejected():
    with pytest.raises(UnsupportedInputError):
        two_sided_koszul(FreeGCAlgebra(Q, (("y", 3),), 20))


def test_iterated_resolution_examples():
    assert iterated_resolution(poly(4), 2).length == 1
    r = iterated_resolution(poly(4), 3)
    assert r.length == 2 and r.ranks() == {0: 1, 1: 2, 2: 1}
    r = iterated_resolution(poly(4, 6), 3)
    assert r.length == 4 and r.minimal


def test_iterated_resolution_needs_two_copies():
    with pytest.raises((ResolutionError, ValueError)):
        iterated_resolution(poly(4), 1)


def test_iterated_resolution_is_acyclic_with_homology_a():
    a = poly(4, D=24)
    r = iterated_resolution(a, 3)
    assert all(verify_resolution(r).values())
    assert homology(r.complex, 24).nonzero() == {(0, i): 1 for i in range(0, 25, 4)}


def test_projective_dimension_examples():
    assert projective_dimension(free_module(poly(4))).value == 0
    assert projective_dimension(diagonal_module(poly(4, D=24), 2)).value == 1
    assert projective_dimension(trivial_module(poly(4))).value == 1
    assert projective_dimension(trivial_module(poly(4, 6))).value == 2


def test_minimal_resolution_matches_koszul_betti_numbers():
    a = poly(4, 6, D=24)
    pd = projective_dimension(diagonal_module(a, 2))
    assert pd.value == 2
    assert betti_table(pd.resolution) == betti_table(two_sided_koszul(a))


def test_freeness():
    a = poly(4)
    assert is_free(free_module(a)).free
    r = is_free(trivial_module(a))
    assert not r.free and r.relation_degree == 4
    r = is_free(loop_module(a))
    assert r.free and sorted(d for d, _ in r.basis) == [0, 3]
