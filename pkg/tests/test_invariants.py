from __future__ import annotations

import pytest

from ghostlevel.catalog import catalog
from ghostlevel.complexes import is_ghost, is_null_homotopic, zero_map
from ghostlevel.exactla import FieldSpec
from ghostlevel.graded import FreeGCAlgebra, free_module, trivial_algebra, trivial_module
from ghostlevel.invariants import (
    ExtClass,
    composite_ghost_trials,
    em_collapse_check,
    ext_into_ring,
    ghost_chain_certificate,
    identity_class,
    level_bounds,
    lie_dim,
    link_class,
    loop_ghost_triviality,
    shriek_class,
    tor,
    transgression_check,
    yoneda_compose,
)
from ghostlevel.graded import tensor_power

Q = FieldSpec.rationals()
CAT = catalog()


def alg(name: str, D: int = 40, f: FieldSpec = Q) -> FreeGCAlgebra:
    return CAT[name].algebra(f, D)


def test_lie_dim():
    assert lie_dim(alg("SU(3)")) == 8
    assert lie_dim(alg("G2")) == 14


def test_tor_su2():
    t = tor(alg("SU(2)"), 2)
    assert t.total_dim == 2 and t.total_degrees() == [0, 3]
    assert t.zero_differential


def test_tor_su3_three_copies():
    t = tor(alg("SU(3)"), 3)
    assert t.total_dim == 16
    # (1 + t^3)^2 (1 + t^5)^2
    assert t.series.as_dict() == {0: 1, 3: 2, 5: 2, 6: 1, 8: 4, 10: 1, 11: 2, 13: 2, 16: 1}


def test_tor_of_free_module_sits_in_degree_zero():
    a = alg("SU(2)", 24)
    t = tor(a, 2, m=free_module(tensor_power(a, 2)))
    assert t.dims.hom_degrees() == [0]


@pytest.mark.parametrize("name,n,degree", [("SU(2)", 2, -3), ("SU(3)", 2, -8), ("SU(2)", 3, -6)])
def test_ext_generator(name, n, degree):
    e = ext_into_ring(alg(name), n)
    assert e.one_dimensional()
    assert e.generator_total == {degree: 1}
    assert e.generator_degree == degree
    assert e.matches_shifted_algebra


def test_gorenstein_view():
    assert ext_into_ring(alg("SU(3)"), 2).gorenstein_total == {-8: 1}


def test_shriek_class_su2():
    phi = shriek_class(alg("SU(2)"), 2)
    assert phi.total_degree == -3 and phi.ext_degree == 1
    assert is_ghost(phi.map).ghost
    assert not is_null_homotopic(phi.map).null


def test_yoneda_with_identity_returns_phi():
    phi = shriek_class(alg("SU(2)", 24), 2)
    r = yoneda_compose(phi, identity_class(alg("SU(2)", 24), 2))
    c = r.composite.map
    assert (c.hshift, c.ishift) == (phi.map.hshift, phi.map.ishift)
    assert all(c.maps[h].equals(phi.map.maps[h]) for h in phi.map.maps)


def test_yoneda_with_zero_is_zero():
    a = alg("SU(2)", 24)
    phi = shriek_class(a, 2)
    zero = ExtClass(zero_map(phi.map.source, phi.map.target, 1, -4), phi.resolution, "0")
    r = yoneda_compose(zero, identity_class(a, 2))
    assert r.composite.is_zero()


def test_yoneda_of_two_shriek_classes():
    a = alg("SU(2)")
    r = yoneda_compose(shriek_class(a, 2), link_class(a, 2))
    assert r.composite.total_degree == -6
    assert r.coefficient in (1, -1)
    assert not is_null_homotopic(r.composite.map).null


def test_ghost_chain_su2():
    c = ghost_chain_certificate(alg("SU(2)"), 2)
    assert c.ok and c.length == 1 and not c.null_homotopic
    assert c.composite_degree == -3


def test_ghost_chain_su3_three_copies():
    c = ghost_chain_certificate(alg("SU(3)"), 3, yoneda=True)
    assert c.ok and c.length == 2
    assert c.composite_degree == -16
    assert all(abs(x) == 1 for x in c.yoneda_coefficients)


def test_ghost_chain_degree_is_minus_lie_dim():
    for name in ("U(2)", "Sp(2)", "G2"):
        c = ghost_chain_certificate(alg(name), 2)
        assert c.ok and c.composite_degree == -CAT[name].lie_dim


@pytest.mark.parametrize("name,n,value", [("SU(2)", 2, 2), ("SU(3)", 3, 5), ("SU(2)", 1, 1)])
def test_level_examples(name, n, value):
    c = level_bounds(alg(name), n)
    assert c.exact and c.value == value == c.lower == c.upper


def test_level_pd_cross_check():
    c = level_bounds(alg("SU(3)", 30), 2, cross_check=True)
    assert c.pd == 2 and c.pd_cross_check


def test_level_over_odd_prime():
    c = level_bounds(alg("Sp(2)", f=FieldSpec.prime(3)), 3)
    assert c.exact and c.value == 5


def test_loop_su2():
    c = loop_ghost_triviality(alg("SU(2)"), 100, seed=0)
    assert c.ok and c.freeness.free
    assert len(c.trials) == 100 and c.null_count == 100
    assert all(t.ghost and t.homotopy_verified for t in c.trials)


def test_loop_trivial_algebra():
    c = loop_ghost_triviality(trivial_algebra(Q, 20), 10)
    assert c.ok


def test_loop_negative_control():
    a = alg("SU(2)")
    c = loop_ghost_triviality(a, 5, module=trivial_module(a))
    assert not c.ok and not c.freeness.free and c.trials == []


def test_composites_su2():
    r = composite_ghost_trials(alg("SU(2)"), 2, trials=20, seed=3)
    assert r.ok and r.length == 2 and r.null_count == 20


def test_em_collapse():
    e = em_collapse_check(alg("SU(2)"), 2)
    assert e.ok and e.first_mismatch is None
    # PS(A) (1 + t^3)^2
    assert [e.e2[t] for t in range(8)] == [1, 0, 0, 2, 1, 0, 1, 2]
    e = em_collapse_check(alg("SU(2)"), 1)
    assert e.ok and [e.e2[t] for t in range(8)] == [1, 0, 0, 1, 1, 0, 0, 1]
    assert em_collapse_check(alg("SU(3)"), 2).ok


def test_transgression():
    t = transgression_check(alg("SU(2)"))
    assert t.ok and t.series.as_dict() == {0: 1, 3: 1}
    t = transgression_check(alg("SU(3)"))
    assert t.ok and t.series.as_dict() == {0: 1, 3: 1, 5: 1, 8: 1}
    t = transgression_check(trivial_algebra(Q, 20))
    assert t.ok and t.series.as_dict() == {0: 1}
