from __future__ import annotations

import random

import pytest

from ghostlevel.complexes import (
    ChainComplex,
    ChainMap,
    ComplexError,
    PolyMatrix,
    UndecidableError,
    add_maps,
    check_homotopy,
    check_obstruction,
    compose,
    cone,
    euler_characteristic,
    homology,
    identity_map,
    is_ghost,
    is_null_homotopic,
    koszul_complex,
    ring_complex,
    scale_map,
    tensor_complexes,
    zero_map,
)
from ghostlevel.exactla import FieldSpec
from ghostlevel.graded import FreeGCAlgebra, tensor_algebra, tensor_power
from ghostlevel.resolutions import two_sided_koszul

from randinst import convolve, nonzero_upto, random_complex, random_ring

Q = FieldSpec.rationals()
A = FreeGCAlgebra(Q, (("x", 4),), 24)
ONE = Q.one


def times_x() -> ChainMap:
    src = ChainComplex(A, {0: (4,)}, {})
    return ChainMap(src, ring_complex(A), 0, 0, {0: PolyMatrix(1, 1, {(0, 0): {(1,): ONE}})})


def test_koszul_on_nonzerodivisor_is_acyclic():
    k = koszul_complex(A, [A.poly_gen(0)])
    assert homology(k).nonzero() == {(0, 0): 1}


def test_zero_differential_homology():
    c = ChainComplex(A, {0: (0,), 1: (4,)}, {})
    h = homology(c, 12)
    assert h[(0, 8)] == 1 and h[(1, 8)] == 1 and h[(1, 2)] == 0


def test_two_sided_koszul_homology_is_a():
    h = homology(two_sided_koszul(A).complex, 24)
    assert h.nonzero() == {(0, i): 1 for i in range(0, 25, 4)}


def test_undecidable_beyond_truncation():
    h = homology(ring_complex(A), 12)
    with pytest.raises(UndecidableError):
        h[(0, 16)]


def test_cone_of_identity_is_acyclic():
    c = ring_complex(A)
    assert homology(cone(identity_map(c))).nonzero() == {}


def test_cone_of_zero_map():
    src = ChainComplex(A, {0: (4,)}, {})
    h = homology(cone(zero_map(src, ring_complex(A))), 12).nonzero()
    # H(target) in (0, 4k) and the shifted source in (1, 4 + 4k)
    assert h == {(0, 0): 1, (0, 4): 1, (0, 8): 1, (0, 12): 1, (1, 4): 1, (1, 8): 1, (1, 12): 1}


def test_cone_of_multiplication_by_x():
    assert homology(cone(times_x())).nonzero() == {(0, 0): 1}


def test_unverified_map_rejected():
    src = ChainComplex(A, {0: (4,)}, {})
    with pytest.raises(ComplexError):
        ChainMap(src, ring_complex(A), 0, 0, {0: PolyMatrix(1, 1, {(0, 0): {(0,): ONE}})})


def test_zero_map_is_null_homotopic():
    r = is_null_homotopic(zero_map(ring_complex(A), ring_complex(A)))
    assert r.null and r.homotopy.is_zero()


def test_identity_of_acyclic_complex_is_null_homotopic():
    c = cone(identity_map(ring_complex(A)))
    r = is_null_homotopic(identity_map(c))
    assert r.null and check_homotopy(identity_map(c), r.homotopy)


def test_shriek_map_is_ghost_but_not_null_homotopic():
    R = tensor_power(A, 2)
    k2 = koszul_complex(R, [{(1, 0): ONE, (0, 1): -ONE}])
    phi = ChainMap(k2, ring_complex(R), 1, -4, {1: PolyMatrix(1, 1, {(0, 0): {(0, 0): ONE}})})
    assert phi.total_degree == -3
    assert is_ghost(phi).ghost
    r = is_null_homotopic(phi)
    assert not r.null
    assert check_obstruction(phi, r.obstruction_degree, r.witness)


def test_identity_with_homology_is_not_ghost():
    assert not is_ghost(identity_map(ring_complex(A))).ghost
    assert is_ghost(zero_map(ring_complex(A), ring_complex(A))).ghost


def test_compose_units_and_zero():
    f = times_x()
    assert compose(f, identity_map(f.target)).maps.keys() == f.maps.keys()
    g = compose(f, identity_map(f.target))
    assert all(g.maps[h].equals(f.maps[h]) for h in f.maps)
    assert compose(zero_map(f.source, f.source), f).is_zero()


def test_compose_is_associative():
    f = times_x()
    c = f.target
    x2 = ChainMap(c, c, 0, 4, {0: PolyMatrix(1, 1, {(0, 0): {(1,): ONE}})})
    left = compose(compose(f, x2), x2)
    right = compose(f, compose(x2, x2))
    assert left.maps[0].equals(right.maps[0])


def test_null_homotopic_maps_vanish_on_homology():
    c = cone(identity_map(ring_complex(A)))
    f = add_maps(identity_map(c), scale_map(identity_map(c), 2))
    assert is_null_homotopic(f).null and is_ghost(f).ghost


def _square_is_zero(c: ChainComplex) -> bool:
    R = c.ring
    for h in c.hom_degrees():
        if h - 1 in c.gens and h - 2 in c.gens:
            if not c.diff(h - 1).compose(R, c.diff(h)).is_zero():
                return False
    return True


def test_random_d_squared_euler_kunneth_small():
    rng = random.Random(11)
    for _ in range(20):
        ring = random_ring(rng)
        c = random_complex(rng, ring)
        assert _square_is_zero(c)
        h = homology(c, ring.truncation)
        for i in range(ring.truncation + 1):
            hs = sum((-1) ** hh * d for (hh, ii), d in h.dims.items() if ii == i)
            assert euler_characteristic(c, i) == hs
    ring1 = random_ring(rng, Q, "x")
    ring2 = random_ring(rng, Q, "w")
    c1, c2 = random_complex(rng, ring1), random_complex(rng, ring2)
    ring = tensor_algebra(ring1, ring2)
    t = tensor_complexes(ring, [(c1, range(ring1.ngens)), (c2, range(ring1.ngens, ring.ngens))])
    direct = ChainComplex(ring, t.gens, t.diffs)
    D = ring.truncation
    assert nonzero_upto(direct, D) == convolve(nonzero_upto(c1, D), nonzero_upto(c2, D), D)


def test_koszul_contraction_splits_boundaries():
    from ghostlevel.complexes import _koszul_contract, koszul_variables
    from ghostlevel.invariants import diagonal_pool

    from randinst import random_poly

    rng = random.Random(5)
    for n in (2, 3):
        a = FreeGCAlgebra(Q, (("x", 2), ("w", 4)), 16)
        for Qc in diagonal_pool(a, n):
            kv = koszul_variables(Qc)
            assert kv is not None
            R = Qc.ring
            for h in Qc.hom_degrees():
                if h + 1 not in Qc.gens:
                    continue
                for _ in range(3):
                    z = {}
                    for r, d in enumerate(Qc.gens[h + 1]):
                        if d <= 14:
                            p = random_poly(rng, R, 14 - d)
                            if p:
                                z[(r, 0)] = p
                    Z = PolyMatrix(Qc.rank(h + 1), 1, z)
                    Y = Qc.diff(h + 1).compose(R, Z)
                    S = _koszul_contract(Qc, kv, h, Y.column(0))
                    SY = PolyMatrix(Qc.rank(h + 1), 1, {(r, 0): p for r, p in S.items()})
                    assert Qc.diff(h + 1).compose(R, SY).equals(Y)
