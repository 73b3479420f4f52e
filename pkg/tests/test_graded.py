from __future__ import annotations

import pytest

from ghostlevel.exactla import FieldSpec
from ghostlevel.graded import (
    FreeGCAlgebra,
    GradedDims,
    GradingError,
    exterior_series,
    free_module,
    poincare_series,
    restrict_to_tensor_power,
    tensor_algebra,
    tensor_power,
    trivial_algebra,
    trivial_module,
)

Q = FieldSpec.rationals()


def poly(*gens, D=40, f=Q):
    return FreeGCAlgebra(f, tuple((f"x{d}_{k}", d) for k, d in enumerate(gens)), D)


def test_series_single_generator():
    ps = poincare_series(poly(4, D=12))
    assert list(ps.dims) == [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1]


def test_series_exterior():
    assert exterior_series([3], 10).as_dict() == {0: 1, 3: 1}


def test_series_two_generators():
    assert poincare_series(poly(4, 6))[12] == 2


def test_tensor_dims():
    a = poly(4)
    aa = tensor_algebra(a, a)
    assert aa.degrees == (4, 4)
    assert aa.dim(8) == 3
    t = tensor_algebra(a, trivial_algebra(Q, 40))
    assert t.degrees == a.degrees and t.poincare_series().dims == a.poincare_series().dims


def test_tensor_field_mismatch():
    with pytest.raises(GradingError):
        tensor_algebra(poly(4), poly(4, f=FieldSpec.prime(3)))


def test_trivial_module():
    a = poly(4)
    k = trivial_module(a)
    assert k.dims[:3] == (1, 0, 0)
    assert k.act(0, 0, {0: 1}) == {}


def test_diagonal_restriction():
    a = poly(4)
    m = restrict_to_tensor_power(free_module(a), 2)
    for k in range(2):
        assert m.act(k, 0, {0: 1}) == {0: 1}
        assert m.actions[k][0].to_dense() == [[1]]
    assert m.dim(8) == 1


def test_module_relations_hold():
    a = poly(4, 6, D=30)
    assert free_module(a, (0, 3)).check_relations()
    assert restrict_to_tensor_power(free_module(a), 3).check_relations()


def test_ps_of_tensor_is_product():
    for gens in [(4,), (4, 6), (2, 4, 6), (4, 8, 12)]:
        a = poly(*gens)
        stop = a.truncation + 1
        prod = a.poincare_series(stop).times(a.poincare_series(stop), stop)
        assert tensor_power(a, 2).poincare_series(stop) == prod


def test_divide_inverts_times():
    x = GradedDims((1, 0, 2, 1))
    y = GradedDims((1, 1))
    assert x.times(y, 8).divide(y, 8) == GradedDims.from_dict(x.as_dict(), 0, 8)


def test_basis_is_deterministic():
    a = poly(4, 6)
    assert a.basis(12) == poly(4, 6).basis(12)
    assert len(a.basis(12)) == 2


def test_negative_dims_rejected():
    with pytest.raises(GradingError):
        GradedDims((1, -1))
    with pytest.raises(GradingError):
        FreeGCAlgebra(Q, (("x", 0),))
