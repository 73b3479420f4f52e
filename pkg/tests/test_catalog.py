from __future__ import annotations

import pytest

from ghostlevel.catalog import (
    CatalogError,
    SpaceModel,
    catalog,
    load_catalog,
    lookup,
    loop_space_model,
    parse_catalog,
    trivial_model,
)
from ghostlevel.exactla import FieldSpec
from ghostlevel.graded import exterior_series
from ghostlevel.resolutions import is_free

Q = FieldSpec.rationals()
F2 = FieldSpec.prime(2)


def test_lookup_su2():
    m = lookup("SU(2)", Q)
    assert m.degrees == (4,) and m.lie_dim == 3


def test_lookup_su3_f5():
    m = lookup("SU(3)", FieldSpec.prime(5))
    assert m.degrees == (4, 6) and m.lie_dim == 8


def test_lookup_sp2_f2_and_so5_rejected():
    m = lookup("Sp(2)", F2)
    assert m.degrees == (4, 8) and m.lie_dim == 10
    with pytest.raises(CatalogError):
        lookup("SO(5)", F2)


def test_g2_needs_characteristic_zero():
    assert lookup("G2", Q).degrees == (4, 12)
    with pytest.raises(CatalogError):
        lookup("G2", FieldSpec.prime(3))


def test_unknown_group():
    with pytest.raises(CatalogError):
        lookup("E8", Q)


def test_every_entry_is_consistent():
    for m in catalog().values():
        assert m.lie_dim == sum(d - 1 for d in m.degrees)
        assert all(d % 2 == 0 for d in m.degrees)


def test_loop_model_su2():
    lm = loop_space_model(lookup("SU(2)", Q), Q, 24)
    assert lm.basis_degrees == (0, 3)
    # (1 + t^3) / (1 - t^4)
    got = [lm.module.dim(i) for i in range(25)]
    assert got == list(lm.expected_series().dims[:25])
    assert got[:9] == [1, 0, 0, 1, 1, 0, 0, 1, 1]
    assert is_free(lm.module).free


def test_loop_model_su3_rank():
    lm = loop_space_model(lookup("SU(3)", Q), Q, 30)
    assert len(lm.basis_degrees) == 4


def test_trivial_group():
    lm = loop_space_model(trivial_model(), Q, 20)
    assert lm.basis_degrees == (0,)
    assert lm.module.dims == (1,) + (0,) * 20
    assert exterior_series([], 5).as_dict() == {0: 1}


def test_lie_dim_mismatch_rejected():
    with pytest.raises(CatalogError):
        SpaceModel("bad", (4, 6), 9)
    with pytest.raises(CatalogError):
        SpaceModel("odd", (3,), 2)


def test_bad_file(tmp_path):
    with pytest.raises(CatalogError):
        parse_catalog("SU(2) 4 3\n")
    with pytest.raises(CatalogError):
        parse_catalog("SU(2) 4 3 all\nSU(2) 4 3 all\n")
    with pytest.raises(CatalogError):
        parse_catalog("X 4,x 3 all\n")
    with pytest.raises(CatalogError):
        parse_catalog("X 4 3 maybe\n")
    p = tmp_path / "cat.txt"
    p.write_text("# custom\nT2  2,2  2  all\n")
    assert load_catalog(p)["T2"].degrees == (2, 2)
