from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostlevel.exactla import (
    FieldSpec,
    MalformedInputError,
    SparseMatrix,
    kernel_basis,
    rank,
    solve,
)

Q = FieldSpec.rationals()
F2 = FieldSpec.prime(2)
F5 = FieldSpec.prime(5)


def _mul(m: SparseMatrix, x: dict) -> dict:
    return m.apply(x)


def test_rank_identity_f5():
    assert rank(SparseMatrix.identity(3, F5)) == 3


def test_rank_zero_q():
    assert rank(SparseMatrix.zeros(2, 2, Q)) == 0


def test_rank_dependent_rows():
    rows = [[1, 2], [2, 4]]
    assert rank(SparseMatrix.from_rows(rows, Q)) == 1
    assert rank(SparseMatrix.from_rows(rows, F2)) == 1


def test_bad_denominator_rejected():
    with pytest.raises(MalformedInputError):
        SparseMatrix.from_rows([[Fraction(1, 5)]], F5)


def test_solve_identity():
    r = solve(SparseMatrix.identity(3, Q), [1, 0, 0])
    assert r.consistent and r.particular == {0: 1} and r.kernel == []


def test_solve_zero_matrix():
    r = solve(SparseMatrix.zeros(2, 2, Q), [0, 0])
    assert r.consistent and r.particular == {}
    assert len(r.kernel) == 2


def test_solve_over_f2():
    r = solve(SparseMatrix.from_rows([[1, 1]], F2), [1])
    assert r.particular == {0: 1}
    assert r.kernel == [{0: 1, 1: 1}]


def test_solve_dimension_mismatch():
    with pytest.raises(MalformedInputError):
        solve(SparseMatrix.identity(2, Q), [1, 0, 0])


def test_inconsistent_system_has_witness():
    m = SparseMatrix.from_rows([[1, 1], [2, 2]], Q)
    r = solve(m, [1, 0], want_witness=True)
    assert not r.consistent
    y = r.witness
    assert _mul(m.transpose(), y) == {}
    assert sum(Q.mul(v, [1, 0][i]) for i, v in y.items()) != 0


def test_kernel_examples():
    assert kernel_basis(SparseMatrix.identity(3, Q)) == []
    assert len(kernel_basis(SparseMatrix.zeros(2, 2, Q))) == 2
    (v,) = kernel_basis(SparseMatrix.from_rows([[1, 2], [2, 4]], Q))
    # span {[2, -1]}
    assert Q.mul(v[0], -1) == Q.mul(v[1], 2)


matrices = st.integers(1, 6).flatmap(
    lambda r: st.integers(1, 6).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@settings(max_examples=60, deadline=None)
@given(matrices, st.sampled_from([Q, F2, FieldSpec.prime(3), F5]))
def test_rank_nullity_and_transpose(rows, f):
    m = SparseMatrix.from_rows(rows, f)
    ker = kernel_basis(m)
    assert rank(m) + len(ker) == m.cols
    assert rank(m) == rank(m.transpose())
    for v in ker:
        assert m.apply(v) == {}


@settings(max_examples=60, deadline=None)
@given(matrices, st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_solve_verified_by_multiplication(rows, xs):
    m = SparseMatrix.from_rows(rows, Q)
    x = {i: Q.coerce(v) for i, v in enumerate(xs[: m.cols]) if v}
    b = m.apply(x)
    r = solve(m, b)
    assert r.consistent
    assert m.apply(r.particular) == b
