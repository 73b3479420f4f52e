"""Free resolutions: the two-sided Koszul resolution, its iterated form over
A^{(x)n}, minimal resolutions of arbitrary graded modules, projective
dimension and freeness.

The iterated resolution of A over R = A^{(x)n} is the Koszul complex on the
regular sequence ``v_{c,j} = x_{c,j} - x_{c+1,j}`` (copies ``c = 1..n-1``,
generators ``j``), listed generator-major so that it splits as a tensor
product over the field of one small Koszul complex per generator of A.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Mapping

from .complexes import ChainComplex, PolyMatrix, homology, koszul_complex
from .exactla import Echelon, SparseMatrix, kernel_basis
from .graded import (
    FreeGCAlgebra,
    GradedModule,
    copy_var,
    free_module,
    restrict_to_tensor_power,
    tensor_power,
)


class UnsupportedInputError(ValueError):
    """The construction needs all algebra generators in even degree."""


class ResolutionError(ValueError):
    """A resolution failed verification."""


@dataclass(frozen=True)
class KoszulData:
    """Exterior generators ``y`` of the Koszul resolution: homological degree 1,
    internal degree that of the generator they kill (total degree one less)."""

    algebra: FreeGCAlgebra
    copies: int
    names: tuple[str, ...]
    internal_degrees: tuple[int, ...]

    @property
    def total_degrees(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.internal_degrees)


@dataclass
class FreeResolution:
    """A free resolution ``P -> M``.

    ``augmentation[g]`` is the image in ``M`` (a vector in degree
    ``P.gens[0][g]``) of generator ``g`` of ``P_0``.  ``length`` is exact
    unless ``capped`` is set, in which case the resolution was cut off at
    ``length`` and the true length is at least that.
    """

    complex: ChainComplex
    module: GradedModule
    augmentation: dict[int, dict]
    minimal: bool
    length: int
    capped: bool = False
    verified_upto: int = 0
    koszul: KoszulData | None = None
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def ring(self) -> FreeGCAlgebra:
        return self.complex.ring

    def ranks(self) -> dict[int, int]:
        return self.complex.ranks()


def _require_even(a: FreeGCAlgebra) -> None:
    odd = [n for n, d in a.generators if d % 2]
    if odd:
        raise UnsupportedInputError(
            f"odd-degree generators {odd} are not supported; resolutions need a polynomial algebra"
        )


def diagonal_module(a: FreeGCAlgebra, n: int) -> GradedModule:
    """A as a module over A^{(x)n} through n-fold multiplication."""
    m = restrict_to_tensor_power(free_module(a, (0,), name="A"), n)
    return m


def koszul_elements(a: FreeGCAlgebra, n: int) -> tuple[FreeGCAlgebra, list[dict], KoszulData]:
    """The ring A^{(x)n} and the regular sequence ``x_{c,j} - x_{c+1,j}``, generator-major."""
    R = tensor_power(a, n)
    f = a.field
    elements, names, degs = [], [], []
    for j, (name, d) in enumerate(a.generators):
        for c in range(1, n):
            e1 = [0] * R.ngens
            e2 = [0] * R.ngens
            e1[copy_var(a, c, j)] = 1
            e2[copy_var(a, c + 1, j)] = 1
            elements.append({tuple(e1): f.one, tuple(e2): f.neg(f.one)})
            names.append(f"y{name}_{c}")
            degs.append(d)
    return R, elements, KoszulData(a, n, tuple(names), tuple(degs))


@functools.lru_cache(maxsize=32)
def _verified_diagonal(a: FreeGCAlgebra, n: int) -> FreeResolution:
    res = _build_diagonal(a, n)
    verify_resolution(res)
    return res


def _diagonal_resolution(a: FreeGCAlgebra, n: int, verify: bool = True) -> FreeResolution:
    """A over A^{(x)n} resolved by the Koszul complex; verified results are cached (treat as read-only)."""
    if verify:
        if n < 1:
            raise ValueError("n must be at least 1")
        _require_even(a)
        return _verified_diagonal(a, n)
    return _build_diagonal(a, n)


def _build_diagonal(a: FreeGCAlgebra, n: int) -> FreeResolution:
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_even(a)
    R, elements, kd = koszul_elements(a, n)
    P = koszul_complex(R, elements, kd.internal_degrees, name=f"K(A,{n})", element_names=kd.names)
    M = diagonal_module(a, n)
    return FreeResolution(P, M, {0: {0: a.field.one}}, P.is_minimal(), P.length if P.gens else 0,
                          koszul=kd)


def two_sided_koszul(a: FreeGCAlgebra, verify: bool = True) -> FreeResolution:
    """A (x) Lambda(y_1..y_s) (x) A resolving A over A (x) A, ``d y_j = x_j (x) 1 - 1 (x) x_j``."""
    return _diagonal_resolution(a, 2, verify)


def iterated_resolution(a: FreeGCAlgebra, n: int, verify: bool = True) -> FreeResolution:
    """The (n-1)-fold tensor over A of the two-sided Koszul resolution, over A^{(x)n}."""
    if n < 2:
        raise ValueError("iterated_resolution needs n >= 2")
    return _diagonal_resolution(a, n, verify)


# ---------------------------------------------------------------------------
# verification


def augmentation_block(res: FreeResolution, i: int, memo: dict | None = None) -> SparseMatrix:
    """Matrix of ``P_0 -> M`` in internal degree ``i``.

    ``memo`` (shared across degrees) stores images of ``monomial * generator``
    so each one costs a single generator action on a smaller image.
    """
    P, M = res.complex, res.module
    f = P.field
    degs = P.ring.degrees
    memo = {} if memo is None else memo
    cols = []
    for g, e in P.block(0, i):
        key = (g, e)
        img = memo.get(key)
        if img is None:
            k = next((j for j, x in enumerate(e) if x), None)
            if k is None:
                img = dict(res.augmentation.get(g, {}))
            else:
                prev = list(e)
                prev[k] -= 1
                prev = tuple(prev)
                base = memo.get((g, prev))
                if base is None:
                    base = M.act_monomial(prev, P.gens[0][g], res.augmentation.get(g, {}))
                img = M.act(k, i - degs[k], base) if base else {}
            memo[key] = img
        cols.append(img)
    return SparseMatrix.from_columns(cols, M.dim(i), f)


def verify_resolution(res: FreeResolution, upto: int | None = None) -> dict[str, bool]:
    """Check that ``P -> M`` is a resolution in internal degrees ``<= upto``.

    * ``H_h(P) = 0`` for ``h > 0`` and ``dim H_0(P)_i = dim M_i``;
    * ``eps o d_1 = 0`` (checked on generators, which suffices by linearity);
    * ``eps`` is onto in every degree.
    Together these make ``H_0(P) -> M`` an isomorphism.  Also records
    minimality (no unit entries in any differential).
    """
    P, M = res.complex, res.module
    D = min(upto if upto is not None else M.truncation, M.truncation)
    f = P.field
    checks: dict[str, bool] = {}
    H = homology(P, D)
    checks["higher_homology_vanishes"] = all(h == 0 for (h, _), d in H.dims.items() if d)
    checks["h0_matches_module"] = all(H.dims.get((0, i), 0) == M.dim(i) for i in range(D + 1))
    ok = True
    if 1 in P.gens:
        for c, col in enumerate(P.diff(1).columns()):
            deg = P.gens[1][c]
            if deg > D:
                continue
            acc: dict = {}
            for r, p in col.items():
                img = res.augmentation.get(r)
                if img:
                    for e, v in M.act_poly(p, P.gens[0][r], img).items():
                        nv = f.add(acc.get(e, f.zero), v)
                        if nv:
                            acc[e] = nv
                        else:
                            acc.pop(e, None)
            if acc:
                ok = False
                break
    checks["augmentation_kills_boundaries"] = ok
    onto = True
    memo: dict = {}
    for i in range(D + 1):
        need = M.dim(i)
        if not need:
            continue
        ech = Echelon(f)
        for col in augmentation_block(res, i, memo).column_dicts():
            if col:
                ech.add(col)
                if len(ech) == need:
                    break
        if len(ech) < need:
            onto = False
            break
    checks["augmentation_onto"] = onto
    checks["minimal"] = P.is_minimal()
    if res.minimal and not checks["minimal"]:
        raise ResolutionError("resolution flagged minimal has a unit entry in its differential")
    res.checks = checks
    res.verified_upto = D
    bad = [k for k, v in checks.items() if k != "minimal" and not v]
    if bad:
        raise ResolutionError(f"resolution check failed: {', '.join(bad)}")
    return checks


# ---------------------------------------------------------------------------
# minimal resolutions of arbitrary modules


def _module_generators(m: GradedModule, D: int) -> list[tuple[int, dict]]:
    """Minimal homogeneous generators of ``m`` (degree, vector), lowest degree and index first."""
    R = m.algebra
    f = m.field
    gens: list[tuple[int, dict]] = []
    for i in range(D + 1):
        if not m.dim(i):
            continue
        ech = Echelon(f)
        for k, d in enumerate(R.degrees):
            if i - d < 0:
                continue
            for b in range(m.dim(i - d)):
                img = m.act(k, i - d, {b: f.one})
                if img:
                    ech.add(img)
        if len(ech) == m.dim(i):
            continue
        for j in range(m.dim(i)):
            if ech.add({j: f.one}) is not None:
                gens.append((i, {j: f.one}))
    return gens


def _submodule_generators(P: ChainComplex, h: int, kernels: Mapping[int, list[dict]], D: int) -> list[tuple[int, dict]]:
    """Minimal generators of the graded submodule of ``P_h`` with degreewise bases ``kernels``."""
    R = P.ring
    out: list[tuple[int, dict]] = []
    for i in range(D + 1):
        basis = kernels.get(i, [])
        if not basis:
            continue
        ech = Echelon(P.field)
        for k, d in enumerate(R.degrees):
            for z in kernels.get(i - d, []):
                ech.add(P.times_generator(h, i - d, z, k))
        if len(ech) == len(basis):
            continue
        for z in basis:
            if ech.add(z) is not None:
                out.append((i, z))
    return out


def minimal_resolution(m: GradedModule, cap: int | None = None, upto: int | None = None) -> FreeResolution:
    """Minimal free resolution of ``m`` in internal degrees ``<= upto``.

    Each step takes the kernel of the previous map degree by degree and
    adjoins generators for a complement of its decomposable part (lowest
    degree first, then kernel-basis order).  Stops when the kernel vanishes
    up to ``upto`` or after ``cap`` steps, in which case the result is
    flagged ``capped``.
    """
    R = m.algebra
    _require_even(R)
    D = m.truncation if upto is None else min(upto, m.truncation)
    cap = cap if cap is not None else R.ngens + 4
    f = m.field
    gens0 = _module_generators(m, D)
    gens: dict[int, tuple[int, ...]] = {0: tuple(d for d, _ in gens0)}
    augmentation = {g: v for g, (_, v) in enumerate(gens0)}
    diffs: dict[int, PolyMatrix] = {}
    res = FreeResolution(ChainComplex(R, gens, {}, check=False), m, augmentation, True, 0)
    if not gens0:
        res.complex = ChainComplex(R, {}, {})
        return res
    h = 0
    capped = False
    while True:
        P = ChainComplex(R, gens, diffs, check=False)
        kernels: dict[int, list[dict]] = {}
        for i in range(D + 1):
            if not P.dim(h, i):
                continue
            if h == 0:
                mat = augmentation_block(FreeResolution(P, m, augmentation, True, 0), i)
            else:
                mat = P.diff_block(h, i)
            ker = kernel_basis(mat) if mat.rows else [{n: f.one} for n in range(mat.cols)]
            if ker:
                kernels[i] = ker
        if not kernels:
            break
        if h >= cap:
            capped = True
            break
        new = _submodule_generators(P, h, kernels, D)
        gens[h + 1] = tuple(d for d, _ in new)
        entries = {}
        for c, (i, z) in enumerate(new):
            for r, p in P.vector_to_polys(h, i, z).items():
                entries[(r, c)] = p
        diffs[h + 1] = PolyMatrix(len(gens[h]), len(new), entries)
        h += 1
    P = ChainComplex(R, gens, diffs)
    res = FreeResolution(P, m, augmentation, P.is_minimal(), h, capped, D)
    if not capped:
        verify_resolution(res, D)
    return res


@dataclass(frozen=True)
class ProjectiveDimension:
    """``value`` is exact unless ``at_least`` is set (the cap was reached)."""

    value: int
    at_least: bool
    resolution: FreeResolution

    def __str__(self) -> str:
        return f">= {self.value}" if self.at_least else str(self.value)


def projective_dimension(m: GradedModule, cap: int | None = None, upto: int | None = None) -> ProjectiveDimension:
    res = minimal_resolution(m, cap, upto)
    return ProjectiveDimension(res.length, res.capped, res)


@dataclass(frozen=True)
class FreenessResult:
    """``basis`` lists (degree, vector) generators mapping onto ``m (x)_A k``.

    When ``free`` is false, ``relation_degree`` is the lowest internal degree
    in which the generators satisfy a relation.
    """

    free: bool
    basis: tuple[tuple[int, dict], ...]
    relation_degree: int | None
    upto: int

    def __bool__(self) -> bool:
        return self.free


def is_free(m: GradedModule, upto: int | None = None) -> FreenessResult:
    """Free iff the minimal generators have no relations up to ``upto``."""
    R = m.algebra
    _require_even(R)
    D = m.truncation if upto is None else min(upto, m.truncation)
    gens = _module_generators(m, D)
    P = ChainComplex(R, {0: tuple(d for d, _ in gens)}, {}, check=False) if gens else None
    res = FreeResolution(P, m, {g: v for g, (_, v) in enumerate(gens)}, True, 0) if P else None
    for i in range(D + 1):
        if P is None or not P.dim(0, i):
            continue
        mat = augmentation_block(res, i)
        if kernel_basis(mat) if mat.rows else mat.cols:
            return FreenessResult(False, tuple(gens), i, D)
    return FreenessResult(True, tuple(gens), None, D)


def koszul_resolution_of_field(a: FreeGCAlgebra, verify: bool = True) -> FreeResolution:
    """Koszul complex on the generators of A, resolving the ground field."""
    _require_even(a)
    from .graded import trivial_module

    P = koszul_complex(a, [a.poly_gen(k) for k in range(a.ngens)], list(a.degrees), name="K(k)")
    res = FreeResolution(P, trivial_module(a), {0: {0: a.field.one}}, P.is_minimal(), a.ngens)
    if verify:
        verify_resolution(res)
    return res


def resolution_length(res: FreeResolution) -> int:
    hs = [h for h, g in res.complex.gens.items() if g]
    return max(hs) if hs else 0


def same_betti_numbers(a: FreeResolution, b: FreeResolution) -> bool:
    """Graded Betti numbers agree (multisets of generator degrees per homological degree)."""
    ga = {h: sorted(g) for h, g in a.complex.gens.items() if g}
    gb = {h: sorted(g) for h, g in b.complex.gens.items() if g}
    return ga == gb


def betti_table(res: FreeResolution) -> dict[int, dict[int, int]]:
    out: dict[int, dict[int, int]] = {}
    for h, g in sorted(res.complex.gens.items()):
        row: dict[int, int] = {}
        for d in g:
            row[d] = row.get(d, 0) + 1
        out[h] = dict(sorted(row.items()))
    return out
