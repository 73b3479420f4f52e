"""Derived invariants of A = k[x_1..x_s] (generators in even degrees) as a
module over R = A^{(x)n} through multiplication.

* Tor and Ext computed from the iterated Koszul resolution;
* shriek classes (top duals of Koszul complexes) and the links between them;
* ghost chains whose composites are certified non-null-homotopic, giving
  lower bounds on level, and minimal resolutions giving upper bounds;
* randomized ghost sampling for the free-source and diagonal-module cases;
* the E2 dimension count and the transgression shadow.

Every map here is a :class:`~ghostlevel.complexes.ChainMap` verified at
construction.  Koszul basis elements are labelled by tuples of element
indices; element ``j * (n - 1) + (c - 1)`` is ``x_{c,j} - x_{c+1,j}``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from .complexes import (
    ChainComplex,
    ChainMap,
    ComplexError,
    GhostReport,
    HomSpace,
    Homology,
    PolyMatrix,
    check_obstruction,
    chain_map_space,
    compose,
    dual_complex,
    homology,
    homology_generator_dims,
    homology_reps,
    is_ghost,
    is_null_homotopic,
    koszul_complex,
    ring_complex,
    tensor_with_module,
)
from .exactla import SparseMatrix, kernel_basis, solve
from .graded import (
    FreeGCAlgebra,
    GradedDims,
    GradedModule,
    copy_var,
    exterior_series,
    free_module,
    restrict_module,
    restrict_to_tensor_power,
    tensor_power,
    trivial_module,
)
from .resolutions import (
    FreeResolution,
    FreenessResult,
    _diagonal_resolution,
    _require_even,
    is_free,
    iterated_resolution,
    koszul_elements,
    koszul_resolution_of_field,
    minimal_resolution,
    projective_dimension,
)


class InvariantError(RuntimeError):
    """An internal verification failed (signals a bug, not a mathematical outcome)."""


def lie_dim(a: FreeGCAlgebra) -> int:
    """``sum (deg x_j - 1)``, the dimension of the group whose classifying space A models."""
    return sum(d - 1 for d in a.degrees)


# ---------------------------------------------------------------------------
# Tor


@dataclass(frozen=True)
class TorResult:
    """Bigraded dims ``(h, i)`` and the series in total degree ``i - h``.

    ``series`` is reliable in total degrees below ``series.stop``.
    """

    dims: Homology
    series: GradedDims
    total_dim: int
    zero_differential: bool

    def total_degrees(self) -> list[int]:
        return self.series.support()


def tor(a: FreeGCAlgebra, n: int, m: GradedModule | None = None, upto: int | None = None,
        resolution: ChainComplex | None = None) -> TorResult:
    """``Tor^{A^{(x)n}}(A, m)`` from the iterated resolution (or a supplied
    resolution of A over ``A^{(x)n}``); ``m`` defaults to the field."""
    P = resolution if resolution is not None else _diagonal_resolution(a, n).complex
    m = m if m is not None else trivial_module(P.ring)
    if m.algebra.generators != P.ring.generators:
        raise ValueError("module must live over A^(x)n")
    D = m.truncation if upto is None else min(upto, m.truncation)
    V = tensor_with_module(P, m)
    H = homology(V, D)
    zero = all(V.diff_block(h, i).is_zero() for h in P.hom_degrees() for i in V.internal_range(D) if V.dim(h, i))
    top = max(P.hom_degrees())
    stop = D - top + 1
    tot = H.total_degree_dims()
    low = min(tot, default=0)
    series = GradedDims.from_dict(tot, min(low, 0), max(stop, min(low, 0)))
    return TorResult(H, series, sum(H.dims.values()), zero)


# ---------------------------------------------------------------------------
# Ext classes


@dataclass
class ExtClass:
    """A chain map ``P -> T`` out of a free resolution ``P`` of some module.

    ``ext_degree`` is the homological shift (the Ext degree), and the total
    degree is ``internal_degree + ext_degree``, the convention under which
    the shriek class for A = k[x_4], n = 2 has total degree -3.
    """

    map: ChainMap
    resolution: FreeResolution
    name: str = ""

    @property
    def ext_degree(self) -> int:
        return self.map.hshift

    @property
    def internal_degree(self) -> int:
        return self.map.ishift

    @property
    def total_degree(self) -> int:
        return self.map.total_degree

    @property
    def ring(self) -> FreeGCAlgebra:
        return self.map.ring

    def is_zero(self) -> bool:
        return self.map.is_zero()


def _top_dual(P: ChainComplex, target: ChainComplex, coefficient=None) -> ChainMap:
    R = P.ring
    f = R.field
    N = max(P.hom_degrees())
    if P.rank(N) != 1:
        raise InvariantError("top Koszul degree is not of rank one")
    c = f.one if coefficient is None else f.coerce(coefficient)
    maps = {N: PolyMatrix(1, 1, {(0, 0): {R.unit: c}})} if c else {}
    return ChainMap(P, target, N, -P.gens[N][0], maps, name="top-dual")


def shriek_class(a: FreeGCAlgebra, n: int = 2) -> ExtClass:
    """Generator of ``Ext_{A^{(x)n}}(A, A^{(x)n})``: the top exterior monomial goes to 1."""
    res = iterated_resolution(a, n)
    phi = _top_dual(res.complex, ring_complex(res.ring))
    phi.name = f"shriek(n={n})"
    return ExtClass(phi, res, phi.name)


def identity_class(a: FreeGCAlgebra, k: int) -> ExtClass:
    """The unit of ``Ext_{A^{(x)k}}(A^{(x)k}, A^{(x)k})``."""
    R = tensor_power(a, k) if k > 1 else a
    T = ring_complex(R)
    res = FreeResolution(T, free_module(R, (0,), "R"), {0: {0: R.field.one}}, True, 0)
    f = R.field
    return ExtClass(ChainMap(T, T, 0, 0, {0: PolyMatrix(1, 1, {(0, 0): {R.unit: f.one}})}, name="id"), res, "id")


@dataclass(frozen=True)
class ExtResult:
    """``Ext_{A^{(x)n}}(A, A^{(x)n})`` in three views.

    * ``dims``: the full bigraded dims.  As a graded vector space this is a
      shifted copy of A, so it is one-dimensional only in its lowest degree.
    * ``generator_dims``: dims of ``Ext (x)_R k``, the minimal module
      generators, which form a single class in total degree
      ``-(n - 1) * lie_dim``.
    * ``gorenstein``: ``Ext_A(k, A)``, one-dimensional in total degree ``-lie_dim``.
    """

    n: int
    dims: Homology
    total: dict[int, int]
    generator_total: dict[int, int]
    gorenstein_total: dict[int, int]
    ext_degree: int
    matches_shifted_algebra: bool
    generator: ExtClass
    upto: int

    @property
    def generator_degree(self) -> int:
        return self.generator.total_degree

    def one_dimensional(self) -> bool:
        return list(self.generator_total.values()) == [1]


def _total(H: Homology, low: int, high: int) -> dict[int, int]:
    return {t: d for t, d in H.total_degree_dims().items() if low <= t <= high}


def gorenstein_ext(a: FreeGCAlgebra, upto: int | None = None) -> dict[int, int]:
    """Total-degree dims of ``Ext_A(k, A)`` (dual of the Koszul resolution of the field)."""
    res = koszul_resolution_of_field(a)
    H = homology(dual_complex(res.complex), a.truncation if upto is None else upto)
    return H.total_degree_dims()


def ext_into_ring(a: FreeGCAlgebra, n: int = 2, upto: int | None = None,
                  resolution: ChainComplex | None = None) -> ExtResult:
    """``Ext_{A^{(x)n}}(A, A^{(x)n})`` as homology of ``Hom(P, R)``, ``P`` the iterated resolution."""
    P = resolution if resolution is not None else _diagonal_resolution(a, n).complex
    D = a.truncation if upto is None else upto
    dual = dual_complex(P)
    H = homology(dual, D)
    N = max(P.hom_degrees())
    top = P.gens[N][0]
    ps = a.poincare_series(D + top + 1)
    shifted = all(H.dims.get((-N, i), 0) == ps[i + top] for i in range(-top, D + 1))
    shifted = shifted and all(h == -N for (h, _), d in H.dims.items() if d)
    G = homology_generator_dims(dual, D)
    if n >= 2:
        gen = shriek_class(a, n)
    else:
        gen = identity_class(a, 1)
    low, high = N - top, N + D
    return ExtResult(
        n,
        H,
        _total(H, low, high),
        _total(G, low, high),
        gorenstein_ext(a, D),
        N,
        shifted,
        gen,
        D,
    )


# ---------------------------------------------------------------------------
# Koszul subcomplexes and contraction links


def _koszul_on(R: FreeGCAlgebra, elements: Sequence[dict], degrees: Sequence[int], subset: Sequence[int],
               name: str = "") -> ChainComplex:
    """Koszul complex on ``elements[t]`` for ``t`` in ``subset``, labelled by global indices."""
    subset = sorted(subset)
    K = koszul_complex(R, [elements[t] for t in subset], [degrees[t] for t in subset], name=name)
    labels = {h: tuple(tuple(subset[u] for u in T) for T in K.labels[h]) for h in K.gens}
    return ChainComplex(R, K.gens, K.diffs, labels, name, K.factors, check=False)


def contraction(src: ChainComplex, tgt: ChainComplex, group: Sequence[int], degrees: Sequence[int]) -> ChainMap:
    """``y_U ^ y_G -> (-1)^{t|U|} y_U`` and zero on wedges not containing ``y_G``.

    ``src`` and ``tgt`` are Koszul complexes labelled by global element
    indices with ``tgt``'s elements those of ``src`` minus ``group``.  The
    sign makes the map a chain map of total degree ``t``.
    """
    G = tuple(sorted(group))
    gset = set(G)
    R = src.ring
    f = R.field
    hs = len(G)
    es = -sum(degrees[g] for g in G)
    t = hs + es
    maps: dict[int, PolyMatrix] = {}
    for h in src.hom_degrees():
        if (h - hs) not in tgt.gens:
            continue
        tidx = {lab: n for n, lab in enumerate(tgt.labels[h - hs])}
        entries = {}
        for c, T in enumerate(src.labels[h]):
            if not gset <= set(T):
                continue
            U = tuple(x for x in T if x not in gset)
            inv = sum(1 for u in U for g in G if u > g)
            sign = (-1) ** (inv + t * len(U))
            entries[(tidx[U], c)] = {R.unit: f.one if sign > 0 else f.neg(f.one)}
        if entries:
            maps[h] = PolyMatrix(tgt.rank(h - hs), src.rank(h), entries)
    return ChainMap(src, tgt, hs, es, maps, name=f"contract{list(G)}")


def link_class(a: FreeGCAlgebra, k: int) -> ExtClass:
    """Shriek class of ``A^{(x)k} -> A^{(x)(k+1)}`` (doubling the last copy).

    The source resolution is the Koszul complex on ``x_{k,j} - x_{k+1,j}``
    over ``A^{(x)(k+1)}``, resolving ``A^{(x)k}``; the class sends its top
    wedge to 1.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    _require_even(a)
    R = tensor_power(a, k + 1)
    f = a.field
    elements = []
    for j in range(a.ngens):
        e1 = [0] * R.ngens
        e2 = [0] * R.ngens
        e1[copy_var(a, k, j)] = 1
        e2[copy_var(a, k + 1, j)] = 1
        elements.append({tuple(e1): f.one, tuple(e2): f.neg(f.one)})
    Q = koszul_complex(R, elements, list(a.degrees), name=f"K(v_{k})")
    Rk = tensor_power(a, k) if k > 1 else a
    images = [copy_var(a, min(c, k), j) for c in range(1, k + 2) for j in range(a.ngens)]
    module = restrict_module(free_module(Rk, (0,), "A^k"), R, images)
    res = FreeResolution(Q, module, {0: {0: f.one}}, Q.is_minimal(), a.ngens)
    psi = _top_dual(Q, ring_complex(R))
    psi.name = f"link({k})"
    return ExtClass(psi, res, psi.name)


# ---------------------------------------------------------------------------
# Yoneda composition


@dataclass
class YonedaResult:
    """The composite class, the lifted comparison map, and how the composite
    compares with the shriek class of the larger ring (``coefficient`` c with
    composite = c * shriek, or None when no such comparison applies)."""

    composite: ExtClass
    lift: ChainMap
    coefficient: object = None


def _comparison_kill_last(a: FreeGCAlgebra, k: int, Pbig: ChainComplex, Psmall: ChainComplex) -> dict[int, dict[int, dict]]:
    """``P' -> P_k`` over ``pi : A^{(x)(k+1)} -> A^{(x)k}``: wedges containing a ``y_{k,j}`` die,
    the rest keep their labels.  Returned as {h: {col: {row: coefficient poly over A^{(x)k}}}}."""
    Rk = Psmall.ring
    f = a.field
    out: dict[int, dict[int, dict]] = {}
    for h in Pbig.hom_degrees():
        if h not in Psmall.gens:
            continue
        idx = {lab: r for r, lab in enumerate(Psmall.labels[h])}
        cols = {}
        for c, T in enumerate(Pbig.labels[h]):
            pairs = [(t // k, t % k) for t in T]  # (generator j, copy index c-1) in P'
            if any(ci == k - 1 for _, ci in pairs):
                continue
            small = tuple(j * (k - 1) + ci for j, ci in pairs)
            cols[c] = {idx[small]: {Rk.unit: f.one}}
        out[h] = cols
    return out


def _restrict_poly(p: dict, images: Sequence[int], ngens: int) -> dict:
    out = {}
    for e, c in p.items():
        full = [0] * ngens
        for k, x in enumerate(e):
            if x:
                full[images[k]] += x
        out[tuple(full)] = c
    return out


def yoneda_compose(phi: ExtClass, psi: ExtClass) -> YonedaResult:
    """Yoneda product ``psi . phi`` by the comparison theorem.

    Two shapes are supported:

    * same ring: ``psi``'s resolution resolves the target ring of ``phi``,
      and ``phi`` lifts into it directly;
    * ``phi`` the shriek class over ``A^{(x)k}`` and ``psi = link_class(a, k)``:
      ``phi`` is pulled back to the iterated resolution over ``A^{(x)(k+1)}``
      (killing the new Koszul generators), lifted through the Koszul
      resolution of ``psi`` degree by degree, and composed with ``psi``.
    """
    f = phi.ring.field
    Q = psi.resolution.complex
    if Q.rank(0) != 1 or psi.resolution.augmentation != {0: {0: f.one}}:
        raise ValueError("psi's resolution must be cyclic with augmentation 1 -> 1")
    if phi.map.target.rank(0) != 1 or phi.map.target.hom_degrees() != [0]:
        raise ValueError("phi must land in the ring in homological degree 0")
    e = phi.internal_degree
    N = phi.ext_degree
    t = N + e
    if psi.ring == phi.ring:
        Rbig = phi.ring
        Pbig = phi.resolution.complex
        bottom = {c: dict(phi.map.component(N).column(c)) for c in range(Pbig.rank(N))} if N in Pbig.gens else {}
        base = None
    else:
        a = phi.resolution.koszul.algebra if phi.resolution.koszul else None
        if a is None:
            raise ValueError("unsupported Yoneda shape")
        k = phi.resolution.koszul.copies
        Rbig = psi.ring
        if Rbig.generators != tensor_power(a, k + 1).generators:
            raise ValueError("psi must be the link class over A^(k+1)")
        big = _diagonal_resolution(a, k + 1)
        Pbig = big.complex
        comp = _comparison_kill_last(a, k, Pbig, phi.resolution.complex)
        Rk = phi.ring
        section = list(range(Rk.ngens))  # copy c generator j -> same slot in A^(k+1)
        phiN = phi.map.component(N)
        bottom = {}
        for c, col in comp.get(N, {}).items():
            acc: dict = {}
            for r, p in col.items():
                q = phiN.column(r).get(0)
                if not q:
                    continue
                prod = Rk.poly_mul(q, p)
                for ex, v in prod.items():
                    nv = f.add(acc.get(ex, f.zero), v)
                    if nv:
                        acc[ex] = nv
                    else:
                        acc.pop(ex, None)
            if acc:
                bottom[c] = {0: _restrict_poly(acc, section, Rbig.ngens)}
        base = big
    # lift degree by degree: d_Q F_h = (-1)^t F_{h-1} d_P
    maps: dict[int, PolyMatrix] = {}
    if bottom:
        maps[N] = PolyMatrix(Q.rank(0), Pbig.rank(N), {(r, c): p for c, col in bottom.items() for r, p in col.items()})
    sign = f.neg(f.one) if t % 2 else f.one
    for h in range(N + 1, max(Pbig.hom_degrees()) + 1):
        prev = maps.get(h - 1)
        if prev is None or h not in Pbig.gens:
            continue
        rhs_all = prev.compose(Rbig, Pbig.diff(h)).scaled(f, sign)
        if rhs_all.is_zero():
            continue
        qh = h - N
        entries = {}
        for c, col in enumerate(rhs_all.columns()):
            if not col:
                continue
            deg = Pbig.gens[h][c] + e
            if qh not in Q.gens:
                raise InvariantError("lift needs a nonzero component beyond the resolution")
            vec = Q.polys_to_vector(qh - 1, deg, col)
            sol = solve(Q.diff_block(qh, deg), vec, f)
            if not sol.consistent:
                raise InvariantError(f"lifting system inconsistent at degree {h}")
            for r, p in Q.vector_to_polys(qh, deg, sol.particular).items():
                entries[(r, c)] = p
        if entries:
            maps[h] = PolyMatrix(Q.rank(qh), Pbig.rank(h), entries)
    F = ChainMap(Pbig, Q, N, e, maps, name=f"lift({phi.name})")
    G = compose(F, psi.map)
    G.name = f"({psi.name} . {phi.name})"
    res = base if base is not None else phi.resolution
    out = ExtClass(G, res, G.name)
    coeff = None
    if base is not None:
        top = max(Pbig.hom_degrees())
        m = G.maps.get(top)
        if G.hshift == top and Pbig.rank(top) == 1:
            coeff = (m.entries.get((0, 0), {}).get(Rbig.unit, f.zero)) if m else f.zero
    return YonedaResult(out, F, coeff)


# ---------------------------------------------------------------------------
# ghost chains


@dataclass
class GhostChainCertificate:
    """A chain of ghosts ``P = K_0 -> K_1 -> ... -> K_m`` over ``A^{(x)n}``.

    ``groups[i]`` lists the Koszul elements contracted by link ``i``.  The
    composite is certified non-null-homotopic by an inconsistent homotopy
    system (``obstruction_degree``, ``witness``); ``shriek_coefficient`` is
    the scalar by which it differs from the shriek class.
    """

    algebra: FreeGCAlgebra
    n: int
    groups: list[tuple[int, ...]]
    complexes: list[ChainComplex]
    links: list[ChainMap]
    ghost_reports: list[GhostReport]
    composite: ChainMap | None
    null_homotopic: bool | None
    obstruction_degree: int | None
    witness: dict | None
    shriek_coefficient: object
    upto: int
    ok: bool
    failure: str = ""
    yoneda_coefficients: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.links)

    @property
    def composite_degree(self) -> int | None:
        return self.composite.total_degree if self.composite is not None else None


def _diagonal_groups(a: FreeGCAlgebra, n: int, fine: bool) -> list[tuple[int, ...]]:
    m = n - 1
    if fine:
        return [(j * m + (c - 1),) for c in range(1, n) for j in range(a.ngens)]
    return [tuple(j * m + (c - 1) for j in range(a.ngens)) for c in range(1, n)]


def ghost_chain_certificate(a: FreeGCAlgebra, n: int, fine: bool = False, upto: int | None = None,
                            yoneda: bool = False) -> GhostChainCertificate:
    """Chain of shriek links out of the iterated resolution of A over ``A^{(x)n}``.

    With ``fine=False`` link ``c`` contracts ``y_{c,1..s}`` (the shriek of
    doubling one more copy), giving ``n - 1`` ghosts.  With ``fine=True``
    every Koszul generator is contracted on its own, giving ``s(n - 1)``
    ghosts.  In both cases the composite is the top dual, which is certified
    non-null-homotopic.  ``yoneda=True`` also rebuilds the shriek classes
    one copy at a time with :func:`yoneda_compose` and records the scalars.
    """
    if n < 2:
        raise ValueError("ghost chains need n >= 2")
    _require_even(a)
    D = a.truncation if upto is None else upto
    R, elements, kd = koszul_elements(a, n)
    degrees = kd.internal_degrees
    groups = _diagonal_groups(a, n, fine)
    remaining = list(range(len(elements)))
    base = _diagonal_resolution(a, n).complex
    complexes = [ChainComplex(R, base.gens, base.diffs, base.labels, base.name, base.factors, check=False)]
    links, reports = [], []
    cert = GhostChainCertificate(a, n, groups, complexes, links, reports, None, None, None, None, None, D, False)
    for g in groups:
        remaining = [t for t in remaining if t not in g]
        nxt = _koszul_on(R, elements, degrees, remaining, name=f"K{remaining}")
        try:
            link = contraction(complexes[-1], nxt, g, degrees)
        except ComplexError as exc:
            cert.failure = f"link {g}: {exc}"
            return cert
        rep = is_ghost(link, D)
        complexes.append(nxt)
        links.append(link)
        reports.append(rep)
        if not rep:
            cert.failure = f"link {g} is not a ghost (degree {rep.failure})"
            return cert
    comp = links[0]
    for link in links[1:]:
        comp = compose(comp, link)
    cert.composite = comp
    top = max(base.hom_degrees())
    m = comp.maps.get(top)
    f = a.field
    cert.shriek_coefficient = m.entries.get((0, 0), {}).get(R.unit, f.zero) if m else f.zero
    hres = is_null_homotopic(comp)
    cert.null_homotopic = hres.null
    if hres.null:
        cert.failure = "composite is null-homotopic"
        return cert
    cert.obstruction_degree = hres.obstruction_degree
    cert.witness = hres.witness
    if not check_obstruction(comp, hres.obstruction_degree, hres.witness):
        cert.failure = "obstruction witness does not re-verify"
        return cert
    if yoneda:
        cert.yoneda_coefficients = yoneda_chain(a, n)
        if not all(cert.yoneda_coefficients):
            cert.failure = "Yoneda composite vanished"
            return cert
    cert.ok = True
    return cert


def yoneda_chain(a: FreeGCAlgebra, n: int) -> list:
    """Scalars ``c_k`` with ``link(k) . shriek(k) = c_k shriek(k + 1)``, for ``k = 2..n-1``."""
    out = []
    phi = shriek_class(a, 2)
    for k in range(2, n):
        res = yoneda_compose(phi, link_class(a, k))
        out.append(res.coefficient)
        phi = res.composite
    return out


# ---------------------------------------------------------------------------
# level


@dataclass
class LevelCertificate:
    """Certified interval ``lower <= level <= upper`` for A over ``A^{(x)n}``."""

    algebra: FreeGCAlgebra
    n: int
    lower: int
    upper: int
    exact: bool
    pd: int
    formula_value: int
    upper_evidence: FreeResolution | None
    lower_evidence: GhostChainCertificate | None
    raw_chain: GhostChainCertificate | None
    upto: int
    pd_cross_check: int | None = None

    @property
    def value(self) -> int | None:
        return self.lower if self.exact else None


def level_bounds(a: FreeGCAlgebra, n: int, upto: int | None = None, cross_check: bool = False) -> LevelCertificate:
    """Lower bound from ghost chains (length + 1), upper bound from the minimal
    iterated resolution (length + 1).  Exact when all generators are even and
    the generator-by-generator chain of length ``s(n - 1)`` certifies."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_even(a)
    D = a.truncation if upto is None else upto
    s = a.ngens
    formula = (n - 1) * s + 1
    res = _diagonal_resolution(a, n)
    if not res.minimal:
        raise InvariantError("iterated resolution is not minimal")
    pd = res.length
    upper = pd + 1
    xc = None
    if cross_check:
        xc = projective_dimension(restrict_to_tensor_power(free_module(a), n), upto=D).value
        if xc != pd:
            raise InvariantError(f"projective dimension mismatch: {xc} vs {pd}")
    if n == 1 or s == 0:
        # A is free of rank one over itself: level 1, no ghost needed
        return LevelCertificate(a, n, 1, upper, upper == 1, pd, formula, res, None, None, D, xc)
    raw = ghost_chain_certificate(a, n, fine=False, upto=D)
    fine = ghost_chain_certificate(a, n, fine=True, upto=D)
    lower = max(n if raw.ok else 1, fine.length + 1 if fine.ok else 1)
    if lower > upper:
        raise InvariantError(f"lower bound {lower} exceeds upper bound {upper}")
    exact = fine.ok and lower == upper
    return LevelCertificate(a, n, lower, upper, exact, pd, formula, res, fine, raw, D, xc)


# ---------------------------------------------------------------------------
# random ghosts


@dataclass
class GhostSpace:
    """Chain maps ``P -> T`` of shifts (k, e) that are ghosts, as coordinate vectors."""

    space: HomSpace
    basis: list[dict]

    @property
    def dim(self) -> int:
        return len(self.basis)


def _apply_coords(space: HomSpace, vec: dict, h: int, i: int, z: dict) -> dict:
    """Image of block vector ``z`` (source block (h, i)) under the map with coordinates ``vec``."""
    P, Q, k, e = space.P, space.Q, space.k, space.e
    f = P.field
    if (h - k) not in Q.gens:
        return {}
    blk = P.block(h, i)
    tidx = Q.block_index(h - k, i + e)
    out: dict = {}
    for n, v in z.items():
        g, mono = blk[n]
        off, size = space.slot(h, g)
        if not size:
            continue
        qblk = Q.block(h - k, P.gens[h][g] + e)
        for c in range(off, off + size):
            x = vec.get(c)
            if not x:
                continue
            qg, qe = qblk[c - off]
            r = tidx[(qg, tuple(a + b for a, b in zip(qe, mono)))]
            nv = f.add(out.get(r, f.zero), f.mul(v, x))
            if nv:
                out[r] = nv
            else:
                out.pop(r, None)
    return out


def ghost_space(P: ChainComplex, T: ChainComplex, k: int, e: int, upto: int | None = None) -> GhostSpace:
    """Basis of the ghost chain maps: the kernel of ``f -> H(f)`` on the chain-map space.

    ``H(f)`` is evaluated on source homology in module-generator degrees
    ``i <= upto`` (enough by R-linearity) and reduced modulo target boundaries.
    """
    D = P.truncation if upto is None else upto
    space, cmaps = chain_map_space(P, T, k, e)
    if not cmaps:
        return GhostSpace(space, [])
    gens = homology_generator_dims(P, D)
    th = homology(T, D + max(e, 0))
    f = P.field
    cols: list[dict] = [dict() for _ in cmaps]
    offset = 0
    for (h, i), d in sorted(gens.dims.items()):
        if not d or not th.dims.get((h - k, i + e)):
            continue
        reps = homology_reps(P).reps(h, i)
        bounds = homology_reps(T).boundaries(h - k, i + e)
        width = T.dim(h - k, i + e)
        for z in reps:
            for b, v in enumerate(cmaps):
                red, _ = bounds.reduce(_apply_coords(space, v, h, i, z))
                for r, x in red.items():
                    cols[b][offset + r] = x
            offset += width
    if offset == 0:
        return GhostSpace(space, list(cmaps))
    combos = kernel_basis(SparseMatrix.from_columns(cols, offset, f))
    basis = []
    for c in combos:
        v: dict = {}
        for b, a in c.items():
            for r, x in cmaps[b].items():
                nv = f.add(v.get(r, f.zero), f.mul(a, x))
                if nv:
                    v[r] = nv
                else:
                    v.pop(r, None)
        if v:
            basis.append(v)
    return GhostSpace(space, basis)


def random_ghost(gs: GhostSpace, rng: random.Random, name: str = "ghost") -> ChainMap | None:
    """A seeded random nonzero combination of the ghost basis (None if the space is zero)."""
    if not gs.basis:
        return None
    f = gs.space.P.field
    while True:
        coeffs = [f.random_element(rng) for _ in gs.basis]
        if any(coeffs):
            break
    v: dict = {}
    for a, b in zip(coeffs, gs.basis):
        if not a:
            continue
        for r, x in b.items():
            nv = f.add(v.get(r, f.zero), f.mul(a, x))
            if nv:
                v[r] = nv
            else:
                v.pop(r, None)
    if not v:
        return random_ghost(gs, rng, name)
    return gs.space.map_of(v, name=name)


def _random_poly(R: FreeGCAlgebra, degree: int, rng: random.Random) -> dict:
    f = R.field
    out = {}
    for e in R.basis(degree):
        c = f.random_element(rng)
        if c:
            out[e] = c
    if not out and R.basis(degree):
        out[R.basis(degree)[0]] = f.one
    return out


def target_pool(R: FreeGCAlgebra, rng: random.Random) -> list[ChainComplex]:
    """Small free complexes over R: Koszul complexes on the generators and on
    a prefix of them, and a two-term complex ``R[d] -> R`` given by a random element."""
    pool = []
    gens = [R.poly_gen(k) for k in range(R.ngens)]
    if R.ngens:
        pool.append(koszul_complex(R, gens, list(R.degrees), name="K(k)"))
        pool.append(koszul_complex(R, gens[:1], [R.degrees[0]], name="K(x1)"))
        d = R.degrees[-1]
        p = _random_poly(R, d, rng)
        pool.append(ChainComplex(R, {0: (0,), 1: (d,)}, {1: PolyMatrix(1, 1, {(0, 0): p})}, name=f"R[{d}]->R"))
    pool.append(ring_complex(R))
    return pool


@dataclass
class TrialRecord:
    target: str
    hshift: int
    ishift: int
    ghost: bool
    null_homotopic: bool
    homotopy_verified: bool
    map: ChainMap | None = field(default=None, repr=False)
    homotopy: ChainMap | None = field(default=None, repr=False)


@dataclass
class LoopGhostCertificate:
    """Freeness witness for the loop-space module plus a log of sampled ghosts."""

    algebra: FreeGCAlgebra
    freeness: FreenessResult
    trials: list[TrialRecord]
    seed: int
    ok: bool
    failure: str = ""
    offending: ChainMap | None = None
    source: ChainComplex | None = field(default=None, repr=False)
    pool: list[ChainComplex] = field(default_factory=list, repr=False)

    @property
    def null_count(self) -> int:
        return sum(1 for t in self.trials if t.null_homotopic)


def _pick_ghost(P: ChainComplex, pool: Sequence[ChainComplex], shifts: Sequence[tuple[int, int]], D: int,
                cache: dict, rng: random.Random) -> tuple[ChainComplex, int, int, GhostSpace] | None:
    """A uniformly random (target, shifts) among those with nonzero ghost space.

    Candidates are visited in a seeded random order and ghost spaces are
    computed lazily (and cached), so the first nonzero one is uniform among
    all nonzero ones.
    """
    order = [(T, k, e) for T in pool for k, e in shifts]
    rng.shuffle(order)
    for T, k, e in order:
        key = (id(P), id(T), k, e)
        if key not in cache:
            cache[key] = ghost_space(P, T, k, e, D)
        if cache[key].dim:
            return T, k, e, cache[key]
    return None


def loop_ghost_triviality(a: FreeGCAlgebra, trials: int = 100, seed: int = 0, module: GradedModule | None = None,
                          upto: int | None = None) -> LoopGhostCertificate:
    """Every ghost out of a free module is null-homotopic.

    The module (the loop-space model by default) must test free; then
    ``trials`` seeded random ghosts from its minimal resolution into small
    target complexes are built and each one is solved for a null-homotopy.
    A non-free module is refused before any sampling.
    """
    from .catalog import loop_module

    m = module if module is not None else loop_module(a)
    rng = random.Random(seed)
    D = a.truncation if upto is None else upto
    fr = is_free(m, D)
    cert = LoopGhostCertificate(a, fr, [], seed, False)
    if not fr:
        cert.failure = f"module is not free (relation in degree {fr.relation_degree})"
        return cert
    if a.ngens == 0:
        cert.ok = True
        return cert
    P = minimal_resolution(m, cap=1, upto=D).complex
    pool = target_pool(a, rng)
    cert.source, cert.pool = P, pool
    top = max(a.degrees)
    shifts = [(k, e) for k in (0, -1) for e in range(0, 2 * top + 1, 1)]
    cache: dict = {}
    for _ in range(trials):
        pick = _pick_ghost(P, pool, shifts, D, cache, rng)
        if pick is None:
            cert.failure = "no nonzero ghosts found to sample"
            return cert
        T, k, e, gs = pick
        g = random_ghost(gs, rng)
        rep = is_ghost(g, D)
        res = is_null_homotopic(g, want_witness=True)
        rec = TrialRecord(T.name, k, e, bool(rep), res.null, res.null, g, res.homotopy)
        cert.trials.append(rec)
        if not rep:
            cert.failure = "sampled map is not a ghost"
            cert.offending = g
            return cert
        if not res.null:
            cert.failure = "found a ghost that is not null-homotopic"
            cert.offending = g
            return cert
    cert.ok = True
    return cert


@dataclass
class CompositeTrial:
    steps: list[tuple[str, int, int]]
    null_homotopic: bool
    nonzero_chain: bool


@dataclass
class CompositeGhostReport:
    """Composites of ``length`` random ghosts out of A over ``A^{(x)n}``."""

    algebra: FreeGCAlgebra
    n: int
    length: int
    trials: list[CompositeTrial]
    seed: int
    ok: bool
    failure: str = ""

    @property
    def null_count(self) -> int:
        return sum(1 for t in self.trials if t.null_homotopic)


def diagonal_pool(a: FreeGCAlgebra, n: int) -> list[ChainComplex]:
    """Koszul complexes on every subset of the diagonal Koszul elements."""
    R, elements, kd = koszul_elements(a, n)
    pool = []
    for r in range(len(elements) + 1):
        for sub in itertools.combinations(range(len(elements)), r):
            pool.append(_koszul_on(R, elements, kd.internal_degrees, sub, name=f"K{list(sub)}"))
    return pool


def composite_ghost_trials(a: FreeGCAlgebra, n: int, trials: int = 50, seed: int = 0, length: int | None = None,
                           upto: int | None = None) -> CompositeGhostReport:
    """Seeded chains of ``length`` (default ``pd + 1``) random ghosts out of the
    iterated resolution, each composite solved for a null-homotopy."""
    _require_even(a)
    D = a.truncation if upto is None else upto
    rng = random.Random(seed)
    res = _diagonal_resolution(a, n)
    L = res.length + 1 if length is None else length
    pool = diagonal_pool(a, n)
    P = ChainComplex(res.ring, res.complex.gens, res.complex.diffs, pool[-1].labels, "P", res.complex.factors,
                     check=False)
    pool[-1] = P
    degs = sorted(set(a.degrees))
    shifts = sorted({(k, e) for k in (-1, 0, 1) for e in [0] + degs + [-d for d in degs]})
    report = CompositeGhostReport(a, n, L, [], seed, False)
    cache: dict = {}
    for _ in range(trials):
        cur = P
        comp = None
        steps = []
        for _step in range(L):
            pick = _pick_ghost(cur, pool, shifts, D, cache, rng)
            if pick is None:
                break
            T, k, e, gs = pick
            g = random_ghost(gs, rng)
            if not is_ghost(g, D):
                report.failure = "sampled map is not a ghost"
                return report
            comp = g if comp is None else compose(comp, g)
            steps.append((T.name, k, e))
            cur = T
        if comp is None or len(steps) < L:
            report.trials.append(CompositeTrial(steps, True, False))
            continue
        hres = is_null_homotopic(comp)
        report.trials.append(CompositeTrial(steps, hres.null, not comp.is_zero()))
        if not hres.null:
            report.failure = f"composite of {L} ghosts is not null-homotopic: {steps}"
            return report
    report.ok = True
    return report


# ---------------------------------------------------------------------------
# dimension counts


@dataclass(frozen=True)
class EMCheck:
    """E2 series three ways, in total degrees below ``stop``."""

    ok: bool
    e2: GradedDims
    balanced: GradedDims
    direct: GradedDims
    zero_differential: bool
    first_mismatch: int | None


def em_collapse_check(a: FreeGCAlgebra, n: int, upto: int | None = None,
                      resolution: ChainComplex | None = None) -> EMCheck:
    """E2 = H(P (x)_R L) for the loop module L over R = A^{(x)n} (all copies acting alike).

    Checks that the induced differential vanishes and that the series equals
    both ``PS(R) PS(Lambda) PS(L) / PS(R)`` and ``PS(A) prod (1 + t^{d_j - 1})^n``.
    """
    from .catalog import loop_module

    D = a.truncation if upto is None else upto
    L = loop_module(a)
    P = resolution if resolution is not None else _diagonal_resolution(a, n).complex
    Lr = restrict_to_tensor_power(L, n) if n > 1 else L
    V = tensor_with_module(P, Lr)
    N = max(P.hom_degrees())
    stop = D - N + 1
    zero = all(V.diff_block(h, i).is_zero() for h in P.hom_degrees() for i in V.internal_range(D) if V.dim(h, i))
    H = homology(V, D)
    tot = H.total_degree_dims()
    e2 = GradedDims.from_dict(tot, 0, stop)
    R = P.ring
    psR = R.poincare_series(stop)
    lam = exterior_series([d - 1 for d in a.degrees] * (n - 1), stop)
    psL = GradedDims(L.dims[:stop])
    balanced = psR.times(lam, stop).times(psL, stop).divide(psR, stop)
    direct = a.poincare_series(stop).times(exterior_series([d - 1 for d in a.degrees] * n, stop), stop)
    mism = None
    for t in range(stop):
        if not (e2[t] == balanced[t] == direct[t]):
            mism = t
            break
    return EMCheck(mism is None and zero, e2, balanced, direct, zero, mism)


@dataclass(frozen=True)
class TransgressionCheck:
    ok: bool
    series: GradedDims
    expected: GradedDims
    zero_differential: bool


def transgression_check(a: FreeGCAlgebra, upto: int | None = None) -> TransgressionCheck:
    """``Tor^{A (x) A}(A, k)`` has series ``prod (1 + t^{deg x_j - 1})`` with zero differential."""
    _require_even(a)
    if a.ngens == 0:
        one = GradedDims((1,))
        return TransgressionCheck(True, one, one, True)
    t = tor(a, 2, upto=upto)
    stop = t.series.stop
    expected = exterior_series([d - 1 for d in a.degrees], stop)
    got = GradedDims.from_dict(t.series.as_dict(), 0, stop)
    return TransgressionCheck(got == expected and t.zero_differential, got, expected, t.zero_differential)

