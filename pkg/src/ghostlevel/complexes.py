"""Chain complexes of free graded modules, chain maps, homology and homotopies.

Conventions
-----------
* Differentials lower the homological degree ``h`` and preserve the internal
  degree ``i``; the total degree of an element is ``i - h``.
* A chain map of homological shift ``k`` and internal shift ``e`` sends
  ``C_h`` in internal degree ``i`` to ``D_{h-k}`` in internal degree ``i + e``.
  Its total degree is ``t = e + k`` and it satisfies ``d f = (-1)^t f d``.
* A null-homotopy of ``f`` is a map ``H`` of shifts ``(k - 1, e)`` with
  ``f = d H + (-1)^t H d``.

Complexes are built over polynomial rings (all generators even).  Every
R-linear map is a :class:`PolyMatrix`; linear algebra happens on the finite
blocks ``C_{h,i}`` with basis ``(generator, monomial)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .exactla import (
    Echelon,
    FieldSpec,
    SparseMatrix,
    axpy,
    kernel_basis,
    solve,
)
from .graded import FreeGCAlgebra, GradedModule, Poly


class ComplexError(ValueError):
    """Malformed complex or chain map (shape, grading, d^2 != 0, ...)."""


class UndecidableError(ValueError):
    """The requested degree lies beyond the truncation."""


# ---------------------------------------------------------------------------
# polynomial matrices


class PolyMatrix:
    """R-linear map between free modules; ``entries[(row, col)]`` is a polynomial."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Mapping[tuple[int, int], Poly] | None = None) -> None:
        self.rows = rows
        self.cols = cols
        self.entries = {k: dict(v) for k, v in (entries or {}).items() if v}
        for r, c in self.entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ComplexError(f"entry ({r}, {c}) outside {rows}x{cols}")

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols}, {len(self.entries)} nonzero)"

    def is_zero(self) -> bool:
        return not self.entries

    def column(self, c: int) -> dict[int, Poly]:
        return {r: p for (r, cc), p in self.entries.items() if cc == c}

    def columns(self) -> list[dict[int, Poly]]:
        out: list[dict[int, Poly]] = [dict() for _ in range(self.cols)]
        for (r, c), p in self.entries.items():
            out[c][r] = p
        return out

    def compose(self, ring: FreeGCAlgebra, other: "PolyMatrix") -> "PolyMatrix":
        """``self o other``."""
        if self.cols != other.rows:
            raise ComplexError(f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        left_cols = self.columns()
        terms: dict[tuple[int, int], list] = {}
        for (m, c), q in other.entries.items():
            for r, p in left_cols[m].items():
                terms.setdefault((r, c), []).append((p, q))
        out = {key: ring.poly_dot(pairs) for key, pairs in terms.items()}
        return PolyMatrix(self.rows, other.cols, out)

    def scaled(self, f: FieldSpec, a) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols, {k: {e: f.mul(a, v) for e, v in p.items()} for k, p in self.entries.items()})

    def plus(self, f: FieldSpec, other: "PolyMatrix") -> "PolyMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ComplexError("shape mismatch in sum")
        out = {k: dict(p) for k, p in self.entries.items()}
        for k, p in other.entries.items():
            cur = out.setdefault(k, {})
            for e, v in p.items():
                nv = f.add(cur.get(e, f.zero), v)
                if nv:
                    cur[e] = nv
                else:
                    cur.pop(e, None)
        return PolyMatrix(self.rows, self.cols, out)

    def equals(self, other: "PolyMatrix") -> bool:
        return (self.rows, self.cols) == (other.rows, other.cols) and self.entries == other.entries

    def encode(self, ring: FreeGCAlgebra) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[r, c, ring.encode_poly(p)] for (r, c), p in sorted(self.entries.items())],
        }

    @classmethod
    def decode(cls, ring: FreeGCAlgebra, data: Mapping) -> "PolyMatrix":
        return cls(data["rows"], data["cols"], {(r, c): ring.decode_poly(p) for r, c, p in data["entries"]})


def _zero_matrix(rows: int, cols: int) -> PolyMatrix:
    return PolyMatrix(rows, cols)


# ---------------------------------------------------------------------------
# graded complexes of vector spaces (protocol) and homology


class _BlockComplex:
    """Shared block-level interface: dims and differential matrices per (h, i)."""

    field: FieldSpec
    truncation: int

    def hom_degrees(self) -> list[int]:
        raise NotImplementedError

    def internal_range(self, upto: int) -> range:
        raise NotImplementedError

    def dim(self, h: int, i: int) -> int:
        raise NotImplementedError

    def diff_block(self, h: int, i: int) -> SparseMatrix:
        raise NotImplementedError

    def _rank(self, h: int, i: int) -> int:
        cache = self.__dict__.setdefault("_rank_cache", {})
        key = (h, i)
        if key not in cache:
            if self.dim(h, i) == 0 or self.dim(h - 1, i) == 0:
                cache[key] = 0
            else:
                m = self.diff_block(h, i)
                cache[key] = len(_echelon_of_columns(m))
        return cache[key]


def _echelon_of_columns(m: SparseMatrix) -> Echelon:
    ech = Echelon(m.field)
    for col in m.column_dicts():
        if col:
            ech.add(col)
    return ech


@dataclass(frozen=True)
class Homology:
    """Bigraded homology dimensions ``dims[(h, i)]``, complete for ``i <= upto``."""

    dims: Mapping[tuple[int, int], int]
    upto: int

    def __getitem__(self, key: tuple[int, int]) -> int:
        h, i = key
        if i > self.upto:
            raise UndecidableError(f"internal degree {i} is beyond the truncation D={self.upto}")
        return self.dims.get(key, 0)

    def nonzero(self) -> dict[tuple[int, int], int]:
        return {k: v for k, v in sorted(self.dims.items()) if v}

    def total_degree_dims(self, max_total: int | None = None) -> dict[int, int]:
        out: dict[int, int] = {}
        for (h, i), d in self.dims.items():
            t = i - h
            if d and (max_total is None or t <= max_total):
                out[t] = out.get(t, 0) + d
        return dict(sorted(out.items()))

    def hom_degrees(self) -> list[int]:
        return sorted({h for (h, _), d in self.dims.items() if d})

    def internal_series(self, h: int) -> dict[int, int]:
        return {i: d for (hh, i), d in sorted(self.dims.items()) if hh == h and d}


def homology(c: "_BlockComplex", upto: int | None = None) -> Homology:
    """Homology dims ``dim ker d_h - dim im d_{h+1}`` per block, exact over the field.

    Complexes carrying a tensor factorization are computed by Kunneth from
    their (much smaller) factors.
    """
    upto = c.truncation if upto is None else upto
    memo = c.__dict__.setdefault("_homology_memo", {})
    if upto not in memo:
        memo[upto] = _homology(c, upto)
    return memo[upto]


def _homology(c: "_BlockComplex", upto: int) -> Homology:
    if getattr(c, "factors", None):
        return _kunneth(c, upto)
    dims: dict[tuple[int, int], int] = {}
    for h in c.hom_degrees():
        for i in c.internal_range(upto):
            n = c.dim(h, i)
            if not n:
                continue
            d = n - c._rank(h, i) - c._rank(h + 1, i)
            if d:
                dims[(h, i)] = d
    return Homology(dims, upto)


def _kunneth(c: "ChainComplex", upto: int) -> Homology:
    factors = c.factors
    lows = [fc.lowest_internal() for fc in factors]
    acc: dict[tuple[int, int], int] = {(0, 0): 1}
    for k, fc in enumerate(factors):
        others = sum(lows) - lows[k]
        fh = homology(fc, upto - others)
        nxt: dict[tuple[int, int], int] = {}
        for (h1, i1), d1 in acc.items():
            for (h2, i2), d2 in fh.dims.items():
                if not d2:
                    continue
                key = (h1 + h2, i1 + i2)
                nxt[key] = nxt.get(key, 0) + d1 * d2
        acc = nxt
    return Homology({k: v for k, v in acc.items() if v and k[1] <= upto}, upto)


def homology_generator_dims(c: "ChainComplex", upto: int | None = None) -> Homology:
    """Dimensions of ``H(C) (x)_R k``: minimal R-module generators of homology per (h, i).

    Tensor factorizations are used when present, since generators of a
    tensor product over the field are products of generators.
    """
    upto = c.truncation if upto is None else upto
    memo = c.__dict__.setdefault("_generator_memo", {})
    if upto not in memo:
        memo[upto] = _generator_dims(c, upto)
    return memo[upto]


def _generator_dims(c: "ChainComplex", upto: int) -> Homology:
    if c.factors:
        lows = [fc.lowest_internal() for fc in c.factors]
        acc: dict[tuple[int, int], int] = {(0, 0): 1}
        for k, fc in enumerate(c.factors):
            fh = homology_generator_dims(fc, upto - (sum(lows) - lows[k]))
            nxt: dict[tuple[int, int], int] = {}
            for (h1, i1), d1 in acc.items():
                for (h2, i2), d2 in fh.dims.items():
                    key = (h1 + h2, i1 + i2)
                    nxt[key] = nxt.get(key, 0) + d1 * d2
            acc = nxt
        return Homology({k: v for k, v in acc.items() if v and k[1] <= upto}, upto)
    if not c.diffs:
        out: dict[tuple[int, int], int] = {}
        for h, g in c.gens.items():
            for d in g:
                if d <= upto:
                    out[(h, d)] = out.get((h, d), 0) + 1
        return Homology(out, upto)
    H = homology(c, upto)
    reps = homology_reps(c)
    ring = c.ring
    out = {}
    for (h, i), d in sorted(H.dims.items()):
        bounds = reps.boundaries(h, i)
        ech = Echelon(c.field)
        for v in bounds.pivots.values():
            ech.add(v)
        base = len(ech)
        for k, dk in enumerate(ring.degrees):
            for z in reps.reps(h, i - dk):
                ech.add(c.times_generator(h, i - dk, z, k))
        g = d - (len(ech) - base)
        if g:
            out[(h, i)] = g
    return Homology(out, upto)


def euler_characteristic(c: "_BlockComplex", i: int) -> int:
    return sum((-1) ** h * c.dim(h, i) for h in c.hom_degrees())


# ---------------------------------------------------------------------------
# chain complexes of free modules


class ChainComplex(_BlockComplex):
    """Complex of free modules over a polynomial ring.

    ``gens[h]`` lists the internal degrees of the basis of ``C_h``;
    ``diffs[h]`` is ``d_h : C_h -> C_{h-1}``.  ``labels[h]`` optionally names
    the basis elements.  ``factors`` (set by constructors that know the
    complex is a tensor product over the ground field of complexes on
    disjoint sets of variables) lets :func:`homology` use Kunneth.
    """

    def __init__(
        self,
        ring: FreeGCAlgebra,
        gens: Mapping[int, Sequence[int]],
        diffs: Mapping[int, PolyMatrix] | None = None,
        labels: Mapping[int, Sequence] | None = None,
        name: str = "",
        factors: Sequence["ChainComplex"] | None = None,
        check: bool = True,
    ) -> None:
        if not ring.is_polynomial:
            raise ComplexError("complexes are supported over polynomial rings only (all generators even)")
        self.ring = ring
        self.field = ring.field
        self.truncation = ring.truncation
        self.gens = {h: tuple(int(d) for d in g) for h, g in gens.items() if len(g)}
        self.diffs: dict[int, PolyMatrix] = {}
        for h, m in (diffs or {}).items():
            if h in self.gens and (h - 1) in self.gens and not m.is_zero():
                self.diffs[h] = m
        self.labels = {h: tuple(labels[h]) for h in self.gens} if labels else {h: tuple(range(len(g))) for h, g in self.gens.items()}
        self.name = name
        self.factors = tuple(factors) if factors else ()
        self._blocks: dict = {}
        self._diff_blocks: dict = {}
        self._koszul_vars: object = False
        if check:
            self._validate()

    # -- construction checks ------------------------------------------------
    def _validate(self) -> None:
        ring = self.ring
        for h, m in self.diffs.items():
            src, tgt = self.gens[h], self.gens[h - 1]
            if (m.rows, m.cols) != (len(tgt), len(src)):
                raise ComplexError(f"d_{h} has shape {m.rows}x{m.cols}, expected {len(tgt)}x{len(src)}")
            for (r, c), p in m.entries.items():
                for e in p:
                    if ring.monomial_degree(e) != src[c] - tgt[r]:
                        raise ComplexError(f"d_{h} entry ({r}, {c}) is not homogeneous of degree {src[c] - tgt[r]}")
        for h in self.diffs:
            if h - 1 in self.diffs:
                dd = self.diffs[h - 1].compose(ring, self.diffs[h])
                if not dd.is_zero():
                    raise ComplexError(f"d_{h - 1} d_{h} != 0")

    # -- basic access ----------------------------------------------------
    def hom_degrees(self) -> list[int]:
        return sorted(self.gens)

    def rank(self, h: int) -> int:
        return len(self.gens.get(h, ()))

    def ranks(self) -> dict[int, int]:
        return {h: len(g) for h, g in sorted(self.gens.items())}

    def diff(self, h: int) -> PolyMatrix:
        m = self.diffs.get(h)
        if m is None:
            return _zero_matrix(self.rank(h - 1), self.rank(h))
        return m

    def lowest_internal(self) -> int:
        return min((min(g) for g in self.gens.values()), default=0)

    def internal_range(self, upto: int) -> range:
        return range(self.lowest_internal(), upto + 1)

    @property
    def length(self) -> int:
        hs = [h for h in self.gens]
        return max(hs) - min(hs) if hs else 0

    def is_minimal(self) -> bool:
        """All differential entries lie in the augmentation ideal."""
        return all(self.ring.augment(p) == 0 for m in self.diffs.values() for p in m.entries.values())

    # -- blocks -----------------------------------------------------------
    def block(self, h: int, i: int) -> list[tuple[int, tuple[int, ...]]]:
        key = (h, i)
        hit = self._blocks.get(key)
        if hit is None:
            ring = self.ring
            hit = [(g, e) for g, dg in enumerate(self.gens.get(h, ())) for e in ring.basis(i - dg)]
            self._blocks[key] = hit
            self._blocks[("idx",) + key] = {b: n for n, b in enumerate(hit)}
        return hit

    def block_index(self, h: int, i: int) -> dict:
        self.block(h, i)
        return self._blocks[("idx", h, i)]

    def dim(self, h: int, i: int) -> int:
        if h not in self.gens:
            return 0
        return len(self.block(h, i))

    def diff_block(self, h: int, i: int) -> SparseMatrix:
        key = (h, i)
        hit = self._diff_blocks.get(key)
        if hit is None:
            hit = self.expand(self.diff(h), h, h - 1, i, 0)
            self._diff_blocks[key] = hit
        return hit

    def expand(self, m: PolyMatrix, h_src: int, h_tgt: int, i: int, e: int, target: "ChainComplex | None" = None) -> SparseMatrix:
        """Matrix of the R-linear map ``m`` from block (h_src, i) to block (h_tgt, i + e) of ``target``."""
        target = target or self
        src = self.block(h_src, i)
        tgt_idx = target.block_index(h_tgt, i + e)
        f = self.field
        cols = m.columns()
        out_cols = []
        for g, exp in src:
            col: dict = {}
            for r, p in cols[g].items():
                for pe, pc in p.items():
                    key = (r, tuple(a + b for a, b in zip(exp, pe)))
                    idx = tgt_idx[key]
                    nv = f.add(col.get(idx, f.zero), pc)
                    if nv:
                        col[idx] = nv
                    else:
                        col.pop(idx, None)
            out_cols.append(col)
        return SparseMatrix.from_columns(out_cols, len(tgt_idx), f)

    def times_generator(self, h: int, i: int, vec: Mapping[int, object], k: int) -> dict:
        """Multiply a vector of block (h, i) by ring generator ``k``."""
        blk = self.block(h, i)
        tgt = self.block_index(h, i + self.ring.degrees[k])
        out = {}
        for n, v in vec.items():
            g, e = blk[n]
            e2 = list(e)
            e2[k] += 1
            out[tgt[(g, tuple(e2))]] = v
        return out

    def vector_to_polys(self, h: int, i: int, vec: Mapping[int, object]) -> dict[int, Poly]:
        """Block vector -> {generator: polynomial}."""
        blk = self.block(h, i)
        out: dict[int, Poly] = {}
        for n, v in vec.items():
            g, e = blk[n]
            out.setdefault(g, {})[e] = v
        return out

    def polys_to_vector(self, h: int, i: int, polys: Mapping[int, Poly]) -> dict:
        idx = self.block_index(h, i)
        return {idx[(g, e)]: v for g, p in polys.items() for e, v in p.items() if v}

    # -- serialization -----------------------------------------------------
    def encode(self) -> dict:
        return {
            "ring": self.ring.to_dict(),
            "name": self.name,
            "gens": {str(h): list(g) for h, g in sorted(self.gens.items())},
            "labels": {str(h): [list(l) if isinstance(l, tuple) else l for l in self.labels[h]] for h in sorted(self.gens)},
            "diffs": {str(h): m.encode(self.ring) for h, m in sorted(self.diffs.items())},
            "factors": [fc.encode() for fc in self.factors],
        }

    @classmethod
    def decode(cls, data: Mapping, trust_factors: bool = False) -> "ChainComplex":
        ring = FreeGCAlgebra.from_dict(data["ring"])
        gens = {int(h): g for h, g in data["gens"].items()}
        labels = {int(h): [tuple(l) if isinstance(l, list) else l for l in ls] for h, ls in data.get("labels", {}).items()} or None
        diffs = {int(h): PolyMatrix.decode(ring, m) for h, m in data["diffs"].items()}
        factors = [cls.decode(fd, True) for fd in data.get("factors", [])] if trust_factors else None
        return cls(ring, gens, diffs, labels, data.get("name", ""), factors)

    def __repr__(self) -> str:
        return f"ChainComplex({self.name or '?'}, ranks={self.ranks()})"


def ring_complex(ring: FreeGCAlgebra, degree: int = 0, h: int = 0, name: str = "") -> ChainComplex:
    """The free module of rank one on a generator of the given degree, placed in homological degree ``h``."""
    return ChainComplex(ring, {h: (degree,)}, {}, {h: ("1",)}, name or ring_name(ring))


def ring_name(ring: FreeGCAlgebra) -> str:
    return "k[" + ",".join(ring.names) + "]" if ring.ngens else "k"


def shift_complex(c: ChainComplex, hshift: int = 0, ishift: int = 0) -> ChainComplex:
    """Regrade: ``C_h`` moves to ``h + hshift`` and internal degrees rise by ``ishift``."""
    gens = {h + hshift: tuple(d + ishift for d in g) for h, g in c.gens.items()}
    diffs = {h + hshift: m for h, m in c.diffs.items()}
    labels = {h + hshift: c.labels[h] for h in c.gens}
    factors = None
    if c.factors and hshift == 0 and ishift == 0:
        factors = c.factors
    return ChainComplex(c.ring, gens, diffs, labels, c.name, factors, check=False)


def tensor_complexes(ring: FreeGCAlgebra, parts: Sequence[tuple[ChainComplex, Sequence[int]]], name: str = "") -> ChainComplex:
    """Tensor product over the ground field of complexes on disjoint variable sets.

    ``parts`` pairs each factor with the list of ``ring`` variable indices its
    ring's generators map to.  The result keeps the factors so homology can
    be computed by Kunneth.  Basis order: lexicographic in factor basis
    indices, factors in the given order; differential
    ``d(a (x) b) = da (x) b + (-1)^{|a|} a (x) db``.
    """
    f = ring.field
    seen: set[int] = set()
    for fc, emb in parts:
        if len(emb) != fc.ring.ngens:
            raise ComplexError("embedding length mismatch")
        for v, deg in zip(emb, fc.ring.degrees):
            if v in seen:
                raise ComplexError("factor variable sets must be disjoint")
            if ring.degrees[v] != deg:
                raise ComplexError("embedding does not preserve degrees")
            seen.add(v)
    if seen != set(range(ring.ngens)):
        raise ComplexError("factor variable sets must cover the ring")

    def embed(p: Poly, emb: Sequence[int]) -> Poly:
        out = {}
        for e, c in p.items():
            full = [0] * ring.ngens
            for k, a in enumerate(e):
                full[emb[k]] = a
            out[tuple(full)] = c
        return out

    # basis: tuples (h_k, g_k) per factor
    per_factor = [[(h, g) for h in fc.hom_degrees() for g in range(fc.rank(h))] for fc, _ in parts]
    basis_by_h: dict[int, list[tuple]] = {}
    for combo in itertools.product(*per_factor):
        h = sum(x[0] for x in combo)
        basis_by_h.setdefault(h, []).append(combo)
    index = {h: {b: n for n, b in enumerate(bs)} for h, bs in basis_by_h.items()}
    gens = {h: tuple(sum(fc.gens[x[0]][x[1]] for (fc, _), x in zip(parts, b)) for b in bs) for h, bs in basis_by_h.items()}

    def join_labels(b: tuple) -> tuple:
        out: tuple = ()
        for (fc, _), (h, g) in zip(parts, b):
            lab = fc.labels[h][g]
            out += lab if isinstance(lab, tuple) else (lab,)
        return out

    labels = {h: tuple(join_labels(b) for b in bs) for h, bs in basis_by_h.items()}
    cols_cache = [{h: fc.diff(h).columns() for h in fc.hom_degrees()} for fc, _ in parts]
    diffs: dict[int, dict] = {}
    for h, bs in basis_by_h.items():
        if h - 1 not in index:
            continue
        entries: dict[tuple[int, int], Poly] = {}
        for c, b in enumerate(bs):
            sign = 1
            for k, (fc, emb) in enumerate(parts):
                hk, gk = b[k]
                for r, p in cols_cache[k][hk][gk].items():
                    nb = b[:k] + ((hk - 1, r),) + b[k + 1:]
                    row = index[h - 1][nb]
                    q = embed(p, emb)
                    if sign < 0:
                        q = {e: f.neg(v) for e, v in q.items()}
                    entries[(row, c)] = q
                if hk % 2:
                    sign = -sign
        diffs[h] = PolyMatrix(len(index[h - 1]), len(bs), entries)
    return ChainComplex(ring, gens, {h: m for h, m in diffs.items()}, labels, name, [fc for fc, _ in parts])


def koszul_complex(ring: FreeGCAlgebra, elements: Sequence[Poly], degrees: Sequence[int] | None = None,
                   name: str = "", element_names: Sequence[str] | None = None) -> ChainComplex:
    """Koszul complex of homogeneous elements ``v_1..v_m`` of ``ring``.

    Basis of ``K_h``: increasing index tuples ``T`` of size ``h`` (the wedge
    ``y_T``), internal degree ``sum deg v_t``.  ``d y_T = sum_k (-1)^k v_{t_k} y_{T - t_k}``.

    When the elements split into groups with pairwise disjoint variable
    supports, each group contiguous in the given order, the complex also
    records its tensor factorization (checked against the direct
    construction) so homology runs through Kunneth.
    """
    f = ring.field
    m = len(elements)
    if degrees is None:
        degrees = []
        for v in elements:
            d = ring.poly_degree(v)
            if d is None:
                raise ComplexError("cannot infer the degree of a zero element")
            degrees.append(d)
    else:
        for v, d in zip(elements, degrees):
            dv = ring.poly_degree(v)
            if dv is not None and dv != d:
                raise ComplexError("element degree mismatch")
    gens: dict[int, tuple[int, ...]] = {}
    labels: dict[int, tuple] = {}
    index: dict[int, dict] = {}
    for h in range(m + 1):
        subsets = list(itertools.combinations(range(m), h))
        gens[h] = tuple(sum(degrees[t] for t in T) for T in subsets)
        labels[h] = tuple(subsets)
        index[h] = {T: n for n, T in enumerate(subsets)}
    diffs = {}
    for h in range(1, m + 1):
        entries = {}
        for c, T in enumerate(labels[h]):
            for k, t in enumerate(T):
                v = elements[t]
                if not v:
                    continue
                r = index[h - 1][T[:k] + T[k + 1:]]
                entries[(r, c)] = v if k % 2 == 0 else {e: f.neg(a) for e, a in v.items()}
        diffs[h] = PolyMatrix(len(labels[h - 1]), len(labels[h]), entries)
    direct = ChainComplex(ring, gens, diffs, labels, name)
    factors = _koszul_factors(ring, elements, degrees)
    if factors is None:
        return direct
    product = tensor_complexes(ring, factors, name)
    if not _same_complex(direct, product):
        raise ComplexError("Koszul tensor factorization disagrees with the direct construction")
    return ChainComplex(ring, gens, diffs, labels, name, product.factors, check=False)


def koszul_refactor(c: ChainComplex) -> ChainComplex:
    """Recover the tensor factorization of a Koszul complex from its matrices.

    The elements are read off ``d_1``; the Koszul complex on them is rebuilt
    (with ``c``'s element labels) and must agree with ``c`` entry by entry.
    Used on decoded complexes so homology can again go through Kunneth
    without trusting any stored factorization.
    """
    if 1 not in c.gens:
        return c
    if c.gens.get(0) != (0,) or any(not isinstance(l, tuple) or len(l) != 1 for l in c.labels[1]):
        raise ComplexError("not a Koszul complex: bad bottom degrees or labels")
    d1 = c.diff(1)
    elements = [d1.column(j).get(0, {}) for j in range(c.rank(1))]
    K = koszul_complex(c.ring, elements, list(c.gens[1]), name=c.name)
    glob = [l[0] for l in c.labels[1]]
    labels = {h: tuple(tuple(glob[u] for u in T) for T in K.labels[h]) for h in K.gens}
    out = ChainComplex(c.ring, K.gens, K.diffs, labels, c.name, K.factors, check=False)
    if not _same_complex(c, out):
        raise ComplexError("complex is not the Koszul complex of its first differential")
    return out


def _supports(v: Poly) -> set[int]:
    return {k for e in v for k, a in enumerate(e) if a}


def _koszul_factors(ring: FreeGCAlgebra, elements: Sequence[Poly], degrees: Sequence[int]):
    m = len(elements)
    if m == 0:
        return None
    sup = [_supports(v) for v in elements]
    # connected components of elements under shared variables
    comp = list(range(m))

    def find(x: int) -> int:
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for a in range(m):
        for b in range(a + 1, m):
            if sup[a] & sup[b]:
                comp[find(a)] = find(b)
    roots = [find(a) for a in range(m)]
    groups: list[list[int]] = []
    for a in range(m):
        if groups and roots[groups[-1][0]] == roots[a]:
            groups[-1].append(a)
        else:
            groups.append([a])
    if len({roots[g[0]] for g in groups}) != len(groups):
        return None  # some component is not contiguous
    used: set[int] = set()
    parts = []
    for g in groups:
        vars_ = sorted(set().union(*(sup[a] for a in g)))
        used.update(vars_)
        parts.append((g, vars_))
    rest = [k for k in range(ring.ngens) if k not in used]
    if len(parts) + (1 if rest else 0) < 2:
        return None
    out = []
    for g, vars_ in parts:
        sub = FreeGCAlgebra(ring.field, tuple(ring.generators[k] for k in vars_), ring.truncation)
        elems = []
        for a in g:
            elems.append({tuple(e[k] for k in vars_): c for e, c in elements[a].items()})
        fc = koszul_complex(sub, elems, [degrees[a] for a in g])
        # relabel with global element indices
        fc = ChainComplex(sub, fc.gens, fc.diffs,
                          {h: tuple(tuple(g[t] for t in T) for T in fc.labels[h]) for h in fc.gens},
                          fc.name, None, check=False)
        out.append((fc, vars_))
    if rest:
        sub = FreeGCAlgebra(ring.field, tuple(ring.generators[k] for k in rest), ring.truncation)
        out.append((ChainComplex(sub, {0: (0,)}, {}, {0: ((),)}), rest))
    return out


def _same_complex(a: ChainComplex, b: ChainComplex) -> bool:
    """Equal up to reordering the bases by label."""
    if a.ranks() != b.ranks():
        return False
    for h in a.gens:
        pos = {lab: n for n, lab in enumerate(b.labels[h])}
        if set(pos) != set(a.labels[h]):
            return False
        if any(a.gens[h][n] != b.gens[h][pos[lab]] for n, lab in enumerate(a.labels[h])):
            return False
    for h in a.gens:
        if h - 1 not in a.gens:
            continue
        src = {lab: n for n, lab in enumerate(b.labels[h])}
        tgt = {lab: n for n, lab in enumerate(b.labels[h - 1])}
        da, db = a.diff(h), b.diff(h)
        if len(da.entries) != len(db.entries):
            return False
        for (r, c), p in da.entries.items():
            q = db.entries.get((tgt[a.labels[h - 1][r]], src[a.labels[h][c]]))
            if q != p:
                return False
    return True


def dual_complex(c: ChainComplex, name: str = "") -> ChainComplex:
    """``Hom_R(C, R)``: basis dual to ``C_h`` sits in degree ``-h`` with internal degree ``-deg``.

    The differential is the transpose ``phi -> phi o d``.
    """
    gens = {-h: tuple(-d for d in g) for h, g in c.gens.items()}
    diffs = {}
    for h, m in c.diffs.items():
        # d_h : C_h -> C_{h-1}; dual map lives at -(h-1) -> -h
        diffs[-(h - 1)] = PolyMatrix(m.cols, m.rows, {(cc, r): p for (r, cc), p in m.entries.items()})
    labels = {-h: c.labels[h] for h in c.gens}
    factors = [dual_complex(fc) for fc in c.factors] if c.factors else None
    return ChainComplex(c.ring, gens, diffs, labels, name or f"Hom({c.name}, R)", factors)


# ---------------------------------------------------------------------------
# tensor with a module: complexes of vector spaces


class VectorComplex(_BlockComplex):
    """``C (x)_R M`` for a free complex ``C`` and a graded module ``M``."""

    def __init__(self, c: ChainComplex, m: GradedModule, name: str = "") -> None:
        if m.algebra.generators != c.ring.generators or m.field != c.field:
            raise ComplexError("module and complex live over different rings")
        self.c = c
        self.m = m
        self.field = c.field
        self.truncation = m.truncation
        self.name = name
        self._diff_cache: dict = {}

    def hom_degrees(self) -> list[int]:
        return self.c.hom_degrees()

    def internal_range(self, upto: int) -> range:
        return range(self.c.lowest_internal(), min(upto, self.truncation + self.c.lowest_internal()) + 1)

    def _offsets(self, h: int, i: int) -> list[tuple[int, int]]:
        out = []
        off = 0
        for g, dg in enumerate(self.c.gens.get(h, ())):
            out.append((off, dg))
            off += self.m.dim(i - dg)
        return out

    def dim(self, h: int, i: int) -> int:
        return sum(self.m.dim(i - dg) for dg in self.c.gens.get(h, ()))

    def diff_block(self, h: int, i: int) -> SparseMatrix:
        key = (h, i)
        if key in self._diff_cache:
            return self._diff_cache[key]
        f = self.field
        src = self._offsets(h, i)
        tgt = self._offsets(h - 1, i)
        cols: list[dict] = []
        dcols = self.c.diff(h).columns() if h in self.c.gens else []
        for g, (off, dg) in enumerate(src):
            for b in range(self.m.dim(i - dg)):
                col: dict = {}
                for r, p in dcols[g].items():
                    toff, tdg = tgt[r]
                    img = self.m.act_poly(p, i - dg, {b: f.one})
                    for k, v in img.items():
                        axpy(col, v, {toff + k: f.one}, f)
                cols.append(col)
        mat = SparseMatrix.from_columns(cols, self.dim(h - 1, i), f)
        self._diff_cache[key] = mat
        return mat


def tensor_with_module(c: ChainComplex, m: GradedModule, name: str = "") -> VectorComplex:
    return VectorComplex(c, m, name)


# ---------------------------------------------------------------------------
# chain maps


class ChainMap:
    """Map of free complexes with homological shift ``hshift`` and internal shift ``ishift``.

    ``maps[h]`` sends the basis of ``source_h`` to ``target_{h - hshift}``.
    Construction verifies ``d f = (-1)^t f d`` as polynomial identities.
    """

    def __init__(self, source: ChainComplex, target: ChainComplex, hshift: int, ishift: int,
                 maps: Mapping[int, PolyMatrix] | None = None, check: bool = True, name: str = "") -> None:
        if source.ring != target.ring:
            raise ComplexError("chain maps must be over one ring")
        self.source = source
        self.target = target
        self.hshift = hshift
        self.ishift = ishift
        self.name = name
        self.maps: dict[int, PolyMatrix] = {}
        for h, m in (maps or {}).items():
            if h in source.gens and (h - hshift) in target.gens and not m.is_zero():
                self.maps[h] = m
        self.verified = False
        if check:
            self._validate()
            self.verified = True

    @property
    def ring(self) -> FreeGCAlgebra:
        return self.source.ring

    @property
    def total_degree(self) -> int:
        return self.ishift + self.hshift

    def component(self, h: int) -> PolyMatrix:
        m = self.maps.get(h)
        if m is None:
            return _zero_matrix(self.target.rank(h - self.hshift), self.source.rank(h))
        return m

    def is_zero(self) -> bool:
        return not self.maps

    def _validate(self) -> None:
        ring = self.ring
        f = ring.field
        S, T, k, e = self.source, self.target, self.hshift, self.ishift
        for h, m in self.maps.items():
            tg, sg = T.gens[h - k], S.gens[h]
            if (m.rows, m.cols) != (len(tg), len(sg)):
                raise ComplexError(f"component {h} has the wrong shape")
            for (r, c), p in m.entries.items():
                for ex in p:
                    if ring.monomial_degree(ex) != sg[c] + e - tg[r]:
                        raise ComplexError(f"component {h} entry ({r}, {c}) has the wrong degree")
        sign = -1 if self.total_degree % 2 else 1
        for h in S.hom_degrees():
            lhs = T.diff(h - k).compose(ring, self.component(h)) if (h - k - 1) in T.gens and (h - k) in T.gens else None
            rhs = self.component(h - 1).compose(ring, S.diff(h)) if (h - 1) in S.gens and (h - 1 - k) in T.gens else None
            if lhs is None and rhs is None:
                continue
            if lhs is None:
                lhs = _zero_matrix(T.rank(h - k - 1), S.rank(h))
            if rhs is None:
                rhs = _zero_matrix(T.rank(h - k - 1), S.rank(h))
            if sign < 0:
                rhs = rhs.scaled(f, f.neg(f.one))
            if not lhs.equals(rhs):
                raise ComplexError(f"not a chain map: d f != (-1)^t f d at source degree {h}")

    def block(self, h: int, i: int) -> SparseMatrix:
        """Matrix from source block (h, i) to target block (h - k, i + e)."""
        return self.source.expand(self.component(h), h, h - self.hshift, i, self.ishift, self.target)

    def encode(self) -> dict:
        ring = self.ring
        return {
            "name": self.name,
            "hshift": self.hshift,
            "ishift": self.ishift,
            "total_degree": self.total_degree,
            "maps": {str(h): m.encode(ring) for h, m in sorted(self.maps.items())},
        }

    @classmethod
    def decode(cls, source: ChainComplex, target: ChainComplex, data: Mapping) -> "ChainMap":
        maps = {int(h): PolyMatrix.decode(source.ring, m) for h, m in data["maps"].items()}
        return cls(source, target, data["hshift"], data["ishift"], maps, name=data.get("name", ""))

    def __repr__(self) -> str:
        return f"ChainMap({self.name or '?'}: shifts=({self.hshift}, {self.ishift}), t={self.total_degree})"


def identity_map(c: ChainComplex) -> ChainMap:
    f = c.field
    maps = {h: PolyMatrix(len(g), len(g), {(n, n): {c.ring.unit: f.one} for n in range(len(g))}) for h, g in c.gens.items()}
    return ChainMap(c, c, 0, 0, maps, name="id")


def zero_map(source: ChainComplex, target: ChainComplex, hshift: int = 0, ishift: int = 0) -> ChainMap:
    return ChainMap(source, target, hshift, ishift, {}, name="0")


def compose(f: ChainMap, g: ChainMap) -> ChainMap:
    """``g o f`` (first ``f``, then ``g``); shifts and total degrees add."""
    if f.target is not g.source and not _same_complex(f.target, g.source):
        raise ComplexError("target of the first map is not the source of the second")
    ring = f.ring
    maps = {}
    for h, m in f.maps.items():
        gm = g.maps.get(h - f.hshift)
        if gm is not None:
            prod = gm.compose(ring, m)
            if not prod.is_zero():
                maps[h] = prod
    return ChainMap(f.source, g.target, f.hshift + g.hshift, f.ishift + g.ishift, maps,
                    name=f"({g.name} o {f.name})")


def scale_map(f: ChainMap, a) -> ChainMap:
    fld = f.ring.field
    a = fld.coerce(a)
    return ChainMap(f.source, f.target, f.hshift, f.ishift, {h: m.scaled(fld, a) for h, m in f.maps.items()}, name=f.name)


def add_maps(f: ChainMap, g: ChainMap) -> ChainMap:
    if (f.hshift, f.ishift) != (g.hshift, g.ishift):
        raise ComplexError("cannot add maps of different bidegrees")
    fld = f.ring.field
    maps = dict(f.maps)
    for h, m in g.maps.items():
        maps[h] = maps[h].plus(fld, m) if h in maps else m
    return ChainMap(f.source, f.target, f.hshift, f.ishift, maps)


def cone(f: ChainMap, name: str = "") -> ChainComplex:
    """Mapping cone ``C_h = T_h (+) S_{h-1}`` with ``d(t, s) = (dt + f s, -ds)``."""
    if not f.verified:
        raise ComplexError("cone needs a verified chain map")
    if (f.hshift, f.ishift) != (0, 0):
        raise ComplexError("cone needs a map of degree zero")
    S, T, ring = f.source, f.target, f.ring
    fld = ring.field
    hs = sorted(set(T.gens) | {h + 1 for h in S.gens})
    gens = {h: T.gens.get(h, ()) + S.gens.get(h - 1, ()) for h in hs}
    labels = {h: tuple(("T",) + (l if isinstance(l, tuple) else (l,)) for l in T.labels.get(h, ()))
              + tuple(("S",) + (l if isinstance(l, tuple) else (l,)) for l in S.labels.get(h - 1, ())) for h in hs}
    diffs = {}
    for h in hs:
        if h - 1 not in gens:
            continue
        nt, ntp = T.rank(h), T.rank(h - 1)
        entries = {}
        for (r, c), p in T.diff(h).entries.items() if h in T.gens else []:
            entries[(r, c)] = p
        for (r, c), p in f.component(h - 1).entries.items() if (h - 1) in S.gens else []:
            entries[(r, nt + c)] = p
        for (r, c), p in S.diff(h - 1).entries.items() if (h - 1) in S.gens else []:
            entries[(ntp + r, nt + c)] = {e: fld.neg(v) for e, v in p.items()}
        diffs[h] = PolyMatrix(len(gens[h - 1]), len(gens[h]), entries)
    return ChainComplex(ring, gens, diffs, labels, name or f"cone({f.name})")


# ---------------------------------------------------------------------------
# Hom complexes: coordinates, differential, homotopies


class HomSpace:
    """Coordinates on maps ``P -> Q`` of shifts ``(k, e)``.

    A map is determined by the images of the basis of ``P``; the image of
    basis element ``g`` of ``P_h`` (internal degree ``d``) is a vector in
    block ``(h - k, d + e)`` of ``Q``.  Coordinates are those vectors
    concatenated in the order of ``P``'s homological degrees and bases.
    """

    def __init__(self, P: ChainComplex, Q: ChainComplex, k: int, e: int) -> None:
        self.P, self.Q, self.k, self.e = P, Q, k, e
        self.slots: list[tuple[int, int, int, int]] = []  # (h, g, offset, size)
        off = 0
        for h in P.hom_degrees():
            for g, dg in enumerate(P.gens[h]):
                size = Q.dim(h - k, dg + e) if (h - k) in Q.gens else 0
                self.slots.append((h, g, off, size))
                off += size
        self.size = off
        self._slot_of = {(h, g): (off, size) for h, g, off, size in self.slots}

    def slot(self, h: int, g: int) -> tuple[int, int]:
        return self._slot_of[(h, g)]

    def vector_of(self, f: ChainMap) -> dict:
        if (f.hshift, f.ishift) != (self.k, self.e):
            raise ComplexError("map has the wrong shifts for this Hom space")
        vec: dict = {}
        for h, m in f.maps.items():
            cols = m.columns()
            for g, col in enumerate(cols):
                if not col:
                    continue
                off, _ = self._slot_of[(h, g)]
                local = self.Q.polys_to_vector(h - self.k, self.P.gens[h][g] + self.e, col)
                for n, v in local.items():
                    vec[off + n] = v
        return vec

    def map_of(self, vec: Mapping[int, object], name: str = "", check: bool = True) -> ChainMap:
        P, Q, k, e = self.P, self.Q, self.k, self.e
        per_h: dict[int, dict] = {}
        for h, g, off, size in self.slots:
            local = {n - off: v for n, v in vec.items() if off <= n < off + size}
            if not local:
                continue
            polys = Q.vector_to_polys(h - k, P.gens[h][g] + e, local)
            ent = per_h.setdefault(h, {})
            for r, p in polys.items():
                ent[(r, g)] = p
        maps = {h: PolyMatrix(Q.rank(h - k), P.rank(h), ent) for h, ent in per_h.items()}
        return ChainMap(P, Q, k, e, maps, check=check, name=name)

    def slots_upto(self, hmax: int) -> list[tuple[int, int, int, int]]:
        return [s for s in self.slots if s[0] <= hmax]


def hom_differential(P: ChainComplex, Q: ChainComplex, k: int, e: int) -> tuple[HomSpace, HomSpace, list[dict]]:
    """Columns of ``delta f = d_Q f - (-1)^t f d_P`` from shifts (k, e) to (k + 1, e)."""
    src = HomSpace(P, Q, k, e)
    tgt = HomSpace(P, Q, k + 1, e)
    ring = P.ring
    fld = ring.field
    t = e + k
    sgn = fld.one if t % 2 else fld.neg(fld.one)  # coefficient of f d_P is -(-1)^t
    # for each P basis element g, which g' have g in d_P(g') and with what polynomial
    users: dict[tuple[int, int], list[tuple[int, Poly]]] = {}
    for h in P.hom_degrees():
        if h + 1 in P.gens:
            for (r, c), p in P.diff(h + 1).entries.items():
                users.setdefault((h, r), []).append((c, p))
    columns: list[dict] = []
    for h, g, off, size in src.slots:
        if not size:
            continue
        dg = P.gens[h][g]
        blk = Q.block(h - k, dg + e)
        dq = Q.diff_block(h - k, dg + e).column_dicts() if (h - k - 1) in Q.gens else None
        toff_self = tgt.slot(h, g)[0] if (h - k - 1) in Q.gens else None
        for n in range(size):
            col: dict = {}
            if dq is not None:
                for r, v in dq[n].items():
                    col[toff_self + r] = v
            qg, qe = blk[n]
            for c, p in users.get((h, g), ()):
                dgp = P.gens[h + 1][c]
                idx = Q.block_index(h - k, dgp + e)
                toff = tgt.slot(h + 1, c)[0]
                for pe, pc in p.items():
                    key = (qg, tuple(a + b for a, b in zip(qe, pe)))
                    pos = toff + idx[key]
                    nv = fld.add(col.get(pos, fld.zero), fld.mul(sgn, pc))
                    if nv:
                        col[pos] = nv
                    else:
                        col.pop(pos, None)
            columns.append((off + n, col))
    full = [dict() for _ in range(src.size)]
    for n, col in columns:
        full[n] = col
    return src, tgt, full


@dataclass
class HomotopyResult:
    """Outcome of :func:`is_null_homotopic`.

    ``homotopy`` is set when ``f`` is null-homotopic.  Otherwise
    ``obstruction_degree`` is the lowest homological degree of the source
    where the homotopy equations become inconsistent, and ``witness`` is a
    left vector ``y`` on those equations with ``y A = 0`` and ``y . f != 0``.
    """

    null: bool
    homotopy: ChainMap | None = None
    obstruction_degree: int | None = None
    witness: dict | None = None
    equations: int = 0
    unknowns: int = 0

    def __bool__(self) -> bool:
        return self.null


def is_null_homotopic(f: ChainMap, want_witness: bool = True) -> HomotopyResult:
    """Solve ``f = d H + (-1)^t H d`` for ``H``.

    The source must be a complex of free modules, where homotopy classes
    compute maps in the derived category.  Equations are added one source
    homological degree at a time, so a failure names the first degree
    where no homotopy can exist.
    """
    if not isinstance(f.source, ChainComplex):
        raise ComplexError("null-homotopy solving needs a free source complex")
    if not f.verified:
        raise ComplexError("null-homotopy solving needs a verified chain map")
    P, Q, k, e = f.source, f.target, f.hshift, f.ishift
    if f.is_zero():
        return HomotopyResult(True, ChainMap(P, Q, k - 1, e, {}, check=False, name="0"))
    H = _greedy_homotopy(f)
    if H is not None:
        return HomotopyResult(True, H)
    src, tgt, cols = hom_differential(P, Q, k - 1, e)
    rhs = tgt.vector_of(f)
    fld = P.field
    mat = SparseMatrix.from_columns(cols, tgt.size, fld)
    res = solve(mat, rhs, fld)
    if res.consistent:
        H = src.map_of(res.particular, name=f"homotopy({f.name})", check=False)
        if not check_homotopy(f, H):
            raise AssertionError("solved homotopy fails re-verification")  # pragma: no cover
        return HomotopyResult(True, H, equations=tgt.size, unknowns=src.size)
    rows = mat.row_dicts()
    for hmax in P.hom_degrees():
        eq = [n for h, g, off, size in tgt.slots_upto(hmax) for n in range(off, off + size)]
        if not any(n in rhs for n in eq):
            continue
        sub_rows = [rows[n] for n in eq]
        sub = SparseMatrix(len(eq), src.size, tuple((r, c, v) for r, row in enumerate(sub_rows) for c, v in row.items()), fld)
        sub_b = {r: rhs[n] for r, n in enumerate(eq) if n in rhs}
        sres = solve(sub, sub_b, fld, want_witness=want_witness)
        if not sres.consistent:
            witness = {eq[r]: v for r, v in (sres.witness or {}).items()}
            return HomotopyResult(False, None, hmax, witness, tgt.size, src.size)
    raise AssertionError("full system inconsistent but no truncated subsystem is")  # pragma: no cover


def koszul_variables(c: ChainComplex) -> dict[int, tuple[int, int | None]] | None:
    """Element label ``t -> (a, b)`` when ``c`` looks like a Koszul complex on
    ``x_a - x_b`` (or ``x_a`` when ``b`` is None) with labels the index
    subsets; None otherwise.  Only used to propose homotopies, which are
    always re-verified."""
    if c._koszul_vars is not False:
        return c._koszul_vars
    out: dict[int, tuple[int, int | None]] | None = {}
    hs = c.hom_degrees()
    if hs != list(range(len(hs))) or c.labels.get(0) != ((),):
        out = None
    else:
        for h in hs:
            if any(not isinstance(T, tuple) or list(T) != sorted(set(T)) or len(T) != h for T in c.labels[h]):
                out = None
                break
    if out is not None and 1 in c.gens:
        one = c.field.one
        minus = c.field.neg(one)
        for g, (t,) in enumerate(c.labels[1]):
            col = c.diff(1).column(g).get(0, {})
            plus = [e for e, v in col.items() if v == one]
            neg = [e for e, v in col.items() if v == minus]
            if len(plus) != 1 or len(neg) > 1 or len(col) != len(plus) + len(neg):
                out = None
                break
            a = _single_variable(plus[0])
            b = _single_variable(neg[0]) if neg else None
            if a is None or (neg and b is None):
                out = None
                break
            out[t] = (a, b)
        if out is not None and len({a for a, _ in out.values()}) != len(out):
            out = None
    c._koszul_vars = out
    return out


def _single_variable(e: tuple[int, ...]) -> int | None:
    nz = [k for k, x in enumerate(e) if x]
    return nz[0] if len(nz) == 1 and e[nz[0]] == 1 else None


def _koszul_contract(c: ChainComplex, kv: Mapping[int, tuple[int, int | None]], h: int,
                     polys: Mapping[int, Poly]) -> dict[int, Poly]:
    """Contracting homotopy ``s`` on a Koszul complex of variable differences.

    ``s(p y_T) = sum_{t < min T} Delta_t(sigma_{<t} p) y_{t u T}`` where
    ``sigma_t`` substitutes ``x_a -> x_b`` and ``Delta_t`` is the divided
    difference ``(p - sigma_t p) / (x_a - x_b)``.  For a boundary ``y`` this
    gives ``d s(y) = y``.
    """
    fld = c.field
    order = sorted(kv)
    up = {T: n for n, T in enumerate(c.labels.get(h + 1, ()))}
    out: dict[int, dict] = {}
    for g, p in polys.items():
        T = c.labels[h][g]
        cur = dict(p)
        for t in order:
            if (T and t >= T[0]) or not cur:
                break
            a, b = kv[t]
            q = {}
            sub = {}
            for e, v in cur.items():
                i = e[a]
                if not i:
                    sub[e] = fld.add(sub.get(e, fld.zero), v)
                    continue
                for r in range(i) if b is not None else (i - 1,):
                    ne = list(e)
                    ne[a] = r
                    if b is not None:
                        ne[b] += i - 1 - r
                    ne = tuple(ne)
                    q[ne] = fld.add(q.get(ne, fld.zero), v)
                if b is not None:
                    ne = list(e)
                    ne[a] = 0
                    ne[b] += i
                    ne = tuple(ne)
                    sub[ne] = fld.add(sub.get(ne, fld.zero), v)
            q = {e: v for e, v in q.items() if v}
            if q:
                tgt = out.setdefault(up[(t,) + T], {})
                for e, v in q.items():
                    tgt[e] = fld.add(tgt.get(e, fld.zero), v)
            cur = {e: v for e, v in sub.items() if v}
    return {r: {e: v for e, v in p.items() if v} for r, p in out.items() if any(p.values())}


def _bottom_correction(f: ChainMap, kv: Mapping[int, tuple[int, int | None]], sign) -> dict[int, Poly] | None:
    """``psi : P_{k-1} -> Q_0`` with ``sigma(f_k) = sign * sigma(psi d_P)``.

    ``sigma`` substitutes away every Koszul variable, so this is a linear
    system over the quotient ring ``R / (v)``; its monomial basis is the
    monomials of ``R`` free of the substituted variables.  None when no
    such ``psi`` exists.
    """
    P, k, e = f.source, f.hshift, f.ishift
    ring = P.ring
    fld = ring.field
    gone = {a for a, _ in kv.values()}
    pairs = sorted(kv.values())

    def sigma(p: Mapping) -> dict:
        out: dict = {}
        for ex, v in p.items():
            ex = list(ex)
            dead = False
            for a, b in pairs:
                if ex[a]:
                    if b is None:
                        dead = True
                        break
                    ex[b] += ex[a]
                    ex[a] = 0
            if not dead:
                t = tuple(ex)
                out[t] = fld.add(out.get(t, fld.zero), v)
        return {t: v for t, v in out.items() if v}

    def normal(deg: int) -> list[tuple[int, ...]]:
        return [m for m in ring.basis(deg) if not any(m[a] for a in gone)]

    fk = f.component(k)
    rhs_polys = {g: sigma(col.get(0, {})) for g, col in enumerate(fk.columns())}
    rhs_polys = {g: p for g, p in rhs_polys.items() if p}
    if not rhs_polys:
        return {}
    if (k - 1) not in P.gens or k not in P.diffs:
        return None
    dcols = P.diff(k).columns()
    # equations indexed by (g, monomial); unknowns by (g', monomial)
    eq_index: dict[tuple[int, tuple], int] = {}

    def eq(g: int, m: tuple) -> int:
        return eq_index.setdefault((g, m), len(eq_index))

    unknowns: list[tuple[int, tuple]] = []
    columns: list[dict] = []
    for gp, dg in enumerate(P.gens[k - 1]):
        entries = {g: sigma(col[gp]) for g, col in enumerate(dcols) if gp in col}
        entries = {g: p for g, p in entries.items() if p}
        for u in normal(dg + e):
            vec: dict = {}
            for g, p in entries.items():
                for m, v in ring.poly_mul({u: fld.one}, p).items():
                    r = eq(g, m)
                    vec[r] = fld.add(vec.get(r, fld.zero), v)
            unknowns.append((gp, u))
            columns.append({r: v for r, v in vec.items() if v})
    b = {}
    for g, p in rhs_polys.items():
        for m, v in p.items():
            b[eq(g, m)] = fld.mul(sign, v)
    mat = SparseMatrix.from_columns(columns, len(eq_index), fld)
    sol = solve(mat, b, fld)
    if not sol.consistent:
        return None
    psi: dict[int, dict] = {}
    for j, v in sol.particular.items():
        gp, u = unknowns[j]
        psi.setdefault(gp, {})[u] = v
    return psi


def _greedy_homotopy(f: ChainMap) -> ChainMap | None:
    """Solve for ``H`` one source degree and one generator at a time.

    ``d_Q H_h(g) = f_h(g) - (-1)^t H_{h-1}(d_P g)``; each equation is a small
    system in a single block of ``Q``.  Earlier choices can make a later
    equation unsolvable even when a homotopy exists, so None means only
    "not found this way".  A returned homotopy has been re-verified.
    """
    P, Q, k, e = f.source, f.target, f.hshift, f.ishift
    ring = P.ring
    fld = ring.field
    sign = fld.neg(fld.one) if f.total_degree % 2 else fld.one
    kv = koszul_variables(Q)
    maps: dict[int, PolyMatrix] = {}
    if kv is not None and k in f.maps:
        psi = _bottom_correction(f, kv, sign)
        if psi is None:
            return None
        if psi:
            maps[k - 1] = PolyMatrix(1, P.rank(k - 1), {(0, g): p for g, p in psi.items()})
    for h in P.hom_degrees():
        qh = h - k + 1  # H_h : P_h -> Q_{h-k+1}
        if (h - k) not in Q.gens:
            continue
        rhs = f.component(h)
        if (h - 1) in maps and h in P.diffs:
            rhs = rhs.plus(fld, maps[h - 1].compose(ring, P.diff(h)).scaled(fld, fld.neg(sign)))
        if rhs.is_zero():
            continue
        if qh not in Q.gens:
            return None
        entries = {}
        for c, col in enumerate(rhs.columns()):
            if not col:
                continue
            deg = P.gens[h][c] + e
            if kv is not None:
                for r, p in _koszul_contract(Q, kv, h - k, col).items():
                    entries[(r, c)] = p
                continue
            sol = solve(Q.diff_block(qh, deg), Q.polys_to_vector(h - k, deg, col), fld)
            if not sol.consistent:
                return None
            for r, p in Q.vector_to_polys(qh, deg, sol.particular).items():
                entries[(r, c)] = p
        if entries:
            maps[h] = PolyMatrix(Q.rank(qh), P.rank(h), entries)
    H = ChainMap(P, Q, k - 1, e, maps, check=False, name=f"homotopy({f.name})")
    return H if check_homotopy(f, H) else None


def check_homotopy(f: ChainMap, H: ChainMap) -> bool:
    """Polynomial identity ``f = d H + (-1)^t H d`` with ``t`` the total degree of ``f``."""
    P, Q, ring = f.source, f.target, f.ring
    fld = ring.field
    if (H.hshift, H.ishift) != (f.hshift - 1, f.ishift):
        return False
    sign = fld.neg(fld.one) if f.total_degree % 2 else fld.one
    for h in P.hom_degrees():
        if (h - f.hshift) not in Q.gens:
            continue
        acc = _zero_matrix(Q.rank(h - f.hshift), P.rank(h))
        if (h - H.hshift) in Q.gens and h in H.maps:
            acc = acc.plus(fld, Q.diff(h - H.hshift).compose(ring, H.component(h)))
        if (h - 1) in P.gens and (h - 1) in H.maps:
            acc = acc.plus(fld, H.component(h - 1).compose(ring, P.diff(h)).scaled(fld, sign))
        if not acc.equals(f.component(h)):
            return False
    return True


def check_obstruction(f: ChainMap, degree: int, witness: Mapping[int, object]) -> bool:
    """Re-verify a non-null-homotopy witness: ``y A = 0`` and ``y . f != 0``."""
    P, Q, k, e = f.source, f.target, f.hshift, f.ishift
    src, tgt, cols = hom_differential(P, Q, k - 1, e)
    fld = P.field
    allowed = {n for h, g, off, size in tgt.slots_upto(degree) for n in range(off, off + size)}
    if any(n not in allowed for n in witness):
        return False
    for col in cols:
        acc = fld.zero
        for r, v in col.items():
            y = witness.get(r)
            if y:
                acc = fld.add(acc, fld.mul(y, v))
        if acc:
            return False
    rhs = tgt.vector_of(f)
    acc = fld.zero
    for r, v in rhs.items():
        y = witness.get(r)
        if y:
            acc = fld.add(acc, fld.mul(y, v))
    return bool(acc)


def chain_map_space(P: ChainComplex, Q: ChainComplex, k: int, e: int) -> tuple[HomSpace, list[dict]]:
    """A basis (as coordinate vectors) of all chain maps ``P -> Q`` of shifts (k, e)."""
    src, tgt, cols = hom_differential(P, Q, k, e)
    mat = SparseMatrix.from_columns(cols, tgt.size, P.field)
    return src, kernel_basis(mat)


# ---------------------------------------------------------------------------
# homology of maps and ghosts


class _HomologyReps:
    """Cached cycle representatives of ``H_{h,i}`` and boundary spaces of a complex."""

    def __init__(self, c: ChainComplex) -> None:
        self.c = c
        self._reps: dict = {}
        self._bounds: dict = {}

    def boundaries(self, h: int, i: int) -> Echelon:
        key = (h, i)
        if key not in self._bounds:
            ech = Echelon(self.c.field)
            if (h + 1) in self.c.gens and self.c.dim(h, i):
                for col in self.c.diff_block(h + 1, i).column_dicts():
                    if col:
                        ech.add(col)
            self._bounds[key] = ech
        return self._bounds[key]

    def reps(self, h: int, i: int) -> list[dict]:
        key = (h, i)
        if key not in self._reps:
            c = self.c
            n = c.dim(h, i)
            if not n:
                self._reps[key] = []
            else:
                if (h - 1) in c.gens:
                    cycles = kernel_basis(c.diff_block(h, i))
                else:
                    cycles = [{j: c.field.one} for j in range(n)]
                ech = self.boundaries(h, i)
                probe = Echelon(c.field)
                for v in ech.pivots.values():
                    probe.add(v)
                out = []
                for z in cycles:
                    if probe.add(z) is not None:
                        out.append(z)
                self._reps[key] = out
        return self._reps[key]


_REPS: "dict[int, _HomologyReps]" = {}


def homology_reps(c: ChainComplex) -> _HomologyReps:
    hit = _REPS.get(id(c))
    if hit is None or hit.c is not c:
        hit = _HomologyReps(c)
        _REPS[id(c)] = hit
    return hit


@dataclass
class GhostReport:
    """Result of :func:`is_ghost`: pieces ``(h, i)`` of source homology examined."""

    ghost: bool
    checked: list[tuple[int, int]] = field(default_factory=list)
    failure: tuple[int, int] | None = None
    upto: int = 0

    def __bool__(self) -> bool:
        return self.ghost


def is_ghost(f: ChainMap, upto: int | None = None, exhaustive: bool = False) -> GhostReport:
    """True iff ``H(f) = 0`` on all source homology in internal degrees ``i <= upto``.

    Since ``H(f)`` is R-linear it suffices to test it on homology in the
    degrees where the source homology has module generators; pieces whose
    image lands where the target homology vanishes are automatically zero.
    Target homology is computed up to ``upto + e`` so that no image escapes
    the check.  ``exhaustive=True`` tests every nonzero piece of source homology.
    """
    S, T, k, e = f.source, f.target, f.hshift, f.ishift
    upto = S.truncation if upto is None else upto
    pieces = homology(S, upto) if exhaustive else homology_generator_dims(S, upto)
    target_h = homology(T, upto + max(e, 0))
    checked = []
    for (h, i), d in sorted(pieces.dims.items()):
        if not d:
            continue
        checked.append((h, i))
        if (h - k) not in T.gens or not target_h.dims.get((h - k, i + e)):
            continue
        if h not in f.maps:
            continue
        reps = homology_reps(S).reps(h, i)
        mat = f.block(h, i)
        bounds = homology_reps(T).boundaries(h - k, i + e)
        for z in reps:
            img = mat.apply(z)
            if img and not bounds.contains(img):
                return GhostReport(False, checked, (h, i), upto)
    return GhostReport(True, checked, None, upto)


def induced_on_homology(f: ChainMap, h: int, i: int) -> list[dict]:
    """Images of the source homology representatives in block (h, i), reduced modulo target boundaries."""
    S, T, k, e = f.source, f.target, f.hshift, f.ishift
    reps = homology_reps(S).reps(h, i)
    if (h - k) not in T.gens:
        return [dict() for _ in reps]
    mat = f.block(h, i)
    bounds = homology_reps(T).boundaries(h - k, i + e)
    return [bounds.reduce(mat.apply(z))[0] for z in reps]
