"""Free graded-commutative algebras, their graded modules and Poincare series.

Even-degree generators are polynomial, odd-degree generators exterior.  In
characteristic 2 the odd generators keep only their square-free monomial
basis; products of two of them are never formed by this package.

Polynomials are ``dict[exponent tuple, scalar]``.
"""
from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exactla import FieldSpec, SparseMatrix, axpy

DEFAULT_TRUNCATION = 60

Poly = dict  # dict[tuple[int, ...], scalar]


class GradingError(ValueError):
    """Degree or field mismatch between graded objects."""


@dataclass(frozen=True)
class GradedDims:
    """Dimensions of a graded vector space, ``dims[k]`` sits in degree ``start + k``."""

    dims: tuple[int, ...]
    start: int = 0

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.dims):
            raise GradingError("negative dimension")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    def __getitem__(self, degree: int) -> int:
        k = degree - self.start
        return self.dims[k] if 0 <= k < len(self.dims) else 0

    @property
    def stop(self) -> int:
        """One past the last recorded degree."""
        return self.start + len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    def support(self) -> list[int]:
        return [self.start + k for k, d in enumerate(self.dims) if d]

    def as_dict(self) -> dict[int, int]:
        return {self.start + k: d for k, d in enumerate(self.dims) if d}

    @classmethod
    def from_dict(cls, d: Mapping[int, int], start: int, stop: int) -> "GradedDims":
        return cls(tuple(d.get(k, 0) for k in range(start, stop)), start)

    def truncate(self, stop: int) -> "GradedDims":
        return GradedDims(self.dims[: max(0, stop - self.start)], self.start)

    def times(self, other: "GradedDims", stop: int) -> "GradedDims":
        """Product of series, keeping degrees below ``stop``."""
        start = self.start + other.start
        out = [0] * max(0, stop - start)
        for a, da in enumerate(self.dims):
            if not da:
                continue
            for b, db in enumerate(other.dims):
                k = a + b
                if k >= len(out):
                    break
                out[k] += da * db
        return GradedDims(tuple(out), start)

    def divide(self, other: "GradedDims", stop: int) -> "GradedDims":
        """Power-series quotient; ``other`` must start with a unit coefficient 1."""
        if not other.dims or other.dims[0] != 1:
            raise GradingError("divisor must have leading coefficient 1")
        start = self.start - other.start
        n = max(0, stop - start)
        num = list(self.dims[:n]) + [0] * max(0, n - len(self.dims))
        out = [0] * n
        for k in range(n):
            c = num[k]
            out[k] = c
            if c:
                for b in range(1, len(other.dims)):
                    if k + b >= n:
                        break
                    num[k + b] -= c * other.dims[b]
        if any(c < 0 for c in out):
            raise GradingError("quotient series has negative coefficients")
        return GradedDims(tuple(out), start)

    def __str__(self) -> str:
        terms = [f"{d}t^{k}" if d != 1 else f"t^{k}" for k, d in self.as_dict().items()]
        return " + ".join(terms) or "0"


def exterior_series(degrees: Iterable[int], stop: int, start: int = 0) -> GradedDims:
    """Series of prod (1 + t^d), truncated below ``stop``."""
    acc = GradedDims((1,), start)
    for d in degrees:
        acc = acc.times(GradedDims((1,) + (0,) * (d - 1) + (1,)), stop)
    return acc


@dataclass(frozen=True)
class FreeGCAlgebra:
    """Free graded-commutative algebra on named, positively graded generators."""

    field: FieldSpec
    generators: tuple[tuple[str, int], ...] = ()
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self) -> None:
        gens = tuple((str(n), int(d)) for n, d in self.generators)
        object.__setattr__(self, "generators", gens)
        if any(d <= 0 for _, d in gens):
            raise GradingError("generator degrees must be positive")
        if len({n for n, _ in gens}) != len(gens):
            raise GradingError("generator names must be distinct")
        if self.truncation <= 0:
            raise GradingError("truncation must be positive")

    @property
    def ngens(self) -> int:
        return len(self.generators)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.generators)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.generators)

    @property
    def is_polynomial(self) -> bool:
        return all(d % 2 == 0 for d in self.degrees)

    def with_truncation(self, truncation: int) -> "FreeGCAlgebra":
        return FreeGCAlgebra(self.field, self.generators, truncation)

    def _max_exponent(self, k: int) -> int | None:
        return 1 if self.degrees[k] % 2 else None

    # -- monomial bases ---------------------------------------------------
    def basis(self, degree: int) -> tuple[tuple[int, ...], ...]:
        """Monomials of ``degree`` in deglex order (larger leading exponent first)."""
        return _basis(self.degrees, degree)

    def index(self, degree: int) -> dict[tuple[int, ...], int]:
        return _index(self.degrees, degree)

    def dim(self, degree: int) -> int:
        return len(self.basis(degree)) if degree >= 0 else 0

    def monomial_degree(self, exp: Sequence[int]) -> int:
        return sum(e * d for e, d in zip(exp, self.degrees))

    @property
    def unit(self) -> tuple[int, ...]:
        return (0,) * self.ngens

    def gen_exp(self, k: int, power: int = 1) -> tuple[int, ...]:
        e = [0] * self.ngens
        e[k] = power
        return tuple(e)

    def mul_monomials(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, tuple[int, ...]] | None:
        """Product of two monomials as (sign, monomial), or None if it vanishes."""
        sign = 1
        a_right = 0
        degs = self.degrees
        # moving each odd factor of b left past the odd factors of a with larger index
        for k in range(self.ngens - 1, -1, -1):
            if degs[k] % 2:
                if b[k] and a_right % 2:
                    sign = -sign
                a_right += a[k]
        out = tuple(x + y for x, y in zip(a, b))
        for k, e in enumerate(out):
            if degs[k] % 2 and e > 1:
                return None
        return sign, out

    # -- polynomials ------------------------------------------------------
    def poly_dot(self, pairs: Iterable[tuple[Mapping, Mapping]]) -> Poly:
        """``sum p_i q_i`` over a polynomial ring.

        Coefficients are scaled to integers and accumulated exactly, then
        normalized once, which avoids a rational per partial product.
        """
        if not self.is_polynomial:
            out: Poly = {}
            for p, q in pairs:
                for e, v in self.poly_mul(p, q).items():
                    out[e] = self.field.add(out.get(e, self.field.zero), v)
            return {e: v for e, v in out.items() if v}
        f = self.field
        add = operator.add
        scaled = []
        for p, q in pairs:
            if not p or not q:
                continue
            dp, ip = _integral(p, f)
            dq, iq = _integral(q, f)
            scaled.append((dp * dq, ip, iq))
        if not scaled:
            return {}
        den = math.lcm(*(d for d, _, _ in scaled))
        acc: dict = {}
        get = acc.get
        for d, ip, iq in scaled:
            m = den // d
            for ea, ca in ip:
                if m != 1:
                    ca *= m
                for eb, cb in iq:
                    e = tuple(map(add, ea, eb))
                    acc[e] = get(e, 0) + ca * cb
        if f.p:
            p_ = f.p
            return {e: v % p_ for e, v in acc.items() if v % p_}
        return {e: Fraction(v, den) for e, v in acc.items() if v}

    def poly_mul(self, p: Mapping, q: Mapping) -> Poly:
        f = self.field
        out: Poly = {}
        if self.is_polynomial:
            return self.poly_dot(((p, q),))
        for ea, ca in p.items():
            for eb, cb in q.items():
                r = self.mul_monomials(ea, eb)
                if r is None:
                    continue
                s, e = r
                c = f.mul(ca, cb)
                v = f.add(out.get(e, f.zero), c if s > 0 else f.neg(c))
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return out

    def poly_gen(self, k: int) -> Poly:
        return {self.gen_exp(k): self.field.one}

    def poly_const(self, c) -> Poly:
        c = self.field.coerce(c)
        return {self.unit: c} if c else {}

    def poly_degree(self, p: Mapping) -> int | None:
        degs = {self.monomial_degree(e) for e in p}
        if len(degs) > 1:
            raise GradingError(f"inhomogeneous polynomial {p}")
        return degs.pop() if degs else None

    def augment(self, p: Mapping):
        """Constant term (image under the augmentation to the ground field)."""
        return p.get(self.unit, self.field.zero)

    def encode_poly(self, p: Mapping) -> list:
        f = self.field
        return [[list(e), f.encode(c)] for e, c in sorted(p.items(), reverse=True)]

    def decode_poly(self, data: Iterable) -> Poly:
        f = self.field
        out: Poly = {}
        for e, c in data:
            c = f.coerce(c)
            if c:
                out[tuple(e)] = c
        return out

    def poincare_series(self, stop: int | None = None) -> GradedDims:
        """Counts monomials per degree by dynamic programming (no enumeration)."""
        stop = self.truncation + 1 if stop is None else stop
        coeffs = [1] + [0] * (stop - 1)
        for d in self.degrees:
            if d % 2:
                for k in range(stop - 1, d - 1, -1):
                    coeffs[k] += coeffs[k - d]
            else:
                for k in range(d, stop):
                    coeffs[k] += coeffs[k - d]
        return GradedDims(tuple(coeffs[:stop]))

    def to_dict(self) -> dict:
        return {
            "field": self.field.to_dict(),
            "generators": [list(g) for g in self.generators],
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FreeGCAlgebra":
        return cls(FieldSpec.from_dict(d["field"]), tuple(tuple(g) for g in d["generators"]), d["truncation"])


_BASIS_CACHE: dict = {}


def _basis(degrees: tuple[int, ...], degree: int) -> tuple[tuple[int, ...], ...]:
    key = (degrees, degree)
    hit = _BASIS_CACHE.get(key)
    if hit is not None:
        return hit
    out: list[tuple[int, ...]] = []
    if degree >= 0:
        n = len(degrees)

        def rec(k: int, left: int, prefix: tuple[int, ...]) -> None:
            if k == n:
                if left == 0:
                    out.append(prefix)
                return
            d = degrees[k]
            top = left // d
            if d % 2:
                top = min(top, 1)
            for e in range(top, -1, -1):
                rec(k + 1, left - e * d, prefix + (e,))

        rec(0, degree, ())
    res = tuple(out)
    _BASIS_CACHE[key] = res
    return res


_INDEX_CACHE: dict = {}


def _index(degrees: tuple[int, ...], degree: int) -> dict:
    key = (degrees, degree)
    hit = _INDEX_CACHE.get(key)
    if hit is None:
        hit = {e: i for i, e in enumerate(_basis(degrees, degree))}
        _INDEX_CACHE[key] = hit
    return hit


def _integral(p: Mapping, f: FieldSpec) -> tuple[int, list[tuple[tuple[int, ...], int]]]:
    """``(d, [(e, d * c_e)])`` with integer entries; ``d = 1`` over a prime field."""
    if f.p:
        return 1, [(e, int(c)) for e, c in p.items()]
    d = math.lcm(*(c.denominator for c in p.values()))
    if d == 1:
        return 1, [(e, c.numerator) for e, c in p.items()]
    return d, [(e, c.numerator * (d // c.denominator)) for e, c in p.items()]


def poincare_series(obj, stop: int | None = None) -> GradedDims:
    """Poincare series of a :class:`FreeGCAlgebra` or :class:`GradedModule`."""
    if isinstance(obj, FreeGCAlgebra):
        return obj.poincare_series(stop)
    if isinstance(obj, GradedModule):
        dims = obj.dims if stop is None else obj.dims[:stop]
        return GradedDims(dims)
    raise TypeError(f"no Poincare series for {type(obj).__name__}")


def trivial_algebra(f: FieldSpec, truncation: int = DEFAULT_TRUNCATION) -> FreeGCAlgebra:
    return FreeGCAlgebra(f, (), truncation)


def tensor_algebra(a: FreeGCAlgebra, b: FreeGCAlgebra) -> FreeGCAlgebra:
    """A (x) B: generator lists concatenated, clashing names in B primed."""
    if a.field != b.field:
        raise GradingError(f"field mismatch: {a.field} vs {b.field}")
    if a.truncation != b.truncation:
        raise GradingError("truncation mismatch")
    taken = set(a.names)
    gens = list(a.generators)
    for name, d in b.generators:
        while name in taken:
            name += "'"
        taken.add(name)
        gens.append((name, d))
    return FreeGCAlgebra(a.field, tuple(gens), a.truncation)


def tensor_power(a: FreeGCAlgebra, n: int) -> FreeGCAlgebra:
    """A^{(x)n} with generators ordered copy-major and named ``name_c``."""
    if n < 1:
        raise GradingError("tensor power needs n >= 1")
    if n == 1:
        return a
    gens = tuple((f"{name}_{c}", d) for c in range(1, n + 1) for name, d in a.generators)
    return FreeGCAlgebra(a.field, gens, a.truncation)


def copy_var(a: FreeGCAlgebra, copy: int, j: int) -> int:
    """Index in A^{(x)n} of generator ``j`` of copy ``copy`` (1-based copies)."""
    return (copy - 1) * a.ngens + j


@dataclass(frozen=True, eq=False)
class GradedModule:
    """Locally finite graded module over a free graded-commutative algebra.

    ``dims[i]`` is the dimension in degree ``i`` for ``0 <= i <= D``.
    ``actions[k][i]`` is the matrix of generator ``k`` from degree ``i`` to
    degree ``i + deg(k)`` (present whenever that target degree is ``<= D``).
    """

    algebra: FreeGCAlgebra
    dims: tuple[int, ...]
    actions: tuple[Mapping[int, SparseMatrix], ...]
    name: str = ""
    labels: Mapping[int, tuple] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        a = self.algebra
        if len(self.dims) != a.truncation + 1:
            raise GradingError("module dims must cover degrees 0..D")
        if len(self.actions) != a.ngens:
            raise GradingError("one action per algebra generator required")
        for k, d in enumerate(a.degrees):
            for i in range(0, a.truncation + 1 - d):
                m = self.actions[k].get(i)
                if m is None:
                    raise GradingError(f"missing action of generator {k} in degree {i}")
                if (m.cols, m.rows) != (self.dims[i], self.dims[i + d]):
                    raise GradingError(f"action of generator {k} in degree {i} has wrong shape")

    @property
    def truncation(self) -> int:
        return self.algebra.truncation

    @property
    def field(self) -> FieldSpec:
        return self.algebra.field

    def dim(self, degree: int) -> int:
        return self.dims[degree] if 0 <= degree < len(self.dims) else 0

    def act(self, k: int, degree: int, vec: Mapping[int, object]) -> dict:
        """Apply generator ``k`` to a vector of the given degree."""
        target = degree + self.algebra.degrees[k]
        if target > self.truncation:
            raise GradingError(f"action beyond truncation D={self.truncation}")
        return self.actions[k][degree].apply(vec)

    def act_monomial(self, exp: Sequence[int], degree: int, vec: Mapping[int, object]) -> dict:
        """Apply a monomial, rightmost generator first (graded-commutative order)."""
        cur = dict(vec)
        deg = degree
        degs = self.algebra.degrees
        for k in range(len(exp) - 1, -1, -1):
            for _ in range(exp[k]):
                if not cur:
                    return {}
                cur = self.act(k, deg, cur)
                deg += degs[k]
        return cur

    def act_poly(self, p: Mapping, degree: int, vec: Mapping[int, object]) -> dict:
        f = self.field
        out: dict = {}
        for e, c in p.items():
            axpy(out, c, self.act_monomial(e, degree, vec), f)
        return out

    def check_relations(self) -> bool:
        """Koszul commutation of generator actions and odd squares vanishing."""
        a = self.algebra
        f = a.field
        D = self.truncation
        degs = a.degrees
        for k, l in itertools.combinations_with_replacement(range(a.ngens), 2):
            for i in range(0, D + 1 - degs[k] - degs[l]):
                kl = self.actions[k][i + degs[l]] @ self.actions[l][i]
                if k == l:
                    if degs[k] % 2 and f.char != 2 and not kl.is_zero():
                        return False
                    continue
                lk = self.actions[l][i + degs[k]] @ self.actions[k][i]
                sign = -1 if (degs[k] % 2 and degs[l] % 2) else 1
                if kl.to_dense() != [[f.mul(f.coerce(sign), v) for v in row] for row in lk.to_dense()]:
                    return False
        return True


def _multiplication_actions(a: FreeGCAlgebra, gen_degrees: Sequence[int]) -> tuple[tuple, list]:
    """Actions on the free module ``sum_g A.e_g``; basis per degree is (g, monomial)."""
    D = a.truncation
    f = a.field
    bases = []
    for i in range(D + 1):
        bases.append([(g, e) for g, dg in enumerate(gen_degrees) for e in a.basis(i - dg)])
    indices = [{b: n for n, b in enumerate(basis)} for basis in bases]
    actions = []
    for k, d in enumerate(a.degrees):
        per = {}
        ek = a.gen_exp(k)
        for i in range(0, D + 1 - d):
            entries = []
            for col, (g, e) in enumerate(bases[i]):
                r = a.mul_monomials(ek, e)
                if r is None:
                    continue
                s, prod = r
                entries.append((indices[i + d][(g, prod)], col, f.one if s > 0 else f.neg(f.one)))
            per[i] = SparseMatrix(len(bases[i + d]), len(bases[i]), tuple(entries), f)
        actions.append(per)
    return tuple(actions), bases


def free_module(a: FreeGCAlgebra, gen_degrees: Sequence[int] = (0,), name: str = "") -> GradedModule:
    """The free module on generators of the given degrees (A itself by default)."""
    actions, bases = _multiplication_actions(a, gen_degrees)
    labels = {i: tuple(b) for i, b in enumerate(bases)}
    return GradedModule(a, tuple(len(b) for b in bases), actions, name or "free", labels)


def trivial_module(a: FreeGCAlgebra) -> GradedModule:
    """The ground field in degree 0, every positive-degree generator acting by zero."""
    D = a.truncation
    dims = (1,) + (0,) * D
    actions = tuple(
        {i: SparseMatrix.zeros(dims[i + d], dims[i], a.field) for i in range(0, D + 1 - d)}
        for d in a.degrees
    )
    return GradedModule(a, dims, actions, "k")


def restrict_module(m: GradedModule, ring: FreeGCAlgebra, images: Sequence[int | None]) -> GradedModule:
    """Restrict scalars along the ring map sending generator ``i`` of ``ring`` to
    generator ``images[i]`` of ``m.algebra`` (``None`` sends it to zero)."""
    a = m.algebra
    if ring.field != a.field:
        raise GradingError("field mismatch")
    if ring.truncation != a.truncation:
        raise GradingError("truncation mismatch")
    if len(images) != ring.ngens:
        raise GradingError("one image per generator required")
    D = a.truncation
    actions = []
    for i, (img, d) in enumerate(zip(images, ring.degrees)):
        if img is None:
            actions.append({k: SparseMatrix.zeros(m.dims[k + d], m.dims[k], a.field) for k in range(0, D + 1 - d)})
            continue
        if a.degrees[img] != d:
            raise GradingError(f"generator {ring.names[i]} (degree {d}) cannot map to degree {a.degrees[img]}")
        actions.append(m.actions[img])
    return GradedModule(ring, m.dims, tuple(actions), m.name, m.labels)


def restrict_to_tensor_power(m: GradedModule, n: int) -> GradedModule:
    """``m`` over A viewed over A^{(x)n} through the n-fold multiplication."""
    a = m.algebra
    ring = tensor_power(a, n)
    images = [j for _ in range(n) for j in range(a.ngens)]
    return restrict_module(m, ring, images)
