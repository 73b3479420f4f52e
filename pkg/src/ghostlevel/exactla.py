"""Exact scalar arithmetic and sparse linear algebra over F_p and Q.

Every homology, kernel and homotopy computation in the package bottoms out
here.  Vectors are sparse ``dict[int, scalar]`` with no stored zeros; F_p
scalars are ``int`` residues in ``[0, p)`` and Q scalars are ``Fraction``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Vector = dict  # dict[int, scalar], sparse, no zero entries


class MalformedInputError(ValueError):
    """Raised for inputs that cannot be interpreted in the requested field."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field F_p (``kind="prime"``) or the rationals (``kind="rational"``)."""

    kind: str
    p: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "prime":
            if self.p is None or not _is_prime(self.p):
                raise MalformedInputError(f"not a prime: {self.p!r}")
            if self.p >= 2**31:
                raise MalformedInputError("prime fields require p < 2^31")
        elif self.kind == "rational":
            if self.p is not None:
                raise MalformedInputError("rationals take no modulus")
        else:
            raise MalformedInputError(f"unknown field kind {self.kind!r}")

    @classmethod
    def prime(cls, p: int) -> "FieldSpec":
        return cls("prime", p)

    @classmethod
    def rationals(cls) -> "FieldSpec":
        return cls("rational")

    @classmethod
    def from_char(cls, char: int) -> "FieldSpec":
        return cls.rationals() if char == 0 else cls.prime(char)

    @property
    def char(self) -> int:
        return 0 if self.kind == "rational" else self.p  # type: ignore[return-value]

    def __str__(self) -> str:
        return "Q" if self.kind == "rational" else f"F_{self.p}"

    # -- scalars ---------------------------------------------------------
    def coerce(self, x) -> int | Fraction:
        if self.kind == "rational":
            try:
                return Fraction(x)
            except (TypeError, ValueError) as exc:
                raise MalformedInputError(f"cannot read {x!r} as a rational") from exc
        p = self.p
        if isinstance(x, Fraction):
            if x.denominator % p == 0:
                raise MalformedInputError(f"{x} has denominator divisible by {p}")
            return (x.numerator * pow(x.denominator, -1, p)) % p
        if isinstance(x, int):
            return x % p
        if isinstance(x, str):
            return self.coerce(Fraction(x))
        raise MalformedInputError(f"cannot read {x!r} in F_{p}")

    @property
    def zero(self):
        return Fraction(0) if self.kind == "rational" else 0

    @property
    def one(self):
        return Fraction(1) if self.kind == "rational" else 1

    def add(self, a, b):
        return (a + b) % self.p if self.p else a + b

    def sub(self, a, b):
        return (a - b) % self.p if self.p else a - b

    def mul(self, a, b):
        return (a * b) % self.p if self.p else a * b

    def neg(self, a):
        return (-a) % self.p if self.p else -a

    def inv(self, a):
        if not a:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.p) if self.p else 1 / a

    def random_element(self, rng) -> int | Fraction:
        if self.p:
            return rng.randrange(self.p)
        return Fraction(rng.randint(-3, 3))

    def encode(self, a) -> int | str:
        """JSON-friendly form of a scalar."""
        if self.p:
            return int(a)
        a = Fraction(a)
        return int(a) if a.denominator == 1 else str(a)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FieldSpec":
        return cls(d["kind"], d.get("p"))


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable ``rows x cols`` matrix stored as sorted (row, col, value) triples."""

    rows: int
    cols: int
    entries: tuple = ()
    field: FieldSpec = field(default_factory=FieldSpec.rationals, compare=False)

    def __post_init__(self) -> None:
        seen = set()
        clean = []
        for r, c, v in self.entries:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise MalformedInputError(f"entry ({r}, {c}) outside {self.rows}x{self.cols}")
            if (r, c) in seen:
                raise MalformedInputError(f"duplicate entry ({r}, {c})")
            seen.add((r, c))
            v = self.field.coerce(v)
            if not v:
                raise MalformedInputError(f"stored zero at ({r}, {c})")
            clean.append((r, c, v))
        object.__setattr__(self, "entries", tuple(sorted(clean)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], f: FieldSpec, ncols: int | None = None) -> "SparseMatrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        entries = []
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise MalformedInputError("ragged rows")
            for j, v in enumerate(row):
                v = f.coerce(v)
                if v:
                    entries.append((i, j, v))
        return cls(nrows, ncols, tuple(entries), f)

    @classmethod
    def from_columns(cls, columns: Sequence[Mapping[int, object]], nrows: int, f: FieldSpec) -> "SparseMatrix":
        entries = [(r, c, v) for c, col in enumerate(columns) for r, v in col.items() if v]
        return cls(nrows, len(columns), tuple(entries), f)

    @classmethod
    def identity(cls, n: int, f: FieldSpec) -> "SparseMatrix":
        return cls(n, n, tuple((i, i, f.one) for i in range(n)), f)

    @classmethod
    def zeros(cls, rows: int, cols: int, f: FieldSpec) -> "SparseMatrix":
        return cls(rows, cols, (), f)

    def row_dicts(self) -> list[dict]:
        out: list[dict] = [dict() for _ in range(self.rows)]
        for r, c, v in self.entries:
            out[r][c] = v
        return out

    def column_dicts(self) -> list[dict]:
        out: list[dict] = [dict() for _ in range(self.cols)]
        for r, c, v in self.entries:
            out[c][r] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.cols, self.rows, tuple((c, r, v) for r, c, v in self.entries), self.field)

    def to_dense(self) -> list[list]:
        out = [[self.field.zero] * self.cols for _ in range(self.rows)]
        for r, c, v in self.entries:
            out[r][c] = v
        return out

    def _columns(self) -> list[dict]:
        # cached; the matrix is immutable so this is not observable
        cols = self.__dict__.get("_cols")
        if cols is None:
            cols = self.column_dicts()
            object.__setattr__(self, "_cols", cols)
        return cols

    def apply(self, x: Mapping[int, object]) -> dict:
        f = self.field
        cols = self._columns()
        out: dict = {}
        for c, xc in x.items():
            if xc:
                for r, v in cols[c].items():
                    out[r] = f.add(out.get(r, f.zero), f.mul(v, xc))
        return {k: v for k, v in out.items() if v}

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise MalformedInputError("dimension mismatch in product")
        f = self.field
        cols = other.column_dicts()
        out_cols = [self.apply(col) for col in cols]
        return SparseMatrix.from_columns(out_cols, self.rows, f)

    def is_zero(self) -> bool:
        return not self.entries


def _axmy(y: dict, a, x: Mapping[int, object], p: int | None) -> None:
    """``y -= a * x`` in place (entries reduced mod ``p`` when given)."""
    get = y.get
    pop = y.pop
    if p:
        for k, v in x.items():
            nv = (get(k, 0) - a * v) % p
            if nv:
                y[k] = nv
            else:
                pop(k, None)
    else:
        for k, v in x.items():
            nv = get(k, 0) - a * v
            if nv:
                y[k] = nv
            else:
                pop(k, None)


class Echelon:
    """Incrementally maintained row space in reduced row echelon form.

    Pivot rows are normalized (leading 1) and fully reduced against each
    other, so the stored basis is the unique RREF of the inserted rows no
    matter the insertion order.  ``tags`` optionally track, for each pivot
    row, the combination of inserted rows that produced it.
    """

    def __init__(self, f: FieldSpec, track: bool = False) -> None:
        self.f = f
        self.pivots: dict[int, dict] = {}
        self.track = track
        self.tags: dict[int, dict] = {}
        self._count = 0

    def __len__(self) -> int:
        return len(self.pivots)

    def reduce(self, vec: Mapping[int, object], tag: dict | None = None) -> tuple[dict, dict | None]:
        row = dict(vec)
        tag = dict(tag) if tag is not None else None
        hits = [c for c in row if c in self.pivots]
        for c in hits:
            a = row.get(c)
            if not a:
                continue
            _axmy(row, a, self.pivots[c], self.f.p)
            if tag is not None:
                _axmy(tag, a, self.tags[c], self.f.p)
        return row, tag

    def add(self, vec: Mapping[int, object]) -> int | None:
        """Insert a row; return its new pivot column, or None if dependent."""
        tag = {self._count: self.f.one} if self.track else None
        self._count += 1
        row, tag = self.reduce(vec, tag)
        if not row:
            return None
        f = self.f
        c = min(row)
        inv = f.inv(row[c])
        row = {k: f.mul(v, inv) for k, v in row.items()}
        if tag is not None:
            tag = {k: f.mul(v, inv) for k, v in tag.items()}
        for pc, prow in self.pivots.items():
            a = prow.get(c)
            if a:
                _axmy(prow, a, row, f.p)
                if tag is not None:
                    _axmy(self.tags[pc], a, tag, f.p)
        self.pivots[c] = row
        if tag is not None:
            self.tags[c] = tag
        return c

    def contains(self, vec: Mapping[int, object]) -> bool:
        row, _ = self.reduce(vec)
        return not row


def _check_field(m: SparseMatrix, f: FieldSpec) -> list[dict]:
    if m.field != f:
        # re-coerce entries; raises on e.g. denominators divisible by p
        return [{c: f.coerce(v) for c, v in row.items() if f.coerce(v)} for row in m.row_dicts()]
    return m.row_dicts()


def rank(m: SparseMatrix, f: FieldSpec | None = None) -> int:
    """Rank of ``m`` over ``f`` (defaults to the matrix's own field)."""
    f = f or m.field
    rows = _check_field(m, f)
    if m.rows > m.cols:
        rows = _check_field(m.transpose(), f)
    ech = Echelon(f)
    for row in rows:
        if row:
            ech.add(row)
    return len(ech)


def rank_of_vectors(vectors: Iterable[Mapping[int, object]], f: FieldSpec) -> int:
    ech = Echelon(f)
    for v in vectors:
        if v:
            ech.add(v)
    return len(ech)


def _rref_kernel(pivots: Mapping[int, dict], ncols: int, f: FieldSpec) -> list[dict]:
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    by_free: dict[int, dict] = {c: {c: f.one} for c in free}
    for pc, prow in pivots.items():
        for k, v in prow.items():
            if k != pc and k in by_free:
                by_free[k][pc] = f.neg(v)
    for c in free:
        basis.append(by_free[c])
    return basis


def kernel_basis(m: SparseMatrix, f: FieldSpec | None = None) -> list[dict]:
    """Basis of ``{x : m x = 0}``, one vector per non-pivot column of the RREF."""
    f = f or m.field
    ech = Echelon(f)
    for row in _check_field(m, f):
        if row:
            ech.add(row)
    return _rref_kernel(ech.pivots, m.cols, f)


@dataclass(frozen=True)
class SolveResult:
    consistent: bool
    particular: dict | None
    kernel: list
    witness: dict | None = None  # y with y^T m = 0 and y.b != 0 when inconsistent


def solve(m: SparseMatrix, b: Mapping[int, object] | Sequence, f: FieldSpec | None = None,
          want_witness: bool = False) -> SolveResult:
    """Solve ``m x = b``.

    Returns one particular solution (free variables set to zero) and a
    kernel basis, or ``consistent=False``.  With ``want_witness`` an
    inconsistent system also carries a left vector ``y`` with ``y m = 0``
    and ``y . b != 0``.
    """
    f = f or m.field
    if not isinstance(b, Mapping):
        if len(b) != m.rows:
            raise MalformedInputError(f"rhs has length {len(b)}, expected {m.rows}")
        b = {i: f.coerce(v) for i, v in enumerate(b) if f.coerce(v)}
    elif any(not (0 <= i < m.rows) for i in b):
        raise MalformedInputError("rhs index outside matrix rows")
    rows = _check_field(m, f)
    n = m.cols
    ech = Echelon(f, track=want_witness)
    for i, row in enumerate(rows):
        aug = dict(row)
        bi = b.get(i)
        if bi:
            aug[n] = f.coerce(bi)
        if not aug:
            ech._count += 1
            continue
        ech.add(aug)
    if n in ech.pivots:
        witness = None
        if want_witness:
            witness = dict(ech.tags[n])
        return SolveResult(False, None, [], witness)
    x = {}
    for pc, prow in ech.pivots.items():
        v = prow.get(n)
        if v:
            x[pc] = v
    stripped = {pc: {k: v for k, v in prow.items() if k != n} for pc, prow in ech.pivots.items()}
    return SolveResult(True, x, _rref_kernel(stripped, n, f))


class LinearSystem:
    """A fixed matrix reduced once and reused against many right-hand sides.

    Columns are the unknowns.  Used by the lifting and homotopy solvers,
    which solve ``d X = rhs`` for many ``rhs`` in one degree block.
    """

    def __init__(self, columns: Sequence[Mapping[int, object]], f: FieldSpec) -> None:
        self.f = f
        self.ncols = len(columns)
        self._ech = Echelon(f, track=True)
        for col in columns:
            self._ech.add(col)

    @property
    def rank(self) -> int:
        return len(self._ech)

    def solve(self, rhs: Mapping[int, object]) -> dict | None:
        """Return x with ``sum_j x_j col_j = rhs``, or None if rhs is not in the span."""
        if not self._ech.contains(rhs):
            return None
        f = self.f
        x: dict = {}
        # RREF: the coefficient of pivot row pc in rhs is rhs[pc]
        for pc, a in rhs.items():
            if pc in self._ech.tags:
                axpy(x, a, self._ech.tags[pc], f)
        return x

    def contains(self, rhs: Mapping[int, object]) -> bool:
        return self._ech.contains(rhs)


def dot(u: Mapping[int, object], v: Mapping[int, object], f: FieldSpec):
    if len(u) > len(v):
        u, v = v, u
    acc = f.zero
    for k, a in u.items():
        b = v.get(k)
        if b:
            acc = f.add(acc, f.mul(a, b))
    return acc


def axpy(y: dict, a, x: Mapping[int, object], f: FieldSpec) -> dict:
    """In place ``y += a * x``; returns ``y``."""
    if not a:
        return y
    for k, v in x.items():
        nv = f.add(y.get(k, f.zero), f.mul(a, v))
        if nv:
            y[k] = nv
        else:
            y.pop(k, None)
    return y


def iter_entries(vec: Mapping[int, object]) -> Iterator[tuple[int, object]]:
    return iter(sorted(vec.items()))
