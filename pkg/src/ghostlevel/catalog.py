"""Curated models of classifying spaces BG with polynomial cohomology.

Each record gives the generator degrees of ``H^*(BG)``, the dimension of
``G`` (checked against ``sum (deg - 1)``) and the characteristics where the
cohomology is known to be polynomial.  The free loop space model is
``A (x) Lambda(z_1..z_s)`` with ``deg z_j = deg x_j - 1``, free over A.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .exactla import FieldSpec
from .graded import DEFAULT_TRUNCATION, FreeGCAlgebra, GradedDims, GradedModule, exterior_series, free_module


class CatalogError(ValueError):
    """Unknown group, malformed record, or a characteristic the model does not cover."""


@dataclass(frozen=True)
class SpaceModel:
    """``H^*(BG) = k[x_d : d in degrees]``, valid where ``allows(char)`` holds."""

    name: str
    degrees: tuple[int, ...]
    lie_dim: int
    allowed: str = "all"  # "all", "zero-only" or "exclude:p,q"

    def __post_init__(self) -> None:
        if any(d <= 0 or d % 2 for d in self.degrees):
            raise CatalogError(f"{self.name}: generator degrees must be even and positive")
        if self.lie_dim != sum(d - 1 for d in self.degrees):
            raise CatalogError(
                f"{self.name}: lie_dim {self.lie_dim} disagrees with sum(deg - 1) = {sum(d - 1 for d in self.degrees)}"
            )
        self.excluded()  # validates the policy string

    @property
    def s(self) -> int:
        return len(self.degrees)

    def excluded(self) -> tuple[int, ...] | None:
        """Excluded primes, or None for the zero-only policy."""
        if self.allowed == "all":
            return ()
        if self.allowed == "zero-only":
            return None
        if self.allowed.startswith("exclude:"):
            try:
                return tuple(int(p) for p in self.allowed[len("exclude:"):].split(",") if p)
            except ValueError:
                pass
        raise CatalogError(f"{self.name}: bad characteristic policy {self.allowed!r}")

    def allows(self, char: int) -> bool:
        ex = self.excluded()
        if ex is None:
            return char == 0
        return char not in ex

    def algebra(self, f: FieldSpec, truncation: int = DEFAULT_TRUNCATION) -> FreeGCAlgebra:
        if not self.allows(f.char):
            raise CatalogError(f"H^*(B{self.name}) is not polynomial at characteristic {f.char}")
        names = _generator_names(self.degrees)
        return FreeGCAlgebra(f, tuple(zip(names, self.degrees)), truncation)


def _generator_names(degrees: tuple[int, ...]) -> list[str]:
    out, seen = [], {}
    for d in degrees:
        seen[d] = seen.get(d, 0) + 1
        out.append(f"x{d}" if seen[d] == 1 else f"x{d}_{seen[d]}")
    return out


@dataclass(frozen=True)
class LoopModel:
    """``H^*(LBG) = A (x) Lambda(z)`` as a free A-module on the square-free z-monomials."""

    base: SpaceModel
    algebra: FreeGCAlgebra
    module: GradedModule
    basis_degrees: tuple[int, ...]

    def expected_series(self) -> GradedDims:
        stop = self.algebra.truncation + 1
        return self.algebra.poincare_series(stop).times(exterior_series([d - 1 for d in self.base.degrees], stop), stop)


def parse_catalog(text: str) -> dict[str, SpaceModel]:
    out: dict[str, SpaceModel] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise CatalogError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        name, degs, dim, allowed = parts
        try:
            degrees = tuple(int(d) for d in degs.split(",") if d) if degs != "-" else ()
            lie = int(dim)
        except ValueError as exc:
            raise CatalogError(f"line {lineno}: {exc}") from None
        if name in out:
            raise CatalogError(f"line {lineno}: duplicate entry {name}")
        out[name] = SpaceModel(name, degrees, lie, allowed)
    return out


def load_catalog(path: str | Path | None = None) -> dict[str, SpaceModel]:
    """The bundled catalog, or a user file in the same format."""
    if path is None:
        text = resources.files(__package__).joinpath("catalog.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_catalog(text)


_DEFAULT: dict[str, SpaceModel] | None = None


def catalog() -> dict[str, SpaceModel]:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_catalog()
    return _DEFAULT


def lookup(name: str, f: FieldSpec, entries: dict[str, SpaceModel] | None = None) -> SpaceModel:
    entries = catalog() if entries is None else entries
    model = entries.get(name)
    if model is None:
        raise CatalogError(f"unknown group {name!r}; known: {', '.join(entries)}")
    if not model.allows(f.char):
        raise CatalogError(f"H^*(B{name}) is not polynomial at characteristic {f.char}")
    return model


def trivial_model() -> SpaceModel:
    """The trivial group: ``H^*(B1) = k``."""
    return SpaceModel("1", (), 0)


def loop_module(a: FreeGCAlgebra) -> GradedModule:
    """``A (x) Lambda(z_j)``, ``deg z_j = deg x_j - 1``, as a free A-module."""
    zdeg = [d - 1 for d in a.degrees]
    gens = sorted(sum(zdeg[j] for j in range(len(zdeg)) if mask >> j & 1) for mask in range(1 << len(zdeg)))
    return free_module(a, gens, "H(LBG)")


def loop_space_model(model: SpaceModel, f: FieldSpec, truncation: int = DEFAULT_TRUNCATION) -> LoopModel:
    a = model.algebra(f, truncation)
    m = loop_module(a)
    zdeg = [d - 1 for d in a.degrees]
    degs = tuple(sorted(sum(zdeg[j] for j in range(len(zdeg)) if mask >> j & 1) for mask in range(1 << len(zdeg))))
    return LoopModel(model, a, m, degs)
