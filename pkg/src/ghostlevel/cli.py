"""Command-line front end.

    ghostlevel level --group "SU(3)" --n 3 --char 0
    ghostlevel tor --group "SU(2)" --n 2
    ghostlevel loop --group "Sp(2)" --trials 100 --seed 7
    ghostlevel --verify certs/level_SU3_n3_c0.json

Each (group, n, characteristic) cell writes one certificate file to
``--out``.  Exit codes: 0 success, 1 verification failure, 2 usage or
catalog error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .catalog import CatalogError, load_catalog, lookup
from .certificates import (
    VerificationError,
    em_payload,
    ext_payload,
    ghost_chain_payload,
    level_payload,
    loop_payload,
    tor_payload,
    verify_file,
    write_certificate,
)
from .exactla import FieldSpec, MalformedInputError
from .invariants import (
    em_collapse_check,
    ext_into_ring,
    ghost_chain_certificate,
    level_bounds,
    loop_ghost_triviality,
    tor,
)
from .resolutions import _diagonal_resolution

COMMANDS = ("level", "tor", "ext", "ghost-chain", "loop", "em")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """One batch run; ``D`` must be at least ``2 * max generator degree * max n``."""

    command: str
    groups: list[str]
    ns: list[int]
    chars: list[int] = field(default_factory=lambda: [0])
    D: int | None = None
    trials: int = 100
    seed: int = 0
    out: str = "certificates"
    catalog: str | None = None
    jobs: int = 1

    def validate(self, degrees: dict[str, tuple[int, ...]]) -> None:
        if not self.groups:
            raise UsageError("at least one --group is required")
        if not self.ns or min(self.ns) < 1:
            raise UsageError("n must be a positive integer")
        if self.command == "ghost-chain" and min(self.ns) < 2:
            raise UsageError("ghost-chain needs n >= 2")
        need = 2 * max((max(d, default=0) for d in degrees.values()), default=0) * max(self.ns)
        if self.D is None:
            self.D = max(40, need)
        if self.D < need:
            raise UsageError(f"D = {self.D} is below 2 * max degree * max n = {need}")
        if self.trials < 0 or self.jobs < 1:
            raise UsageError("trials must be >= 0 and jobs >= 1")


def parse_ns(text: str) -> list[int]:
    """``"3"``, ``"2,3,4"`` or ``"2-4"``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise UsageError(f"bad n specification {text!r}")
    return sorted(set(out))


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "", text)


def cell_path(cfg: RunConfig, group: str, n: int, char: int) -> Path:
    return Path(cfg.out) / f"{cfg.command}_{_slug(group)}_n{n}_c{char}.json"


def run_cell(cfg: RunConfig, group: str, n: int, char: int) -> tuple[dict, bool]:
    """Compute one cell, write its certificate, return (summary row, success)."""
    f = FieldSpec.from_char(char)
    entries = load_catalog(cfg.catalog) if cfg.catalog else None
    model = lookup(group, f, entries)
    a = model.algebra(f, cfg.D)
    conf = {"command": cfg.command, "group": group, "n": n, "char": char, "D": cfg.D, "seed": cfg.seed,
            "trials": cfg.trials}
    row: dict = {"group": group, "n": n, "char": char}
    cmd = cfg.command
    if cmd == "level":
        cert = level_bounds(a, n)
        doc = level_payload(cert, conf)
        row.update(lower=cert.lower, upper=cert.upper, exact=cert.exact, pd=cert.pd, formula_value=cert.formula_value)
        ok = not (cert.exact and cert.lower != cert.formula_value)
    elif cmd == "tor":
        P = _diagonal_resolution(a, n).complex
        t = tor(a, n, resolution=P)
        doc = tor_payload(a, n, t, P, conf)
        row.update(total_dim=t.total_dim, degrees=t.total_degrees())
        ok = True
    elif cmd == "ext":
        P = _diagonal_resolution(a, n).complex
        e = ext_into_ring(a, n, resolution=P)
        doc = ext_payload(a, e, P, conf)
        row.update(generator_degree=e.generator_degree, generator_dims=e.generator_total,
                   one_dimensional=e.one_dimensional())
        ok = e.one_dimensional()
    elif cmd == "ghost-chain":
        cert = ghost_chain_certificate(a, n, yoneda=True)
        doc = ghost_chain_payload(cert, conf)
        row.update(ok=cert.ok, length=cert.length, composite_degree=cert.composite_degree,
                   obstruction_degree=cert.obstruction_degree)
        ok = cert.ok
    elif cmd == "loop":
        cert = loop_ghost_triviality(a, cfg.trials, seed=cfg.seed)
        doc = loop_payload(cert, conf)
        row.update(free=cert.freeness.free, trials=len(cert.trials), null_homotopic=cert.null_count)
        ok = cert.ok
    elif cmd == "em":
        P = _diagonal_resolution(a, n).complex
        e = em_collapse_check(a, n, resolution=P)
        doc = em_payload(a, n, e, P, conf)
        row.update(ok=e.ok, first_mismatch=e.first_mismatch)
        ok = e.ok
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(cmd)
    path = write_certificate(doc, cell_path(cfg, group, n, char))
    row["certificate"] = str(path)
    return row, ok


def _cells(cfg: RunConfig) -> list[tuple[str, int, int]]:
    ns = [1] if cfg.command == "loop" else cfg.ns
    return [(g, n, c) for g in cfg.groups for c in cfg.chars for n in ns]


def run(cfg: RunConfig) -> int:
    cells = _cells(cfg)
    if cfg.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_star, [(cfg, *c) for c in cells]))
    else:
        results = [run_cell(cfg, *c) for c in cells]
    status = EXIT_OK
    for row, ok in results:
        print(json.dumps(row, sort_keys=True))
        if not ok:
            status = EXIT_FAIL
    return status


def _run_star(args: tuple) -> tuple[dict, bool]:
    return run_cell(*args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghostlevel", description="Certified levels and ghost lengths for C*(BG).")
    p.add_argument("--verify", nargs="+", metavar="FILE", help="re-check certificate files and exit")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--group", action="append", help="catalog group name (repeatable)")
        sp.add_argument("--n", default=None, help="n, list 2,3 or range 2-4")
        sp.add_argument("--char", action="append", type=int, help="0 or a prime (repeatable)")
        sp.add_argument("--D", type=int, default=None, help="internal-degree truncation")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="certificate directory")
        sp.add_argument("--config", default=None, help="JSON file with the same fields; flags override it")
        sp.add_argument("--catalog", default=None, help="alternative catalog file")
        sp.add_argument("--jobs", type=int, default=None)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(base, dict):
            raise UsageError("config must be a JSON object")
    merged = {
        "groups": args.group or base.get("groups") or ([base["group"]] if "group" in base else []),
        "ns": parse_ns(args.n if args.n is not None else base.get("n", "2")),
        "chars": args.char or base.get("chars") or ([base["char"]] if "char" in base else [0]),
        "D": args.D if args.D is not None else base.get("D"),
        "trials": args.trials if args.trials is not None else base.get("trials", 100),
        "seed": args.seed if args.seed is not None else base.get("seed", 0),
        "out": args.out or base.get("out", "certificates"),
        "catalog": args.catalog or base.get("catalog"),
        "jobs": args.jobs if args.jobs is not None else base.get("jobs", 1),
    }
    return RunConfig(args.command, **merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.verify:
        status = EXIT_OK
        for path in args.verify:
            try:
                kind = verify_file(path)
                print(f"OK   {path} ({kind})")
            except VerificationError as exc:
                print(f"FAIL {path}: {exc}")
                status = EXIT_FAIL
            except (OSError, json.JSONDecodeError) as exc:
                print(f"FAIL {path}: unreadable ({exc})")
                status = EXIT_FAIL
        return status
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = config_from_args(args)
        entries = load_catalog(cfg.catalog) if cfg.catalog else None
        degrees = {}
        for g in cfg.groups:
            for c in cfg.chars:
                degrees[g] = lookup(g, FieldSpec.from_char(c), entries).degrees
        cfg.validate(degrees)
    except (UsageError, CatalogError, MalformedInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
