"""Acceptance criteria 1-10, one PASS/FAIL line each.

    pytest tests/test_acceptance.py -s
    python3 tests/test_acceptance.py

Certificates produced along the way are written to a temporary directory
and re-verified from disk by criterion 10.
"""
from __future__ import annotations

import json
import random
import sys
import tempfile
import time
from pathlib import Path

import pytest

from ghostlevel.catalog import catalog
from ghostlevel.certificates import (
    em_payload,
    ext_payload,
    ghost_chain_payload,
    level_payload,
    loop_payload,
    tor_payload,
    verify_file,
    write_certificate,
)
from ghostlevel.complexes import (
    ChainComplex,
    check_obstruction,
    euler_characteristic,
    homology,
    is_ghost,
    is_null_homotopic,
    tensor_complexes,
)
from ghostlevel.exactla import FieldSpec, kernel_basis, rank
from ghostlevel.graded import exterior_series, tensor_algebra, trivial_module
from ghostlevel.invariants import (
    composite_ghost_trials,
    em_collapse_check,
    ext_into_ring,
    ghost_chain_certificate,
    level_bounds,
    loop_ghost_triviality,
    shriek_class,
    tor,
    transgression_check,
)
from ghostlevel.resolutions import _diagonal_resolution

from randinst import convolve, nonzero_upto, random_complex, random_matrix, random_ring

Q = FieldSpec.rationals()
ODD_PRIME = FieldSpec.prime(3)
CAT = catalog()
INSTANCES = 200

_levels: dict = {}


def default_D(name: str) -> int:
    return 60 if name in ("SU(2)", "SU(3)") else 40


def algebra(name: str, f: FieldSpec = Q, D: int | None = None):
    return CAT[name].algebra(f, default_D(name) if D is None else D)


def config(command: str, name: str, n: int, f: FieldSpec, D: int, **extra) -> dict:
    return {"command": command, "group": name, "n": n, "char": f.char, "D": D, **extra}


def emit(out: Path, doc: dict, stem: str) -> None:
    write_certificate(doc, out / f"{stem}.json")


def slug(name: str) -> str:
    return "".join(ch for ch in name if ch.isalnum())


def cached_level(name: str, f: FieldSpec, n: int):
    key = (name, f.char, n)
    if key not in _levels:
        _levels[key] = level_bounds(algebra(name, f), n)
    return _levels[key]


def report(number: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}", flush=True)


# ---------------------------------------------------------------------------


def criterion_1(out: Path) -> tuple[bool, str]:
    bad, cells = [], 0
    for name, m in CAT.items():
        if m.s > 3:
            continue
        for f in (Q, ODD_PRIME):
            if not m.allows(f.char):
                continue
            for n in (2, 3):
                cells += 1
                c = cached_level(name, f, n)
                want = (n - 1) * m.s + 1
                chain = c.lower_evidence
                res = c.upper_evidence
                ok = (
                    c.exact
                    and c.value == want
                    and chain is not None and chain.ok and chain.length == (n - 1) * m.s
                    and not chain.null_homotopic
                    and res is not None and res.minimal and res.length == (n - 1) * m.s
                )
                if not ok:
                    bad.append((name, f.char, n, c.lower, c.upper))
                emit(out, level_payload(c, config("level", name, n, f, c.upto)), f"level_{slug(name)}_n{n}_c{f.char}")
    return not bad, f"{cells - len(bad)}/{cells} cells exact at (n-1)s+1" + (f"; failures {bad}" if bad else "")


def criterion_2(out: Path) -> tuple[bool, str]:
    bad, rows = [], []
    for name in ("SU(2)", "SU(3)"):
        for n in (2, 3, 4):
            a = algebra(name, D=60)
            c = ghost_chain_certificate(a, n)
            links_ghost = all(r.ghost for r in c.ghost_reports)
            witnessed = (
                c.obstruction_degree is not None
                and check_obstruction(c.composite, c.obstruction_degree, c.witness)
            )
            ok = c.ok and links_ghost and not c.null_homotopic and witnessed and c.length == n - 1
            rows.append(f"{name} n={n}: obstruction at {c.obstruction_degree}")
            if not ok:
                bad.append((name, n, c.failure))
            emit(out, ghost_chain_payload(c, config("ghost-chain", name, n, Q, 60)), f"ghost-chain_{slug(name)}_n{n}_c0")
    return not bad, "; ".join(rows) + (f"; failures {bad}" if bad else "")


def criterion_3(out: Path) -> tuple[bool, str]:
    bad = []
    for name, m in CAT.items():
        a = algebra(name)
        e = ext_into_ring(a, 2)
        ok = (
            e.generator_total == {-m.lie_dim: 1}
            and e.gorenstein_total == {-m.lie_dim: 1}
            and e.matches_shifted_algebra
        )
        if not ok:
            bad.append((name, e.generator_total, e.gorenstein_total))
        P = _diagonal_resolution(a, 2).complex
        emit(out, ext_payload(a, e, P, config("ext", name, 2, Q, a.truncation)), f"ext_{slug(name)}_n2_c0")
    return not bad, f"{len(CAT) - len(bad)}/{len(CAT)} entries one-dimensional at -dim G" + (f"; failures {bad}" if bad else "")


def criterion_4(out: Path) -> tuple[bool, str]:
    bad, cells = [], 0
    for name, m in CAT.items():
        for n in (2, 3):
            cells += 1
            # D must reach the top Koszul class, internal degree (n - 1) * sum(deg)
            D = max(default_D(name), (n - 1) * sum(m.degrees))
            a = algebra(name, D=D)
            t = tor(a, n)
            stop = t.series.stop
            expected = exterior_series([d - 1 for d in m.degrees] * (n - 1), stop)
            ok = list(t.series.dims) == list(expected.dims[: len(t.series.dims)]) and t.total_dim == 2 ** (m.s * (n - 1))
            if not ok:
                bad.append((name, n, t.total_dim))
            P = _diagonal_resolution(a, n).complex
            emit(out, tor_payload(a, n, t, P, config("tor", name, n, Q, D)), f"tor_{slug(name)}_n{n}_c0")
    return not bad, f"{cells - len(bad)}/{cells} series match, total 2^(s(n-1))" + (f"; failures {bad}" if bad else "")


def criterion_5(out: Path) -> tuple[bool, str]:
    bad, nulls = [], 0
    for name in CAT:
        a = algebra(name)
        c = loop_ghost_triviality(a, 100, seed=0)
        nulls += c.null_count
        if not (c.ok and c.freeness.free and len(c.trials) == 100 and c.null_count == 100):
            bad.append((name, c.failure))
        emit(out, loop_payload(c, config("loop", name, 1, Q, a.truncation, seed=0, trials=100)), f"loop_{slug(name)}_n1_c0")
    a = algebra("SU(2)")
    neg = loop_ghost_triviality(a, 5, module=trivial_module(a))
    refused = not neg.ok and not neg.freeness.free
    ok = not bad and refused
    return ok, f"{nulls}/{100 * len(CAT)} ghosts null-homotopic; negative control {'refused' if refused else 'ACCEPTED'}" + (
        f"; failures {bad}" if bad else "")


def criterion_6(out: Path) -> tuple[bool, str]:
    bad = []
    for name in CAT:
        phi = shriek_class(algebra(name), 2)
        if not (is_ghost(phi.map).ghost and not is_null_homotopic(phi.map).null):
            bad.append(name)
    return not bad, f"{len(CAT) - len(bad)}/{len(CAT)} shriek classes ghost and not null-homotopic" + (
        f"; failures {bad}" if bad else "")


def criterion_7(out: Path) -> tuple[bool, str]:
    bad, cells = [], 0
    for name in ("SU(2)", "SU(3)", "Sp(2)"):
        for n in (2, 3):
            cells += 1
            a = algebra(name, D=40)
            P = _diagonal_resolution(a, n).complex
            e = em_collapse_check(a, n, resolution=P)
            if not e.ok:
                bad.append((name, n, e.first_mismatch))
            emit(out, em_payload(a, n, e, P, config("em", name, n, Q, 40)), f"em_{slug(name)}_n{n}_c0")
    return not bad, f"{cells - len(bad)}/{cells} series identities hold" + (f"; failures {bad}" if bad else "")


def criterion_8(out: Path) -> tuple[bool, str]:
    bad = [name for name in CAT if not transgression_check(algebra(name)).ok]
    return not bad, f"{len(CAT) - len(bad)}/{len(CAT)} transgression checks" + (f"; failures {bad}" if bad else "")


def criterion_9(out: Path) -> tuple[bool, str]:
    for name in CAT:
        c = cached_level(name, Q, 2)
        emit(out, level_payload(c, config("level", name, 2, Q, c.upto)), f"level_{slug(name)}_n2_c0")
    intervals = []
    for path in sorted(out.glob("level_*.json")):
        r = json.loads(path.read_text())["result"]
        intervals.append((path.name, r["lower"], r["upper"]))
    inverted = [x for x in intervals if x[1] > x[2]]
    bad, total = [], 0
    for name in CAT:
        rep = composite_ghost_trials(algebra(name), 2, trials=50, seed=0)
        total += rep.null_count
        if not (rep.ok and len(rep.trials) == 50 and rep.null_count == 50):
            bad.append((name, rep.failure))
    ok = not inverted and not bad and intervals
    return bool(ok), (f"lower <= upper on {len(intervals) - len(inverted)}/{len(intervals)} level certificates; "
                      f"{total}/{50 * len(CAT)} composites null-homotopic"
                      + (f"; failures {inverted + bad}" if inverted or bad else ""))


def _square_zero(c: ChainComplex) -> bool:
    R = c.ring
    return all(
        c.diff(h - 1).compose(R, c.diff(h)).is_zero()
        for h in c.hom_degrees() if h - 1 in c.diffs and h in c.diffs
    )


def criterion_10(out: Path) -> tuple[bool, str]:
    rng = random.Random(20261015)
    fails: dict[str, int] = {"d^2": 0, "rank-nullity": 0, "euler": 0, "kunneth": 0}
    for _ in range(INSTANCES):
        ring = random_ring(rng)
        if not _square_zero(random_complex(rng, ring)):
            fails["d^2"] += 1
    for _ in range(INSTANCES):
        m = random_matrix(rng)
        if rank(m) + len(kernel_basis(m)) != m.cols or rank(m) != rank(m.transpose()):
            fails["rank-nullity"] += 1
    for _ in range(INSTANCES):
        ring = random_ring(rng)
        c = random_complex(rng, ring)
        h = homology(c, ring.truncation)
        for i in range(ring.truncation + 1):
            hs = sum((-1) ** hh * d for (hh, ii), d in h.dims.items() if ii == i)
            if hs != euler_characteristic(c, i):
                fails["euler"] += 1
                break
    for _ in range(INSTANCES):
        f = rng.choice([Q, FieldSpec.prime(2), ODD_PRIME])
        r1, r2 = random_ring(rng, f, "x", 12), random_ring(rng, f, "w", 12)
        c1, c2 = random_complex(rng, r1), random_complex(rng, r2)
        ring = tensor_algebra(r1, r2)
        t = tensor_complexes(ring, [(c1, range(r1.ngens)), (c2, range(r1.ngens, ring.ngens))])
        direct = ChainComplex(ring, t.gens, t.diffs)
        D = ring.truncation
        stop = D + 1
        ps_ok = ring.poincare_series(stop) == r1.poincare_series(stop).times(r2.poincare_series(stop), stop)
        if not ps_ok or nonzero_upto(direct, D) != convolve(nonzero_upto(c1, D), nonzero_upto(c2, D), D):
            fails["kunneth"] += 1
    files = sorted(out.glob("*.json"))
    rejected = []
    for path in files:
        try:
            verify_file(path)
        except AssertionError as exc:
            rejected.append((path.name, str(exc)))
    ok = not any(fails.values()) and files and not rejected
    return bool(ok), (f"{INSTANCES} instances each, failures {fails}; "
                      f"--verify {len(files) - len(rejected)}/{len(files)} certificates"
                      + (f"; rejected {rejected}" if rejected else ""))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("certificates")


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, out_dir):
    if number == 10 and not any(out_dir.glob("*.json")):
        criterion_7(out_dir)  # make sure there is something to re-verify
    ok, detail = CRITERIA[number - 1](out_dir)
    report(number, ok, detail)
    assert ok, detail


def main() -> int:
    status = 0
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        for number, fn in enumerate(CRITERIA, 1):
            t = time.time()
            ok, detail = fn(out)
            report(number, ok, f"{detail} [{time.time() - t:.1f}s]")
            status |= not ok
    return status


if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).parent))
    sys.exit(main())
