"""Self-contained JSON certificates and their independent verification.

A certificate records the configuration (group, n, characteristic, D,
seed), the claimed result and the evidence: every complex and chain map in
sparse triplet form, plus obstruction witnesses.  :func:`verify_certificate`
rebuilds everything from those matrices: decoding re-validates ``d^2 = 0``
and every chain-map identity, tensor factorizations are re-derived rather
than trusted, and each claimed number is recomputed.

Payloads carry no timestamps, so reruns with the same configuration give
byte-identical files.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

from .catalog import loop_module
from .complexes import (
    ChainComplex,
    ChainMap,
    ComplexError,
    PolyMatrix,
    _same_complex,
    check_homotopy,
    check_obstruction,
    compose,
    is_ghost,
    is_null_homotopic,
    koszul_refactor,
    ring_complex,
)
from .graded import FreeGCAlgebra
from .invariants import (
    EMCheck,
    ExtResult,
    GhostChainCertificate,
    LevelCertificate,
    LoopGhostCertificate,
    TorResult,
    em_collapse_check,
    ext_into_ring,
    gorenstein_ext,
    lie_dim,
    tor,
)
from .resolutions import FreeResolution, diagonal_module, is_free, verify_resolution

FORMAT = 1


class VerificationError(AssertionError):
    """A certificate failed re-verification; the message names the first failing assertion."""


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise VerificationError(what)


# ---------------------------------------------------------------------------
# encoding helpers


def _complex(c: ChainComplex) -> dict:
    d = c.encode()
    d.pop("factors", None)  # re-derived on load, never trusted
    return d


def _dims(d: Mapping[tuple[int, int], int]) -> list[list[int]]:
    return [[h, i, v] for (h, i), v in sorted(d.items()) if v]


def _series(d: Mapping[int, int]) -> dict[str, int]:
    return {str(k): v for k, v in sorted(d.items()) if v}


def _scalar(f, x) -> Any:
    return f.encode(x) if x is not None else None


def _witness(f, w: Mapping[int, Any] | None) -> list | None:
    return None if w is None else [[k, f.encode(v)] for k, v in sorted(w.items())]


def _load_complex(data: Mapping, koszul: bool = True) -> ChainComplex:
    c = ChainComplex.decode(data)
    return koszul_refactor(c) if koszul else c


def _diagonal(a: FreeGCAlgebra, n: int, data: Mapping) -> ChainComplex:
    """Decode a claimed resolution of A over A^{(x)n} and verify it."""
    P = _load_complex(data)
    _require(P.ring.degrees == tuple(d for _ in range(n) for d in a.degrees), "resolution ring is not A^(x)n")
    res = FreeResolution(P, diagonal_module(a, n), {0: {0: a.field.one}}, P.is_minimal(), P.length)
    try:
        checks = verify_resolution(res)
    except Exception as exc:  # ResolutionError or a malformed module
        raise VerificationError(f"resolution: {exc}") from None
    _require(checks["minimal"], "resolution is not minimal")
    return P


def _base(kind: str, a: FreeGCAlgebra, config: Mapping) -> dict:
    return {"format": FORMAT, "kind": kind, "config": dict(config), "algebra": a.to_dict()}


# ---------------------------------------------------------------------------
# ghost chains


def chain_evidence(cert: GhostChainCertificate) -> dict:
    f = cert.algebra.field
    return {
        "groups": [list(g) for g in cert.groups],
        "complexes": [_complex(c) for c in cert.complexes],
        "links": [m.encode() for m in cert.links],
        "obstruction_degree": cert.obstruction_degree,
        "witness": _witness(f, cert.witness),
        "shriek_coefficient": _scalar(f, cert.shriek_coefficient),
    }


def _verify_chain(ev: Mapping, P: ChainComplex, D: int) -> int:
    """Re-check a ghost chain starting at ``P``; returns its length."""
    complexes = [_load_complex(c) for c in ev["complexes"]]
    _require(len(complexes) == len(ev["links"]) + 1, "chain has mismatched complexes and links")
    _require(_same_complex(complexes[0], P), "chain does not start at the resolution")
    complexes[0] = P
    comp = None
    for n, data in enumerate(ev["links"]):
        try:
            link = ChainMap.decode(complexes[n], complexes[n + 1], data)
        except ComplexError as exc:
            raise VerificationError(f"link {n}: {exc}") from None
        _require(bool(is_ghost(link, D)), f"link {n} is not a ghost")
        comp = link if comp is None else compose(comp, link)
    _require(comp is not None and not comp.is_zero(), "composite is zero")
    f = P.field
    deg = ev["obstruction_degree"]
    _require(deg is not None and ev["witness"] is not None, "missing obstruction witness")
    witness = {int(k): f.coerce(v) for k, v in ev["witness"]}
    _require(check_obstruction(comp, deg, witness), "obstruction witness does not certify non-null-homotopy")
    return len(ev["links"])


def ghost_chain_payload(cert: GhostChainCertificate, config: Mapping) -> dict:
    out = _base("ghost-chain", cert.algebra, config)
    out["result"] = {
        "n": cert.n,
        "ok": cert.ok,
        "failure": cert.failure,
        "length": cert.length,
        "composite_degree": cert.composite_degree,
        "obstruction_degree": cert.obstruction_degree,
        "yoneda_coefficients": [_scalar(cert.algebra.field, c) for c in cert.yoneda_coefficients],
    }
    out["evidence"] = chain_evidence(cert) if cert.ok else None
    return out


def _verify_ghost_chain(doc: Mapping, a: FreeGCAlgebra) -> None:
    r = doc["result"]
    _require(r["ok"], f"certificate records a failure: {r['failure']}")
    n = r["n"]
    ev = doc["evidence"]
    P = _diagonal(a, n, ev["complexes"][0])
    length = _verify_chain(ev, P, a.truncation)
    _require(length == r["length"], "chain length mismatch")
    _require(r["composite_degree"] == -(n - 1) * lie_dim(a), "composite degree is not -(n-1) dim G")


# ---------------------------------------------------------------------------
# level


def level_payload(cert: LevelCertificate, config: Mapping) -> dict:
    out = _base("level", cert.algebra, config)
    out["result"] = {
        "n": cert.n,
        "lower": cert.lower,
        "upper": cert.upper,
        "exact": cert.exact,
        "pd": cert.pd,
        "formula_value": cert.formula_value,
        "level": cert.value,
    }
    ev = cert.lower_evidence if cert.lower_evidence is not None and cert.lower_evidence.ok else cert.raw_chain
    out["evidence"] = {
        "resolution": _complex(cert.upper_evidence.complex),
        "chain": chain_evidence(ev) if ev is not None and ev.ok else None,
    }
    return out


def _verify_level(doc: Mapping, a: FreeGCAlgebra) -> None:
    r, ev = doc["result"], doc["evidence"]
    n = r["n"]
    P = _diagonal(a, n, ev["resolution"])
    _require(P.length == r["pd"], "pd differs from the resolution length")
    _require(r["upper"] == r["pd"] + 1, "upper bound is not pd + 1")
    lower = 1
    if ev["chain"] is not None:
        lower = _verify_chain(ev["chain"], P, a.truncation) + 1
    _require(r["lower"] == lower, f"lower bound {r['lower']} is not certified (chain gives {lower})")
    _require(r["lower"] <= r["upper"], "lower bound exceeds upper bound")
    _require(r["exact"] == (r["lower"] == r["upper"]), "exact flag inconsistent with the bounds")
    _require(r["formula_value"] == (n - 1) * a.ngens + 1, "formula value mismatch")


# ---------------------------------------------------------------------------
# tor / ext / em


def tor_payload(a: FreeGCAlgebra, n: int, res: TorResult, P: ChainComplex, config: Mapping) -> dict:
    out = _base("tor", a, config)
    out["result"] = {
        "n": n,
        "dims": _dims(res.dims.dims),
        "series": _series(res.series.as_dict()),
        "total_dim": res.total_dim,
        "zero_differential": res.zero_differential,
    }
    out["evidence"] = {"resolution": _complex(P)}
    return out


def _verify_tor(doc: Mapping, a: FreeGCAlgebra) -> None:
    r = doc["result"]
    P = _diagonal(a, r["n"], doc["evidence"]["resolution"])
    t = tor(a, r["n"], resolution=P)
    _require(_dims(t.dims.dims) == r["dims"], "Tor dims differ on recomputation")
    _require(_series(t.series.as_dict()) == r["series"], "Tor series differs on recomputation")
    _require(t.total_dim == r["total_dim"], "Tor total dimension differs")


def ext_payload(a: FreeGCAlgebra, res: ExtResult, P: ChainComplex, config: Mapping) -> dict:
    out = _base("ext", a, config)
    out["result"] = {
        "n": res.n,
        "total": _series(res.total),
        "generator_total": _series(res.generator_total),
        "gorenstein_total": _series(res.gorenstein_total),
        "one_dimensional": res.one_dimensional(),
        "generator_degree": res.generator_degree,
        "matches_shifted_algebra": res.matches_shifted_algebra,
    }
    out["evidence"] = {"resolution": _complex(P), "generator": res.generator.map.encode()}
    return out


def _verify_ext(doc: Mapping, a: FreeGCAlgebra) -> None:
    r, ev = doc["result"], doc["evidence"]
    P = _diagonal(a, r["n"], ev["resolution"])
    e = ext_into_ring(a, r["n"], resolution=P)
    _require(_series(e.total) == r["total"], "Ext dims differ on recomputation")
    _require(_series(e.generator_total) == r["generator_total"], "Ext generator dims differ")
    _require(_series(gorenstein_ext(a)) == r["gorenstein_total"], "Gorenstein Ext differs")
    try:
        g = ChainMap.decode(P, ring_complex(P.ring), ev["generator"])
    except ComplexError as exc:
        raise VerificationError(f"generator: {exc}") from None
    _require(g.total_degree == r["generator_degree"], "generator degree mismatch")
    if r["n"] >= 2:
        _require(not is_null_homotopic(g, want_witness=False).null, "generator is null-homotopic")


def em_payload(a: FreeGCAlgebra, n: int, res: EMCheck, P: ChainComplex, config: Mapping) -> dict:
    out = _base("em", a, config)
    out["result"] = {
        "n": n,
        "ok": res.ok,
        "e2": list(res.e2.dims),
        "balanced": list(res.balanced.dims),
        "direct": list(res.direct.dims),
        "zero_differential": res.zero_differential,
        "first_mismatch": res.first_mismatch,
    }
    out["evidence"] = {"resolution": _complex(P)}
    return out


def _verify_em(doc: Mapping, a: FreeGCAlgebra) -> None:
    r = doc["result"]
    P = _diagonal(a, r["n"], doc["evidence"]["resolution"])
    e = em_collapse_check(a, r["n"], resolution=P)
    _require(list(e.e2.dims) == r["e2"], "E2 series differs on recomputation")
    _require(list(e.balanced.dims) == r["balanced"] and list(e.direct.dims) == r["direct"], "reference series differ")
    _require(e.ok == r["ok"], "collapse verdict differs")
    _require(r["ok"], f"E2 count fails at degree {r['first_mismatch']}")


# ---------------------------------------------------------------------------
# loop


def loop_payload(cert: LoopGhostCertificate, config: Mapping) -> dict:
    a = cert.algebra
    f = a.field
    out = _base("loop", a, config)
    out["result"] = {
        "free": cert.freeness.free,
        "ok": cert.ok,
        "failure": cert.failure,
        "trials": len(cert.trials),
        "null_homotopic": cert.null_count,
        "seed": cert.seed,
    }
    pool = cert.pool
    trials = []
    for t in cert.trials:
        idx = next(n for n, T in enumerate(pool) if T is t.map.target)
        trials.append({"target": idx, "ghost": t.map.encode(), "homotopy": t.homotopy.encode() if t.homotopy else None})
    out["evidence"] = {
        "basis": [[d, [[k, f.encode(v)] for k, v in sorted(vec.items())]] for d, vec in cert.freeness.basis],
        "source": _complex(cert.source) if cert.source is not None else None,
        "targets": [_complex(T) for T in pool],
        "trials": trials,
    }
    return out


def _verify_loop(doc: Mapping, a: FreeGCAlgebra) -> None:
    r, ev = doc["result"], doc["evidence"]
    _require(r["ok"], f"certificate records a failure: {r['failure']}")
    m = loop_module(a)
    fr = is_free(m)
    _require(fr.free, "loop module is not free")
    _require(len(ev["basis"]) == len(fr.basis), "free basis has the wrong size")
    if a.ngens == 0:
        return
    P = _load_complex(ev["source"], koszul=False)
    _require(not P.diffs and set(P.gens) == {0}, "source is not a free module in degree 0")
    f = a.field
    aug = {g: {int(k): f.coerce(v) for k, v in vec} for g, (_, vec) in enumerate(ev["basis"])}
    _require(tuple(P.gens[0]) == tuple(d for d, _ in ev["basis"]), "source generators differ from the free basis")
    res = FreeResolution(P, m, aug, True, 0)
    try:
        verify_resolution(res)
    except Exception as exc:
        raise VerificationError(f"free basis: {exc}") from None
    targets = [_load_complex(T, koszul=False) for T in ev["targets"]]
    _require(len(ev["trials"]) == r["trials"], "trial count mismatch")
    for n, t in enumerate(ev["trials"]):
        T = targets[t["target"]]
        try:
            g = ChainMap.decode(P, T, t["ghost"])
        except ComplexError as exc:
            raise VerificationError(f"trial {n}: {exc}") from None
        _require(bool(is_ghost(g, a.truncation)), f"trial {n}: map is not a ghost")
        hd = t["homotopy"]
        _require(hd is not None, f"trial {n}: no homotopy recorded")
        maps = {int(h): PolyMatrix.decode(P.ring, mm) for h, mm in hd["maps"].items()}
        H = ChainMap(P, T, hd["hshift"], hd["ishift"], maps, check=False)
        _require(check_homotopy(g, H), f"trial {n}: homotopy does not satisfy f = dH + Hd")
    _require(r["null_homotopic"] == r["trials"], "not every trial is null-homotopic")


# ---------------------------------------------------------------------------
# file io


_VERIFIERS = {
    "level": _verify_level,
    "ghost-chain": _verify_ghost_chain,
    "tor": _verify_tor,
    "ext": _verify_ext,
    "em": _verify_em,
    "loop": _verify_loop,
}


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_certificate(doc: Mapping, path: str | Path) -> Path:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(dumps(doc))
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def verify_certificate(doc: Mapping) -> str:
    """Re-check a certificate; returns its kind or raises :class:`VerificationError`."""
    if doc.get("format") != FORMAT:
        raise VerificationError(f"unsupported certificate format {doc.get('format')!r}")
    kind = doc.get("kind")
    fn = _VERIFIERS.get(kind)
    if fn is None:
        raise VerificationError(f"unknown certificate kind {kind!r}")
    try:
        a = FreeGCAlgebra.from_dict(doc["algebra"])
        fn(doc, a)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, VerificationError):
            raise
        raise VerificationError(f"malformed certificate: {exc!r}") from None
    return kind


def verify_file(path: str | Path) -> str:
    with open(path) as fh:
        doc = json.load(fh)
    return verify_certificate(doc)
