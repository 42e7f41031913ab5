"""On-disk cache of class sets and splittings, one JSON file per prime.

Writes go through a temporary file and os.replace, so a reader never sees
a half-written cache.  A SHA-256 of the canonical payload detects damage.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .classes import AdelicPoint, ClassSet, verify_class_set
from .lattice import lattice_from_coordinates
from .quaternion import AlgebraParams, OrderBasis, Quaternion, build_algebra, maximal_order_basis
from .splitting import SplittingData, relations_hold, verify_splitting

logger = logging.getLogger(__name__)

CACHE_VERSION = 1
ENV_VAR = "QUATHECKE_CACHE_DIR"


class CacheError(RuntimeError):
    pass


def default_cache_dir() -> Optional[Path]:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else None


def cache_path(cache_dir: Path, p: int) -> Path:
    return Path(cache_dir) / f"classset_p{p}.json"


# ---------------------------------------------------------------- encoding


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def encode_quaternion(q: Quaternion) -> list[str]:
    return [_frac(c) for c in q.c]


def decode_quaternion(alg: AlgebraParams, data) -> Quaternion:
    if len(data) != 4:
        raise CacheError("quaternion needs four coefficients")
    return alg.element(*(Fraction(x) for x in data))


def encode_classset(cs: ClassSet) -> dict:
    return {
        "p": cs.params.p,
        "eps": cs.params.eps,
        "r": cs.params.r,
        "a": cs.params.a,
        "order_basis": [encode_quaternion(s) for s in cs.order.s],
        "reps": [{"hnf": [list(r) for r in I.hnf], "denominator": I.denominator} for I in cs.reps],
        "bases": [[encode_quaternion(b) for b in basis] for basis in cs.bases],
        "unit_orders": list(cs.unit_orders),
        "local_gens": [{str(l): encode_quaternion(w) for l, w in sorted(pt.gens.items())} for pt in cs.local_gens],
    }


def decode_classset(data: dict) -> ClassSet:
    p = int(data["p"])
    alg = build_algebra(p)
    if alg.eps != data["eps"] or alg.r != data.get("r") or alg.a != data["a"]:
        raise CacheError("cached algebra parameters differ from the current choice")
    order = OrderBasis(alg, tuple(decode_quaternion(alg, s) for s in data["order_basis"]))
    if order.s != maximal_order_basis(alg).s:
        raise CacheError("cached maximal order differs from the current choice")
    reps = tuple(lattice_from_coordinates(r["hnf"], int(r["denominator"]), order) for r in data["reps"])
    bases = tuple(tuple(decode_quaternion(alg, b) for b in basis) for basis in data["bases"])
    gens = tuple(AdelicPoint({int(l): decode_quaternion(alg, w) for l, w in g.items()}) for g in data["local_gens"])
    return ClassSet(alg, order, reps, bases, tuple(int(u) for u in data["unit_orders"]), gens)


def encode_splitting(sp: SplittingData) -> dict:
    return {
        "ell": sp.ell,
        "n": sp.n,
        "m": sp.m,
        "prec": sp.prec,
        "A": list(sp.A),
        "B": list(sp.B),
        "S": [list(x) for x in sp.S],
        "W": [list(x) for x in sp.W],
    }


def decode_splitting(data: dict) -> SplittingData:
    return SplittingData(
        int(data["ell"]),
        int(data["n"]),
        int(data["m"]),
        int(data["prec"]),
        tuple(data["A"]),
        tuple(data["B"]),
        tuple(tuple(x) for x in data["S"]),
        tuple(tuple(x) for x in data["W"]),
    )


def splitting_key(ell: int, n: int, prec: int) -> str:
    return f"{ell}:{n}:{prec}"


# ---------------------------------------------------------------- file I/O


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_cache(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"cache_version": CACHE_VERSION, "sha256": _digest(payload), "payload": payload}
    fd, tmp = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_cache(path: Path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("cache_version") != CACHE_VERSION:
        raise CacheError("unsupported cache version")
    payload = doc.get("payload")
    if not isinstance(payload, dict) or _digest(payload) != doc.get("sha256"):
        raise CacheError("cache checksum mismatch")
    return payload


# ---------------------------------------------------------------- store


class ClassSetCache:
    """Load-or-compute access to the class set and splittings for one prime."""

    def __init__(self, cache_dir: Optional[Path], p: int):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.p = p
        self.hit = False
        self._payload: Optional[dict] = None

    @property
    def path(self) -> Optional[Path]:
        return cache_path(self.cache_dir, self.p) if self.cache_dir else None

    def load(self) -> Optional[ClassSet]:
        if self.path is None or not self.path.exists():
            return None
        payload = read_cache(self.path)
        cs = decode_classset(payload["classset"])
        self._payload = payload
        self.hit = True
        return cs

    def store(self, cs: ClassSet) -> None:
        self._payload = {"classset": encode_classset(cs), "splittings": {}}
        self._flush()

    def _flush(self) -> None:
        if self.path is not None and self._payload is not None:
            write_cache(self.path, self._payload)

    def splitting(self, ell: int, n: int, prec: int) -> Optional[SplittingData]:
        if self._payload is None:
            return None
        data = self._payload.get("splittings", {}).get(splitting_key(ell, n, prec))
        return decode_splitting(data) if data else None

    def add_splitting(self, sp: SplittingData) -> None:
        if self._payload is None:
            return
        self._payload.setdefault("splittings", {})[splitting_key(sp.ell, sp.n, sp.prec)] = encode_splitting(sp)
        self._flush()


def verify_cache(path: Path) -> list[str]:
    """Recheck invariants of a cache file without repeating any searches."""
    payload = read_cache(path)
    cs = decode_classset(payload["classset"])
    problems = verify_class_set(cs)
    for key, data in payload.get("splittings", {}).items():
        sp = decode_splitting(data)
        if key != splitting_key(sp.ell, sp.n, sp.prec):
            problems.append(f"splitting key {key} does not match its contents")
        if not relations_hold(sp.A, sp.B, cs.params.eps, cs.params.p, sp.modulus):
            problems.append(f"splitting {key}: relations fail")
        if len(sp.W) != cs.h:
            problems.append(f"splitting {key}: wrong number of class images")
            continue
        problems.extend(f"splitting {key}: {msg}" for msg in verify_splitting(sp, cs.order, cs))
    return problems
