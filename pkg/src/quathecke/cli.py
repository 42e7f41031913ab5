"""Command-line driver: ``quathecke classset``, ``quathecke hecke``, ``quathecke cache``.

Exit codes: 0 success, 2 usage error, 1 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Iterable, Optional, TextIO

from .arith import isprime
from .cache import CacheError, ClassSetCache, default_cache_dir, verify_cache
from .classes import ClassSet, ClassSetError, eichler_mass, left_ideal_classes, verify_class_set
from .fields import FieldError, Fp2, Fp2Elem, PrimeField
from .hecke import (
    WITNESS_MODES,
    GeneralHecke,
    HeckeError,
    build_context,
    hecke_matrix_general,
    level1_counts,
    weight_k_matrix,
)
from .linalg import LinalgError, simultaneous_eigensystems
from .quaternion import AlgebraError, build_algebra, maximal_order_basis
from .splitting import SplittingError

SCHEMA_VERSION = 1
DENSE_JSON_LIMIT = 1500
PRETTY_LIMIT = 24

logger = logging.getLogger("quathecke")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    p: int
    N: int = 1
    weight: Optional[int] = None
    ells: list[int] = field(default_factory=lambda: [2])
    fmt: str = "json"
    cache_dir: Optional[Path] = None
    brandt: bool = False
    witnesses: bool = False
    eigen: bool = False
    orbits: bool = False
    witness_mode: str = "average"
    timing: bool = False

    def validate(self) -> None:
        if not isprime(self.p):
            raise UsageError(f"p={self.p} is not prime")
        if self.N < 1:
            raise UsageError("N must be a positive integer")
        if gcd(self.p, self.N) != 1:
            raise UsageError(f"N={self.N} is not coprime to p={self.p}")
        if not self.ells:
            raise UsageError("at least one ell0 is required")
        for ell in self.ells:
            if not isprime(ell):
                raise UsageError(f"ell0={ell} is not prime")
            if gcd(ell, self.p * self.N) != 1:
                raise UsageError(f"ell0={ell} is not coprime to pN={self.p * self.N}")
        if self.p == 2 and (self.N > 1 or self.weight is not None or self.orbits):
            raise UsageError("p=2 supports only the level-1 weight-0 matrix")
        if self.weight is not None and not 0 <= self.weight < self.p * self.p - 1:
            raise UsageError(f"weight must satisfy 0 <= k < p^2-1 = {self.p * self.p - 1}")
        if self.weight is not None and self.orbits:
            raise UsageError("--weight and --orbits are mutually exclusive")
        if self.eigen and self.N > 1 and self.weight is None and not self.orbits:
            raise UsageError("--eigen at level N>1 needs --weight or --orbits")


# ---------------------------------------------------------------- helpers


class Timer:
    def __init__(self, enabled: bool, stream: TextIO):
        self.enabled = enabled
        self.stream = stream

    def report(self, label: str, start: float, note: str = "") -> None:
        if self.enabled:
            extra = f" ({note})" if note else ""
            print(f"timing: {label} {time.perf_counter() - start:.3f}s{extra}", file=self.stream)


def parse_ells(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad prime list {text!r}") from exc
    return sorted(set(vals))


def fmt_elem(x) -> str:
    if isinstance(x, Fp2Elem):
        return str(x)
    return f"[{int(x)},0]"


def fmt_fraction(x) -> str:
    return str(x)


def quaternion_json(q) -> list[str]:
    return [fmt_fraction(c) for c in q.c]


def load_classset(p: int, cache_dir: Optional[Path], timer: Timer) -> tuple[ClassSet, ClassSetCache]:
    store = ClassSetCache(cache_dir, p)
    start = time.perf_counter()
    cs = store.load()
    if cs is not None:
        timer.report("classset", start, "cache hit")
        return cs, store
    cs = left_ideal_classes(maximal_order_basis(build_algebra(p)))
    store.store(cs)
    timer.report("classset", start, "computed" + (", cached" if store.path else ""))
    return cs, store


# ---------------------------------------------------------------- classset


def classset_report(cs: ClassSet) -> dict:
    mass = cs.mass()
    expected = eichler_mass(cs.params.p)
    return {
        "schema_version": SCHEMA_VERSION,
        "p": cs.params.p,
        "algebra": {"eps": cs.params.eps, "r": cs.params.r, "a": cs.params.a},
        "order_basis": [quaternion_json(s) for s in cs.order.s],
        "h": cs.h,
        "unit_orders": list(cs.unit_orders),
        "mass": str(mass),
        "mass_expected": str(expected),
        "mass_ok": mass == expected,
        "bases": [[quaternion_json(b) for b in basis] for basis in cs.bases],
        "local_generators": [
            {str(ell): quaternion_json(w) for ell, w in sorted(pt.gens.items())} for pt in cs.local_gens
        ],
    }


def cmd_classset(args, out: TextIO, err: TextIO) -> int:
    if not isprime(args.p):
        raise UsageError(f"p={args.p} is not prime")
    timer = Timer(args.timing, err)
    cs, _ = load_classset(args.p, resolve_cache_dir(args), timer)
    report = classset_report(cs)
    problems = verify_class_set(cs)
    if args.format == "json":
        out.write(json.dumps(report, indent=1) + "\n")
    else:
        out.write(f"p = {report['p']}\nh = {report['h']}\n")
        out.write(f"unit orders = {report['unit_orders']}\n")
        out.write(f"mass = {report['mass']} (expected {report['mass_expected']})\n")
        for idx, (basis, gens) in enumerate(zip(report["bases"], report["local_generators"])):
            out.write(f"class {idx}: basis {basis}\n  local generators {gens}\n")
    if problems or not report["mass_ok"]:
        for msg in problems:
            print(f"error: {msg}", file=err)
        return 1
    return 0


# ---------------------------------------------------------------- hecke


@dataclass
class Operator:
    ell0: int
    kind: str
    basis: list
    dense: Optional[list[list]] = None
    general: Optional[GeneralHecke] = None
    integer: Optional[list[list[int]]] = None
    witnesses: Optional[list[dict]] = None
    leftover: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)


def _gamma_json(g) -> list[int]:
    return list(g)


def _witness_rows(table: dict) -> list[dict]:
    rows = []
    for (i, j, k), wits in sorted(table.items()):
        rows.append(
            {
                "i": i,
                "j": j,
                "k": k,
                "alpha": [quaternion_json(w.alpha) for w in wits],
            }
        )
    return rows


def build_operator(cfg: RunConfig, cs: ClassSet, store: ClassSetCache, ell0: int, timer: Timer) -> Operator:
    start = time.perf_counter()
    ctx = build_context(cs, ell0, cfg.N, store=store)
    timer.report(f"splittings ell0={ell0}", start)
    start = time.perf_counter()
    table = None
    if cfg.N == 1 and cfg.weight is None and not cfg.orbits:
        counts, table = level1_counts(ctx)
        inv = pow(ell0, -1, cfg.p)
        dense = [[c * inv % cfg.p for c in row] for row in counts]
        op = Operator(ell0, "level1", [{"class": i} for i in range(cs.h)], dense=dense, integer=counts)
    else:
        G = hecke_matrix_general(cs.params.p, cfg.N, ell0, ctx=ctx, witness_mode=cfg.witness_mode)
        if cfg.witnesses:
            table = level1_counts(ctx)[1]
        if cfg.weight is not None:
            W = weight_k_matrix(G, cfg.weight)
            basis = [{"class": j, "gamma": _gamma_json(g)} for j, g in W.index]
            op = Operator(ell0, "weight", basis, dense=W.rows())
        elif cfg.orbits:
            _, reps = G.orbits
            idx = G.index_list()
            basis = [{"class": i, "mu": str(idx[x][1]), "gamma": _gamma_json(idx[x][2])} for i, x in reps]
            counts = G.orbit_counts()
            op = Operator(ell0, "orbits", basis, dense=G.orbit_matrix(), integer=counts)
        else:
            basis = [{"class": j, "mu": str(mu), "gamma": _gamma_json(g)} for j, mu, g in G.index_list()]
            op = Operator(ell0, "general", basis, general=G)
        op.leftover["witness_mode"] = G.mode
    if cfg.witnesses and table is not None:
        op.witnesses = _witness_rows(table)
    timer.report(f"operator ell0={ell0}", start)
    return op


def eigen_field(cfg: RunConfig, cs: ClassSet):
    if cfg.p == 2:
        return PrimeField(2)
    return Fp2(cfg.p, cs.params.eps)


def eigensystems(cfg: RunConfig, cs: ClassSet, ops: list[Operator]) -> tuple[list[dict], int]:
    F = eigen_field(cfg, cs)
    systems, leftover = simultaneous_eigensystems(F, [op.dense for op in ops])
    rows = []
    for sysm in systems:
        rows.append(
            {
                "values": {str(op.ell0): fmt_elem(v) for op, v in zip(ops, sysm.values)},
                "multiplicity": sysm.multiplicity,
                "semisimple": sysm.semisimple,
            }
        )
    return rows, leftover


def _entry(x):
    return fmt_elem(x) if isinstance(x, Fp2Elem) else int(x)


def operator_json(cfg: RunConfig, op: Operator) -> dict:
    doc: dict = {"ell0": op.ell0, "kind": op.kind, "dim": op.dim, "basis": op.basis}
    if op.dense is not None:
        doc["matrix_mod_p"] = [[_entry(x) for x in row] for row in op.dense]
    else:
        G = op.general
        if G.dim <= DENSE_JSON_LIMIT:
            doc["matrix_mod_p"] = G.to_dense(limit=DENSE_JSON_LIMIT)
        else:
            doc["matrix_mod_p_sparse"] = [[r, c, v] for c in range(G.dim) for r, v in G.column_entries(c)]
    if cfg.brandt and op.integer is not None:
        doc["brandt_integer"] = op.integer
    if op.witnesses is not None:
        doc["witnesses"] = op.witnesses
    doc.update(op.leftover)
    return doc


def csv_rows(op: Operator) -> Iterable[list]:
    """Dense matrices row-major with zeros; full general matrices by column, nonzeros only."""
    if op.dense is not None:
        for r, row in enumerate(op.dense):
            for c, x in enumerate(row):
                yield [op.ell0, r, c, _entry(x)]
    else:
        G = op.general
        for c in range(G.dim):
            for r, v in G.column_entries(c):
                yield [op.ell0, r, c, v]


def write_pretty(cfg: RunConfig, ops: list[Operator], eig: Optional[tuple], out: TextIO) -> None:
    out.write(f"p = {cfg.p}, N = {cfg.N}, weight = {cfg.weight if cfg.weight is not None else 0}\n")
    for op in ops:
        out.write(f"\nT_{op.ell0} ({op.kind}, dim {op.dim}) over F_{cfg.p}{'^2' if op.kind == 'weight' else ''}\n")
        if op.dense is None or op.dim > PRETTY_LIMIT:
            out.write("  (too large to print; use --format csv or json to see entries)\n")
            continue
        for row in op.dense:
            out.write("  " + " ".join(str(_entry(x)).rjust(6 if op.kind == "weight" else 3) for x in row) + "\n")
        if cfg.brandt and op.integer is not None:
            out.write(f"  integer companion {op.ell0}*T:\n")
            for row in op.integer:
                out.write("  " + " ".join(str(x).rjust(3) for x in row) + "\n")
        if op.witnesses is not None:
            for w in op.witnesses:
                out.write(f"  witness i={w['i']} j={w['j']} k={w['k']}: {w['alpha'][0]}\n")
    if eig is not None:
        rows, leftover = eig
        out.write("\neigensystems:\n")
        for r in rows:
            vals = ", ".join(f"a_{k}={v}" for k, v in r["values"].items())
            out.write(f"  {vals}  multiplicity {r['multiplicity']}{'' if r['semisimple'] else ' (not semisimple)'}\n")
        if leftover:
            out.write(f"  dimension {leftover} has eigenvalues outside the coefficient field\n")


def run_hecke(cfg: RunConfig, out: TextIO, err: TextIO) -> int:
    cfg.validate()
    timer = Timer(cfg.timing, err)
    cs, store = load_classset(cfg.p, cfg.cache_dir, timer)
    ops = [build_operator(cfg, cs, store, ell0, timer) for ell0 in cfg.ells]
    eig = None
    if cfg.eigen:
        start = time.perf_counter()
        eig = eigensystems(cfg, cs, ops)
        timer.report("eigensystems", start)
    if cfg.fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "p": cfg.p,
            "N": cfg.N,
            "weight": cfg.weight if cfg.weight is not None else (0 if cfg.N == 1 and not cfg.orbits else None),
            "operators": [operator_json(cfg, op) for op in ops],
        }
        if eig is not None:
            doc["eigensystems"] = eig[0]
            doc["eigen_leftover_dim"] = eig[1]
        out.write(json.dumps(doc, separators=(",", ":")) + "\n")
    elif cfg.fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["ell0", "row", "col", "value"])
        for op in ops:
            for row in csv_rows(op):
                writer.writerow(row)
        if eig is not None:
            writer.writerow(["eigensystem"] + [f"a_{op.ell0}" for op in ops] + ["multiplicity"])
            for n, r in enumerate(eig[0]):
                writer.writerow([n] + list(r["values"].values()) + [r["multiplicity"]])
    else:
        write_pretty(cfg, ops, eig, out)
    return 0


def cmd_hecke(args, out: TextIO, err: TextIO) -> int:
    cfg = RunConfig(
        p=args.p,
        N=args.N,
        weight=args.weight,
        ells=args.ell,
        fmt=args.format,
        cache_dir=resolve_cache_dir(args),
        brandt=args.brandt,
        witnesses=args.witnesses,
        eigen=args.eigen,
        orbits=args.orbits,
        witness_mode=args.witness_mode,
        timing=args.timing,
    )
    return run_hecke(cfg, out, err)


# ---------------------------------------------------------------- cache


def cmd_cache(args, out: TextIO, err: TextIO) -> int:
    if not isprime(args.p):
        raise UsageError(f"p={args.p} is not prime")
    cache_dir = resolve_cache_dir(args)
    if cache_dir is None:
        raise UsageError("cache commands need --cache-dir or QUATHECKE_CACHE_DIR")
    store = ClassSetCache(cache_dir, args.p)
    if args.action == "rebuild":
        cs = left_ideal_classes(maximal_order_basis(build_algebra(args.p)))
        store.store(cs)
        for ell0 in args.ell or []:
            if gcd(ell0, args.p * args.N) != 1 or not isprime(ell0):
                raise UsageError(f"ell0={ell0} must be a prime coprime to pN")
            build_context(cs, ell0, args.N, store=store)
        out.write(f"rebuilt {store.path}\n")
        return 0
    if not store.path.exists():
        print(f"error: no cache file at {store.path}", file=err)
        return 1
    problems = verify_cache(store.path)
    if problems:
        for msg in problems:
            print(f"error: {msg}", file=err)
        return 1
    out.write(f"ok {store.path}\n")
    return 0


# ---------------------------------------------------------------- entry point


def resolve_cache_dir(args) -> Optional[Path]:
    if getattr(args, "cache_dir", None):
        return Path(args.cache_dir)
    return default_cache_dir()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quathecke", description="Hecke operators on definite quaternion algebras mod p.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-p", type=int, required=True, help="the prime ramified in the algebra")
        sp.add_argument("--cache-dir", help="cache directory (default: $QUATHECKE_CACHE_DIR)")
        sp.add_argument("--timing", action="store_true", help="report stage timings on stderr")

    cs = sub.add_parser("classset", help="left ideal classes of the maximal order")
    common(cs)
    cs.add_argument("--format", choices=("json", "pretty"), default="json")
    cs.set_defaults(func=cmd_classset)

    hk = sub.add_parser("hecke", help="Hecke operator matrices")
    common(hk)
    hk.add_argument("-N", type=int, default=1, help="level, coprime to p")
    hk.add_argument("--ell", type=parse_ells, default=[2], help="comma-separated ell0 primes")
    hk.add_argument("--weight", type=int, default=None, help="emit only the weight-k block")
    hk.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    hk.add_argument("--eigen", action="store_true", help="simultaneous eigensystems")
    hk.add_argument("--brandt", action="store_true", help="include the integer companion ell0*T")
    hk.add_argument("--witnesses", action="store_true", help="include the quaternions realizing each entry")
    hk.add_argument("--orbits", action="store_true", help="matrix on level-N points (unit orbits)")
    hk.add_argument("--witness-mode", choices=WITNESS_MODES, default="average")
    hk.set_defaults(func=cmd_hecke)

    ca = sub.add_parser("cache", help="verify or rebuild a cache file")
    ca.add_argument("action", choices=("verify", "rebuild"))
    common(ca)
    ca.add_argument("-N", type=int, default=1, help="level used when precomputing splittings")
    ca.add_argument("--ell", type=parse_ells, default=None, help="ell0 primes whose splittings to precompute")
    ca.set_defaults(func=cmd_cache)
    return parser


INTERNAL_ERRORS = (HeckeError, SplittingError, ClassSetError, LinalgError, CacheError, AlgebraError, FieldError)


def main(argv: Optional[list[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=err, format="%(levelname)s %(message)s")
    try:
        return args.func(args, out, err)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return 2
    except INTERNAL_ERRORS as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return 1
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr = None
        return 0


if __name__ == "__main__":
    sys.exit(main())
