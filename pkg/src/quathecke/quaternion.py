"""Exact arithmetic in the definite quaternion algebra (-eps, -p | Q).

Elements are stored by their coefficients on 1, i, j, ij with
i^2 = -eps, j^2 = -p and ij = -ji.  All coefficients are Fractions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from math import isqrt
from typing import Iterable, Optional, Sequence

from .arith import isprime, legendre

logger = logging.getLogger(__name__)

# r is searched among primes below this bound; exceeding it raises.
R_SEARCH_LIMIT = 10_000


class AlgebraError(ValueError):
    pass


class OrderValidationError(AlgebraError):
    pass


@dataclass(frozen=True)
class AlgebraParams:
    """The algebra D = (-eps, -p | Q), ramified exactly at p and infinity."""

    p: int
    eps: int
    r: Optional[int] = None
    a: Optional[int] = None

    def __post_init__(self):
        p, eps = self.p, self.eps
        if not isprime(p):
            raise AlgebraError(f"p={p} is not prime")
        if p == 2 or p % 4 == 3:
            ok = eps == 1 and self.r is None
        elif p % 8 == 5:
            ok = eps == 2 and self.r is None
        else:
            r = self.r
            ok = (
                r is not None
                and eps == r
                and isprime(r)
                and r % 4 == 3
                and legendre(r, p) == -1
                and self.a is not None
                and (self.a * self.a * p + 1) % r == 0
            )
        if not ok:
            raise AlgebraError(f"inconsistent algebra parameters {self}")

    def element(self, c0=0, c1=0, c2=0, c3=0) -> "Quaternion":
        return Quaternion(self, (Fraction(c0), Fraction(c1), Fraction(c2), Fraction(c3)))

    @property
    def one(self) -> "Quaternion":
        return self.element(1)

    @property
    def i(self) -> "Quaternion":
        return self.element(0, 1)

    @property
    def j(self) -> "Quaternion":
        return self.element(0, 0, 1)

    @property
    def ij(self) -> "Quaternion":
        return self.element(0, 0, 0, 1)


def build_algebra(p: int, r_limit: int = R_SEARCH_LIMIT) -> AlgebraParams:
    """Choose eps (and r, a when p = 1 mod 8) deterministically."""
    if not isprime(p):
        raise AlgebraError(f"p={p} is not prime")
    if p == 2 or p % 4 == 3:
        return AlgebraParams(p, 1)
    if p % 8 == 5:
        return AlgebraParams(p, 2)
    for r in range(3, r_limit, 4):
        if isprime(r) and legendre(r, p) == -1:
            a = next(a for a in count() if (a * a * p + 1) % r == 0)
            return AlgebraParams(p, r, r, a)
    raise AlgebraError(f"no admissible r below {r_limit} for p={p}")


@dataclass(frozen=True)
class Quaternion:
    alg: AlgebraParams
    c: tuple[Fraction, Fraction, Fraction, Fraction]

    def _check(self, other: "Quaternion") -> None:
        if self.alg != other.alg:
            raise AlgebraError("quaternions from different algebras")

    def _coerce(self, other) -> "Quaternion":
        if isinstance(other, Quaternion):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.alg.element(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Quaternion(self.alg, tuple(x + y for x, y in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(self.alg, tuple(-x for x in self.c))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Quaternion(self.alg, tuple(x * other for x in self.c))
        if not isinstance(other, Quaternion):
            return NotImplemented
        self._check(other)
        e, p = self.alg.eps, self.alg.p
        a0, a1, a2, a3 = self.c
        b0, b1, b2, b3 = other.c
        return Quaternion(
            self.alg,
            (
                a0 * b0 - e * a1 * b1 - p * a2 * b2 - e * p * a3 * b3,
                a0 * b1 + a1 * b0 + p * a2 * b3 - p * a3 * b2,
                a0 * b2 + a2 * b0 - e * a1 * b3 + e * a3 * b1,
                a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
            ),
        )

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / other)
        return self * other.inverse()

    def conj(self) -> "Quaternion":
        c0, c1, c2, c3 = self.c
        return Quaternion(self.alg, (c0, -c1, -c2, -c3))

    def trd(self) -> Fraction:
        return 2 * self.c[0]

    def nrd(self) -> Fraction:
        e, p = self.alg.eps, self.alg.p
        c0, c1, c2, c3 = self.c
        return c0 * c0 + e * c1 * c1 + p * c2 * c2 + e * p * c3 * c3

    def inverse(self) -> "Quaternion":
        n = self.nrd()
        if n == 0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return self.conj() * (1 / n)

    def is_zero(self) -> bool:
        return not any(self.c)

    def __repr__(self) -> str:
        names = ("", "i", "j", "ij")
        parts = [f"{x}{'*' + n if n else ''}" for x, n in zip(self.c, names) if x]
        return " + ".join(parts) if parts else "0"


def mul(x: Quaternion, y: Quaternion) -> Quaternion:
    return x * y


def conj(x: Quaternion) -> Quaternion:
    return x.conj()


def trd(x: Quaternion) -> Fraction:
    return x.trd()


def nrd(x: Quaternion) -> Fraction:
    return x.nrd()


def det4(m: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant by fraction-preserving Gaussian elimination."""
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for k in range(col, n):
                    a[r][k] -= f * a[col][k]
    return det


def invert_matrix(m: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise AlgebraError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


@dataclass(frozen=True)
class OrderBasis:
    """A Z-basis s^1..s^4 of an order, with coordinate conversion."""

    alg: AlgebraParams
    s: tuple[Quaternion, Quaternion, Quaternion, Quaternion]

    def __post_init__(self):
        # Rows of the inverse map (1, i, j, ij)-coefficients to s-coordinates.
        m = [list(q.c) for q in self.s]
        object.__setattr__(self, "_inv", invert_matrix(m))

    def coordinates(self, x: Quaternion) -> tuple[Fraction, ...]:
        inv = self._inv
        return tuple(sum(x.c[k] * inv[k][a] for k in range(4)) for a in range(4))

    def element(self, coords: Iterable) -> Quaternion:
        out = self.alg.element()
        for c, q in zip(coords, self.s):
            if c:
                out = out + q * Fraction(c)
        return out

    def integral_coordinates(self, x: Quaternion) -> Optional[tuple[int, ...]]:
        co = self.coordinates(x)
        if all(c.denominator == 1 for c in co):
            return tuple(int(c) for c in co)
        return None

    def gram(self) -> list[list[Fraction]]:
        """Gram matrix of nrd in these coordinates: trd(s^a conj(s^b)) / 2."""
        return [[(a * b.conj()).trd() / 2 for b in self.s] for a in self.s]


def reduced_discriminant(basis: OrderBasis | Sequence[Quaternion]) -> int:
    """sqrt |det trd(s^a conj s^b)|; equals p exactly for a maximal order of D."""
    s = basis.s if isinstance(basis, OrderBasis) else tuple(basis)
    d = abs(det4([[(a * b.conj()).trd() for b in s] for a in s]))
    if d.denominator != 1 or isqrt(d.numerator) ** 2 != d.numerator:
        raise OrderValidationError(f"trace-pairing determinant {d} is not a square integer")
    return isqrt(d.numerator)


def order_defects(basis: OrderBasis) -> list[str]:
    """Reasons the basis fails to be a maximal order (empty list if valid)."""
    problems = []
    if basis.integral_coordinates(basis.alg.one) is None:
        problems.append("1 is not in the span")
    for a, x in enumerate(basis.s):
        if x.nrd().denominator != 1 or x.trd().denominator != 1:
            problems.append(f"s{a + 1} = {x} is not integral")
        for b, y in enumerate(basis.s):
            if basis.integral_coordinates(x * y) is None:
                problems.append(f"s{a + 1}*s{b + 1} leaves the span")
    if not problems:
        try:
            disc = reduced_discriminant(basis)
        except OrderValidationError as exc:
            problems.append(str(exc))
        else:
            if disc != basis.alg.p:
                problems.append(f"reduced discriminant {disc} != p")
    return problems


def _candidate_bases(alg: AlgebraParams) -> list[tuple[str, tuple[Quaternion, ...]]]:
    one, i, j, ij = alg.one, alg.i, alg.j, alg.ij
    half = Fraction(1, 2)
    p = alg.p
    if p == 2:
        # The Hurwitz-style basis below is maximal in (-1,-1), not in
        # (-1,-2) where j^2 = -2; it is kept first so the rejection is logged.
        return [
            ("p=2, as printed", ((one + i + j + ij) * half, i, j, ij)),
            ("p=2, adapted to j^2 = -2", (one, i, (one + i + j) * half, (one + i + ij) * half)),
        ]
    if p % 4 == 3:
        # Same lattice as {(1+j)/2, (i+ij)/2, j, ij}, ordered so that the
        # coordinates agree with the worked p = 11 example.
        return [("p=3 mod 4", (one, i, (i + ij) * half, (one + j) * half))]
    if p % 8 == 5:
        return [("p=5 mod 8", ((one + j + ij) * half, (i + 2 * j + ij) * Fraction(1, 4), j, ij))]
    r, a = alg.r, alg.a
    inv_r = Fraction(1, r)
    return [
        ("p=1 mod 8, as printed", ((one + j) * half, (i + ij) * half, (j + a * ij) * inv_r, ij)),
        ("p=1 mod 8, third element corrected", ((one + j) * half, (i + ij) * half, (i + a * ij) * inv_r, ij)),
        # i and j exchanged relative to the printed basis (i^2 = -r, j^2 = -p).
        ("p=1 mod 8, i/j exchanged", ((one + i) * half, (j + ij) * half, (i + a * ij) * inv_r, ij)),
        ("p=1 mod 8, i/j exchanged, -a", ((one + i) * half, (j + ij) * half, (i - a * ij) * inv_r, ij)),
    ]


def maximal_order_basis(alg: AlgebraParams) -> OrderBasis:
    """Return a validated maximal-order basis for the algebra.

    Candidates are tried in order; the first one that contains 1, is closed
    under multiplication, is integral and has reduced discriminant p wins.
    Rejected candidates are logged.
    """
    report = []
    for label, s in _candidate_bases(alg):
        try:
            basis = OrderBasis(alg, s)
        except AlgebraError:
            report.append((label, ["elements are linearly dependent"]))
            continue
        problems = order_defects(basis)
        if not problems:
            if report:
                logger.info("maximal order for p=%d: using %s after rejecting %s", alg.p, label, report)
            return basis
        report.append((label, problems[:3]))
    raise OrderValidationError(f"no valid maximal order basis for {alg}: {report}")
