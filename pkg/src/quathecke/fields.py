"""F_p and F_{p^2} = F_p[i]/(i^2 + eps) with a shared, tuple-friendly interface.

Elements of F_p are ints in [0, p); elements of F_{p^2} are Fp2Elem(s, t)
meaning s + t*i.  Field objects carry the arithmetic so matrices can stay
as plain nested lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .arith import isprime, legendre


class FieldError(ValueError):
    pass


class Fp2Elem(NamedTuple):
    s: int
    t: int

    def __str__(self) -> str:
        return f"[{self.s},{self.t}]"


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isprime(self.p):
            raise FieldError(f"{self.p} is not prime")

    @property
    def size(self) -> int:
        return self.p

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1

    def coerce(self, x) -> int:
        return int(x) % self.p

    def add(self, x: int, y: int) -> int:
        return (x + y) % self.p

    def sub(self, x: int, y: int) -> int:
        return (x - y) % self.p

    def neg(self, x: int) -> int:
        return -x % self.p

    def mul(self, x: int, y: int) -> int:
        return x * y % self.p

    def inv(self, x: int) -> int:
        if x % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(x, -1, self.p)

    def is_zero(self, x: int) -> bool:
        return x % self.p == 0

    def elements(self) -> Iterator[int]:
        return iter(range(self.p))

    def fmt(self, x: int) -> str:
        return str(x)


@dataclass(frozen=True)
class Fp2:
    """F_p[i]/(i^2 + eps); requires -eps to be a non-square mod odd p."""

    p: int
    eps: int

    def __post_init__(self):
        if self.p == 2 or not isprime(self.p):
            raise FieldError("F_{p^2} by adjoining i is only set up for odd primes p")
        if legendre(-self.eps, self.p) != -1:
            raise FieldError(f"-{self.eps} is a square mod {self.p}; F_p[i] is not a field")

    @property
    def size(self) -> int:
        return self.p * self.p

    @property
    def zero(self) -> Fp2Elem:
        return Fp2Elem(0, 0)

    @property
    def one(self) -> Fp2Elem:
        return Fp2Elem(1, 0)

    @property
    def gen(self) -> Fp2Elem:
        return Fp2Elem(0, 1)

    def coerce(self, x) -> Fp2Elem:
        if isinstance(x, tuple):
            return Fp2Elem(x[0] % self.p, x[1] % self.p)
        return Fp2Elem(int(x) % self.p, 0)

    def add(self, x, y) -> Fp2Elem:
        p = self.p
        return Fp2Elem((x[0] + y[0]) % p, (x[1] + y[1]) % p)

    def sub(self, x, y) -> Fp2Elem:
        p = self.p
        return Fp2Elem((x[0] - y[0]) % p, (x[1] - y[1]) % p)

    def neg(self, x) -> Fp2Elem:
        return Fp2Elem(-x[0] % self.p, -x[1] % self.p)

    def mul(self, x, y) -> Fp2Elem:
        p = self.p
        a, b = x
        c, d = y
        return Fp2Elem((a * c - self.eps * b * d) % p, (a * d + b * c) % p)

    def norm(self, x) -> int:
        return (x[0] * x[0] + self.eps * x[1] * x[1]) % self.p

    def conj(self, x) -> Fp2Elem:
        return Fp2Elem(x[0], -x[1] % self.p)

    def inv(self, x) -> Fp2Elem:
        n = self.norm(x)
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        ni = pow(n, -1, self.p)
        return Fp2Elem(x[0] * ni % self.p, -x[1] * ni % self.p)

    def pow(self, x, k: int) -> Fp2Elem:
        if k < 0:
            x, k = self.inv(x), -k
        out = self.one
        base = Fp2Elem(*x)
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def is_zero(self, x) -> bool:
        return x[0] % self.p == 0 and x[1] % self.p == 0

    def elements(self) -> Iterator[Fp2Elem]:
        """All p^2 elements, lexicographic in (s, t)."""
        for s in range(self.p):
            for t in range(self.p):
                yield Fp2Elem(s, t)

    def units(self) -> list[Fp2Elem]:
        return [x for x in self.elements() if x != (0, 0)]

    def fmt(self, x) -> str:
        return f"[{x[0]},{x[1]}]"
