"""Small integer helpers shared across modules."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from sympy.ntheory import factorint, isprime

__all__ = [
    "isprime",
    "prime_divisors",
    "valuation",
    "frac_valuation",
    "legendre",
    "inv_mod",
    "crt_pair",
]


def prime_divisors(n: int) -> list[int]:
    """Sorted prime divisors of a nonzero integer."""
    n = abs(n)
    if n <= 1:
        return []
    return sorted(factorint(n))


def valuation(n: int, ell: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    while n % ell == 0:
        n //= ell
        v += 1
    return v


def frac_valuation(x: Fraction, ell: int) -> int:
    x = Fraction(x)
    return valuation(x.numerator, ell) - valuation(x.denominator, ell)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def inv_mod(a: int, m: int) -> int:
    if gcd(a, m) != 1:
        raise ZeroDivisionError(f"{a} is not invertible modulo {m}")
    return pow(a, -1, m)


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    """Combine x = r1 mod m1 and x = r2 mod m2 for coprime moduli."""
    m = m1 * m2
    x = (r1 + m1 * ((r2 - r1) * inv_mod(m1, m2) % m2)) % m if m2 > 1 else r1 % m1
    return x, m
