"""Rank-4 lattices in the algebra, stored in a canonical Hermite normal form.

A lattice is (1/d) * rowspan(H) where H is a 4x4 integer matrix in row HNF
and the rows are coordinates with respect to a fixed maximal-order basis.
Because H and d are canonical, two lattices are equal iff their (H, d) are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd, isqrt, lcm
from typing import Iterator, Optional, Sequence

from .quaternion import OrderBasis, Quaternion, det4

Matrix = list[list[int]]


class LatticeError(ValueError):
    pass


# ---------------------------------------------------------------- HNF


def hnf_rows(rows: Sequence[Sequence[int]], ncols: Optional[int] = None) -> Matrix:
    """Row-style Hermite normal form; returns only the nonzero rows.

    Pivots are positive and entries above a pivot are reduced into
    [0, pivot).  The result depends only on the row span.
    """
    work = [list(map(int, r)) for r in rows if any(r)]
    if ncols is None:
        ncols = len(work[0]) if work else 0
    top = 0
    for col in range(ncols):
        if top >= len(work):
            break
        while True:
            nz = [r for r in range(top, len(work)) if work[r][col]]
            if not nz:
                break
            piv = min(nz, key=lambda r: abs(work[r][col]))
            work[top], work[piv] = work[piv], work[top]
            pv = work[top][col]
            clean = True
            for r in range(top + 1, len(work)):
                v = work[r][col]
                if v:
                    q = v // pv
                    if q:
                        row_t = work[top]
                        work[r] = [a - q * b for a, b in zip(work[r], row_t)]
                    if work[r][col]:
                        clean = False
            if clean:
                break
        if not work[top][col]:
            continue
        if work[top][col] < 0:
            work[top] = [-a for a in work[top]]
        pv = work[top][col]
        for r in range(top):
            q = work[r][col] // pv
            if q:
                work[r] = [a - q * b for a, b in zip(work[r], work[top])]
        top += 1
        # drop rows that became zero to keep the loop short
        work = work[:top] + [r for r in work[top:] if any(r)]
    return [r for r in work[:top]]


def congruence_kernel(forms: Sequence[tuple[Sequence[int], int]], dim: int = 4) -> Matrix:
    """Basis of {v in Z^dim : f.v = 0 mod m for every (f, m) in forms}."""
    forms = [(f, m) for f, m in forms if m > 1]
    if not forms:
        return [[int(a == b) for b in range(dim)] for a in range(dim)]
    c = len(forms)
    rows = []
    for a in range(dim):
        rows.append([forms[t][0][a] % forms[t][1] for t in range(c)] + [int(a == b) for b in range(dim)])
    for t, (_, m) in enumerate(forms):
        rows.append([m if s == t else 0 for s in range(c)] + [0] * dim)
    h = hnf_rows(rows, c + dim)
    kernel = [r[c:] for r in h if not any(r[:c])]
    if len(kernel) != dim:
        raise LatticeError("congruence kernel is not of full rank")
    return kernel


# ---------------------------------------------------------------- lattices


@dataclass(frozen=True)
class IdealLattice:
    """Lattice (1/denominator) * rowspan(hnf) in maximal-order coordinates."""

    hnf: tuple[tuple[int, ...], ...]
    denominator: int
    order: OrderBasis = field(compare=False, hash=False, repr=False)

    @property
    def basis(self) -> tuple[Quaternion, ...]:
        d = self.denominator
        return tuple(self.order.element(Fraction(x, d) for x in row) for row in self.hnf)

    def index_in_order(self) -> Fraction:
        """[O : L] as a rational number (volume ratio)."""
        det = 1
        for a in range(4):
            det *= self.hnf[a][a]
        return Fraction(det, self.denominator**4)

    def contains(self, x: Quaternion) -> bool:
        co = [c * self.denominator for c in self.order.coordinates(x)]
        if any(c.denominator != 1 for c in co):
            return False
        v = [int(c) for c in co]
        for a in range(4):
            piv = self.hnf[a][a]
            if v[a] % piv:
                return False
            q = v[a] // piv
            if q:
                v = [x - q * y for x, y in zip(v, self.hnf[a])]
        return not any(v)

    def gram(self) -> list[list[Fraction]]:
        b = self.basis
        return [[(x * y.conj()).trd() / 2 for y in b] for x in b]

    def is_left_ideal(self) -> bool:
        return all(self.contains(s * x) for s in self.order.s for x in self.basis)

    def is_integral(self) -> bool:
        return self.denominator == 1

    def scaled(self, c: Fraction) -> "IdealLattice":
        return lattice_from_generators([x * Fraction(c) for x in self.basis], self.order)


def _canonical(rows: Matrix, denom: int, order: OrderBasis) -> IdealLattice:
    h = hnf_rows(rows, 4)
    if len(h) != 4:
        raise LatticeError(f"generators span rank {len(h)} < 4")
    g = reduce(gcd, (x for r in h for x in r), denom)
    if g > 1:
        h = [[x // g for x in r] for r in h]
        denom //= g
    return IdealLattice(tuple(tuple(r) for r in h), denom, order)


def lattice_from_generators(gens: Sequence[Quaternion], order: OrderBasis) -> IdealLattice:
    if not gens:
        raise LatticeError("no generators")
    coords = [order.coordinates(x) for x in gens]
    denom = reduce(lcm, (c.denominator for co in coords for c in co), 1)
    rows = [[int(c * denom) for c in co] for co in coords]
    return _canonical(rows, denom, order)


def lattice_from_coordinates(rows: Sequence[Sequence[int]], denominator: int, order: OrderBasis) -> IdealLattice:
    return _canonical([list(r) for r in rows], denominator, order)


def order_lattice(order: OrderBasis) -> IdealLattice:
    return lattice_from_generators(list(order.s), order)


def ideal_product(I: IdealLattice, J: IdealLattice) -> IdealLattice:
    return lattice_from_generators([x * y for x in I.basis for y in J.basis], I.order)


def conjugate_ideal(I: IdealLattice) -> IdealLattice:
    return lattice_from_generators([x.conj() for x in I.basis], I.order)


def _rational_sqrt(x: Fraction) -> Optional[Fraction]:
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def ideal_nrd(I: IdealLattice) -> Fraction:
    """nrd(I) = sqrt([O : I])."""
    root = _rational_sqrt(I.index_in_order())
    if root is None:
        raise LatticeError(f"index {I.index_in_order()} is not a rational square")
    return root


def nrd_gcd(I: IdealLattice) -> Fraction:
    """gcd of nrd over the basis and pairwise sums; equals nrd(I) for invertible I."""
    b = I.basis
    vals = [x.nrd() for x in b] + [(b[s] + b[t]).nrd() for s in range(4) for t in range(s + 1, 4)]
    den = reduce(lcm, (v.denominator for v in vals), 1)
    g = reduce(gcd, (int(v * den) for v in vals), 0)
    return Fraction(g, den)


# ---------------------------------------------------------------- short vectors


def _int_range(center: Fraction, radius_sq: Fraction) -> range:
    """All integers x with (x - center)^2 <= radius_sq."""
    if radius_sq < 0:
        return range(0)
    r = isqrt(radius_sq.numerator // radius_sq.denominator) + 1
    lo = (center.numerator // center.denominator) - r - 1
    hi = -((-center.numerator) // center.denominator) + r + 1
    while lo <= hi and (lo - center) ** 2 > radius_sq:
        lo += 1
    while hi >= lo and (hi - center) ** 2 > radius_sq:
        hi -= 1
    return range(lo, hi + 1)


def _ldl(gram: Sequence[Sequence[Fraction]]):
    """Completing squares: Q(v) = sum_i d_i (v_i + sum_{j>i} u_ij v_j)^2."""
    n = len(gram)
    g = [[Fraction(x) for x in row] for row in gram]
    for a in range(n):
        for b in range(n):
            if g[a][b] != g[b][a]:
                raise LatticeError("Gram matrix is not symmetric")
    d = [Fraction(0)] * n
    u = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        if g[i][i] <= 0:
            raise LatticeError("Gram matrix is not positive definite")
        d[i] = g[i][i]
        for j in range(i + 1, n):
            u[i][j] = g[i][j] / d[i]
        for a in range(i + 1, n):
            for b in range(i + 1, n):
                g[a][b] -= d[i] * u[i][a] * u[i][b]
    return d, u


def iter_short_vectors(gram: Sequence[Sequence[Fraction]], target: Fraction) -> Iterator[tuple[int, ...]]:
    """Yield every integer v with v^T gram v == target (no particular order)."""
    target = Fraction(target)
    n = len(gram)
    d, u = _ldl(gram)
    if target < 0:
        return
    if target == 0:
        yield (0,) * n
        return
    v = [0] * n

    def rec(i: int, budget: Fraction):
        center = -sum((u[i][j] * v[j] for j in range(i + 1, n)), Fraction(0))
        if i == 0:
            root = _rational_sqrt(budget / d[0])
            if root is None:
                return
            for x in sorted({center - root, center + root}):
                if x.denominator == 1:
                    v[0] = int(x)
                    yield tuple(v)
            return
        for x in _int_range(center, budget / d[i]):
            rest = budget - d[i] * (x - center) ** 2
            v[i] = x
            yield from rec(i - 1, rest)
        v[i] = 0

    yield from rec(n - 1, target)


def short_vectors(gram: Sequence[Sequence[Fraction]], target) -> list[tuple[int, ...]]:
    """All integer vectors of the given norm, sorted lexicographically."""
    return sorted(iter_short_vectors(gram, Fraction(target)))


def short_vectors_box(gram, target, bound: int) -> list[tuple[int, ...]]:
    """Exhaustive reference search over the box |v_i| <= bound (tests only)."""
    from itertools import product

    n = len(gram)
    target = Fraction(target)
    out = []
    for v in product(range(-bound, bound + 1), repeat=n):
        q = sum(Fraction(gram[a][b]) * v[a] * v[b] for a in range(n) for b in range(n))
        if q == target:
            out.append(v)
    return out


# ---------------------------------------------------------------- ideal classes


def is_isomorphic(I: IdealLattice, J: IdealLattice) -> tuple[bool, Optional[Quaternion]]:
    """Decide whether J = I*alpha for some alpha; return a verified witness."""
    nI, nJ = ideal_nrd(I), ideal_nrd(J)
    L = ideal_product(conjugate_ideal(I), J)
    b = L.basis
    for v in iter_short_vectors(L.gram(), nI * nJ):
        x = I.order.alg.element()
        for c, q in zip(v, b):
            if c:
                x = x + q * c
        alpha = x / nI
        cand = lattice_from_generators([y * alpha for y in I.basis], I.order)
        if cand == J:
            return True, alpha
        raise LatticeError("norm-matching element failed to give J = I*alpha")
    return False, None


def right_multiply(I: IdealLattice, alpha: Quaternion) -> IdealLattice:
    return lattice_from_generators([y * alpha for y in I.basis], I.order)


def right_order(I: IdealLattice) -> IdealLattice:
    """(1/nrd I) conj(I) I, returned as a lattice in O-coordinates."""
    n = ideal_nrd(I)
    prod = ideal_product(conjugate_ideal(I), I)
    R = prod.scaled(1 / n)
    one = I.order.alg.one
    if not R.contains(one):
        raise LatticeError("right order does not contain 1")
    disc_sq = abs(det4([[(x * y.conj()).trd() for y in R.basis] for x in R.basis]))
    if disc_sq != I.order.alg.p ** 2:
        raise LatticeError(f"right order has discriminant^2 {disc_sq}, ideal not invertible")
    return R


def units(order_lat: IdealLattice) -> list[Quaternion]:
    b = order_lat.basis
    out = []
    for v in short_vectors(order_lat.gram(), 1):
        x = order_lat.order.alg.element()
        for c, q in zip(v, b):
            if c:
                x = x + q * c
        out.append(x)
    return out


def unit_count(order_lat: IdealLattice) -> int:
    return sum(1 for _ in iter_short_vectors(order_lat.gram(), Fraction(1)))
