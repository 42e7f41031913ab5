"""Left ideal classes of the maximal order and their local generators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .arith import frac_valuation, prime_divisors, valuation
from .lattice import (
    IdealLattice,
    LatticeError,
    ideal_nrd,
    is_isomorphic,
    lattice_from_generators,
    order_lattice,
    right_order,
    unit_count,
)
from .quaternion import AlgebraParams, OrderBasis, Quaternion

logger = logging.getLogger(__name__)


class ClassSetError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdelicPoint:
    """Sparse local generators: prime -> w_ell (absent means w_ell = 1)."""

    gens: dict[int, Quaternion] = field(default_factory=dict)

    def at(self, ell: int, alg: AlgebraParams) -> Quaternion:
        return self.gens.get(ell, alg.one)

    def valuation(self, ell: int) -> int:
        w = self.gens.get(ell)
        return 0 if w is None else frac_valuation(w.nrd(), ell)

    def primes(self) -> list[int]:
        return sorted(self.gens)


@dataclass(frozen=True)
class ClassSet:
    params: AlgebraParams
    order: OrderBasis
    reps: tuple[IdealLattice, ...]
    bases: tuple[tuple[Quaternion, ...], ...]
    unit_orders: tuple[int, ...]
    local_gens: tuple[AdelicPoint, ...]

    @property
    def h(self) -> int:
        return len(self.reps)

    def mass(self) -> Fraction:
        return sum((Fraction(1, u) for u in self.unit_orders), Fraction(0))

    def m(self, ell: int) -> int:
        """max over classes of v_ell(nrd w_ell^j)."""
        return max(pt.valuation(ell) for pt in self.local_gens)


def eichler_mass(p: int) -> Fraction:
    return Fraction(p - 1, 24)


def neighbor_prime(p: int) -> int:
    return 3 if p == 2 else 2


def _projective_points(q: int, dim: int = 4):
    """Representatives of P^{dim-1}(F_q): first nonzero coordinate is 1."""
    for lead in range(dim):
        for tail in product(range(q), repeat=dim - lead - 1):
            yield (0,) * lead + (1,) + tail


def neighbors(I: IdealLattice, q: int) -> list[IdealLattice]:
    """Sub-ideals J of I with [I : J] = q^2, i.e. nrd(J) = q * nrd(I)."""
    order = I.order
    basis = I.basis
    want = I.index_in_order() * q * q
    qI = [b * q for b in basis]
    seen: dict[IdealLattice, None] = {}
    for c in _projective_points(q):
        x = order.alg.element()
        for coeff, b in zip(c, basis):
            if coeff:
                x = x + b * coeff
        J = lattice_from_generators([s * x for s in order.s] + qI, order)
        if J.index_in_order() == want and J not in seen:
            seen[J] = None
    if len(seen) != q + 1:
        raise ClassSetError(f"expected {q + 1} neighbours, found {len(seen)}")
    return list(seen)


def local_generators(bases: Sequence[Sequence[Quaternion]], reps: Sequence[IdealLattice]) -> list[AdelicPoint]:
    """For each class pick, per prime dividing every basis norm, the first
    basis element of minimal valuation."""
    out = []
    for basis, I in zip(bases, reps):
        norms = [b.nrd() for b in basis]
        n_I = ideal_nrd(I)
        primes = set()
        for x in norms:
            primes.update(prime_divisors(x.numerator))
            primes.update(prime_divisors(x.denominator))
        gens = {}
        for ell in sorted(primes):
            vals = [frac_valuation(x, ell) for x in norms]
            low = min(vals)
            if low <= 0 and frac_valuation(n_I, ell) == 0:
                continue
            w = basis[vals.index(low)]
            if low != frac_valuation(n_I, ell):
                w = _search_generator(basis, ell, frac_valuation(n_I, ell))
                logger.info("class basis has no local generator at %d; using %s", ell, w)
            gens[ell] = w
        out.append(AdelicPoint(gens))
    return out


def _search_generator(basis: Sequence[Quaternion], ell: int, target: int, bound: int = 6) -> Quaternion:
    """Smallest integer combination whose norm has the ideal's valuation."""
    alg = basis[0].alg
    for size in range(1, bound + 1):
        for c in product(range(-size, size + 1), repeat=4):
            if max(map(abs, c)) != size:
                continue
            x = alg.element()
            for coeff, b in zip(c, basis):
                x = x + b * coeff
            if not x.is_zero() and frac_valuation(x.nrd(), ell) == target:
                return x
    raise ClassSetError(f"no local generator found at {ell}")


def class_set_from_ideals(
    params: AlgebraParams, order: OrderBasis, bases: Sequence[Sequence[Quaternion]]
) -> ClassSet:
    """Build a ClassSet from explicit Z-bases (kept verbatim for generator choice)."""
    reps = [lattice_from_generators(list(b), order) for b in bases]
    for I in reps:
        if not I.is_left_ideal():
            raise ClassSetError("basis does not span a left ideal")
    unit_orders = [unit_count(right_order(I)) for I in reps]
    cs = ClassSet(
        params,
        order,
        tuple(reps),
        tuple(tuple(b) for b in bases),
        tuple(unit_orders),
        tuple(local_generators(bases, reps)),
    )
    return cs


def left_ideal_classes(order: OrderBasis, params: Optional[AlgebraParams] = None) -> ClassSet:
    """Breadth-first search over q-neighbours until the Eichler mass is reached."""
    params = params or order.alg
    target = eichler_mass(params.p)
    q = neighbor_prime(params.p)
    O = order_lattice(order)
    reps = [O]
    units = [unit_count(O)]
    mass = Fraction(1, units[0])
    frontier = [O]
    while mass < target:
        if not frontier:
            raise ClassSetError(f"neighbour graph exhausted at mass {mass} < {target}")
        I = frontier.pop(0)
        for J in neighbors(I, q):
            u = unit_count(right_order(J))
            if any(units[t] == u and is_isomorphic(K, J)[0] for t, K in enumerate(reps)):
                continue
            reps.append(J)
            units.append(u)
            frontier.append(J)
            mass += Fraction(1, u)
            if mass >= target:
                break
    if mass != target:
        raise ClassSetError(f"mass overshoot: {mass} > {target}; a duplicate class was admitted")
    bases = [J.basis for J in reps]
    return ClassSet(params, order, tuple(reps), tuple(bases), tuple(units), tuple(local_generators(bases, reps)))


def verify_class_set(cs: ClassSet) -> list[str]:
    """Independent checks on a class set; returns a list of problems."""
    problems = []
    if cs.mass() != eichler_mass(cs.params.p):
        problems.append(f"mass {cs.mass()} != {eichler_mass(cs.params.p)}")
    for t, I in enumerate(cs.reps):
        if not I.is_left_ideal():
            problems.append(f"class {t} is not a left ideal")
        try:
            if unit_count(right_order(I)) != cs.unit_orders[t]:
                problems.append(f"class {t} unit count mismatch")
        except LatticeError as exc:
            problems.append(f"class {t}: {exc}")
        for ell, w in cs.local_gens[t].gens.items():
            if not I.contains(w) or frac_valuation(w.nrd(), ell) != frac_valuation(ideal_nrd(I), ell):
                problems.append(f"class {t}: bad local generator at {ell}")
    return problems
