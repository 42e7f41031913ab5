"""Truncated splittings O (x) Z_ell -> M_2(Z/ell^n).

i and j are sent to trace-free matrices A and B with A^2 = -eps, B^2 = -p,
AB = -BA, chosen so every maximal-order basis element has an integral image
(the "condition" below).  Seeds come from small searches; they are then
lifted with the odd-prime linear lemma or 2-adic multivariate Newton steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import combinations, product
from math import lcm
from typing import Optional, Sequence

from .arith import frac_valuation, inv_mod, prime_divisors, valuation
from .classes import ClassSet
from .quaternion import AlgebraParams, OrderBasis, Quaternion

logger = logging.getLogger(__name__)

Mat = tuple[int, int, int, int]  # (a, b, c, d) for [[a, b], [c, d]]


class SplittingError(RuntimeError):
    pass


# ---------------------------------------------------------------- 2x2 helpers


def mmul(X: Mat, Y: Mat, mod: int) -> Mat:
    a, b, c, d = X
    e, f, g, h = Y
    return ((a * e + b * g) % mod, (a * f + b * h) % mod, (c * e + d * g) % mod, (c * f + d * h) % mod)


def madd(X: Mat, Y: Mat, mod: int) -> Mat:
    return tuple((x + y) % mod for x, y in zip(X, Y))


def mscale(X: Mat, s: int, mod: int) -> Mat:
    return tuple((s * x) % mod for x in X)


def mred(X: Sequence[int], mod: int) -> Mat:
    return tuple(int(x) % mod for x in X)


def adj(X: Mat) -> Mat:
    a, b, c, d = X
    return (d, -b, -c, a)


def det(X: Mat) -> int:
    a, b, c, d = X
    return a * d - b * c


def identity() -> Mat:
    return (1, 0, 0, 1)


def is_zero_mod(X: Sequence[int], mod: int) -> bool:
    return all(x % mod == 0 for x in X)


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class LocalMatrix:
    modulus: int
    entries: Mat

    def __post_init__(self):
        object.__setattr__(self, "entries", mred(self.entries, self.modulus))

    def __mul__(self, other: "LocalMatrix") -> "LocalMatrix":
        m = min(self.modulus, other.modulus)
        return LocalMatrix(m, mmul(self.entries, other.entries, m))

    def det(self) -> int:
        return det(self.entries) % self.modulus

    def trace(self) -> int:
        return (self.entries[0] + self.entries[3]) % self.modulus


@dataclass(frozen=True)
class PrecisionPlan:
    """The prime set V with (m_ell, n_ell) for each member."""

    N: int
    ell0: int
    primes: dict[int, tuple[int, int]]

    @property
    def V(self) -> list[int]:
        return sorted(self.primes)

    def m(self, ell: int) -> int:
        return self.primes[ell][0]

    def n(self, ell: int) -> int:
        return self.primes[ell][1]

    def working_exponent(self, ell: int) -> int:
        return 2 * self.m(ell) + valuation(self.N, ell) + 2


@dataclass(frozen=True)
class SplittingData:
    ell: int
    n: int
    m: int
    prec: int
    A: Mat
    B: Mat
    S: tuple[Mat, Mat, Mat, Mat]
    W: tuple[Mat, ...]

    @property
    def modulus(self) -> int:
        return self.ell**self.n

    @property
    def working_modulus(self) -> int:
        return self.ell**self.prec

    def image(self, coords: Sequence[int]) -> Mat:
        """Image of sum coords[a] * s^a modulo ell^prec."""
        mod = self.working_modulus
        out = (0, 0, 0, 0)
        for c, S in zip(coords, self.S):
            if c:
                out = madd(out, mscale(S, c, mod), mod)
        return out


# ---------------------------------------------------------------- plan


def precision_plan(classset: ClassSet, N: int, ell0: int) -> PrecisionPlan:
    p = classset.params.p
    if N < 1:
        raise ValueError("level must be positive")
    if N % p == 0:
        raise ValueError(f"level {N} is not coprime to p={p}")
    if (p * N) % ell0 == 0:
        raise ValueError(f"ell0={ell0} divides pN")
    V = set(prime_divisors(N)) | {ell0}
    for pt in classset.local_gens:
        V.update(l for l in pt.gens if pt.valuation(l) > 0)
    V.discard(p)
    primes = {}
    for ell in sorted(V):
        m = classset.m(ell)
        vN = valuation(N, ell)
        n = 2 * m + vN + 4
        if ell == 2:
            n = max(7, n)
        # products of images divided by ell^e lose 2e digits, not e
        n = max(n, 2 * m + vN + 2 + 2 * _condition_exponent(classset.order, ell))
        primes[ell] = (m, n)
    return PrecisionPlan(N, ell0, primes)


# ---------------------------------------------------------------- condition


def _numerators(order: OrderBasis) -> list[tuple[tuple[int, int, int, int], int]]:
    """Each s^a as (integer numerator coefficients, denominator)."""
    out = []
    for s in order.s:
        d = reduce(lcm, (c.denominator for c in s.c), 1)
        out.append((tuple(int(c * d) for c in s.c), d))
    return out


def _combo(nums: Sequence[int], A: Mat, B: Mat, mod: int) -> Mat:
    AB = mmul(A, B, mod)
    out = mscale(identity(), nums[0], mod)
    for c, X in zip(nums[1:], (A, B, AB)):
        out = madd(out, mscale(X, c, mod), mod)
    return out


def condition_holds(A: Mat, B: Mat, order: OrderBasis, ell: int) -> bool:
    """Every basis numerator must vanish modulo the ell-part of its denominator."""
    for nums, d in _numerators(order):
        e = valuation(d, ell)
        if e == 0:
            continue
        m = ell**e
        if not is_zero_mod(_combo(nums, A, B, m), m):
            return False
    return True


def relations_hold(A: Mat, B: Mat, eps: int, p: int, mod: int) -> bool:
    if (A[0] + A[3]) % mod or (B[0] + B[3]) % mod:
        return False
    A2 = mmul(A, A, mod)
    B2 = mmul(B, B, mod)
    AB = mmul(A, B, mod)
    BA = mmul(B, A, mod)
    return (
        is_zero_mod(madd(A2, mscale(identity(), eps, mod), mod), mod)
        and is_zero_mod(madd(B2, mscale(identity(), p, mod), mod), mod)
        and is_zero_mod(madd(AB, BA, mod), mod)
    )


def _condition_exponent(order: OrderBasis, ell: int) -> int:
    return max(valuation(d, ell) for _, d in _numerators(order))


# ---------------------------------------------------------------- seeds


def _tf(a1: int, a2: int, a3: int) -> Mat:
    return (a1, a2, a3, -a1)


def _companion_odd(params: AlgebraParams, order: OrderBasis, ell: int) -> Optional[tuple[Mat, Mat]]:
    """A = (0 -eps; 1 0), B = (b1 eps*b3; b3 -b1), lifted to ell^2."""
    eps, p = params.eps, params.p
    mod = ell * ell
    for b3 in range(ell):
        for b1 in range(ell):
            if (b1 * b1 + eps * b3 * b3 + p) % ell:
                continue
            if b1 % ell:
                t = (-(b1 * b1 + eps * b3 * b3 + p) // ell) * inv_mod(2 * b1, ell) % ell
                b1 += t * ell
            else:
                t = (-(b1 * b1 + eps * b3 * b3 + p) // ell) * inv_mod(2 * eps * b3, ell) % ell
                b3 += t * ell
            A = mred(_tf(0, -eps, 1), mod)
            B = mred(_tf(b1, eps * b3, b3), mod)
            if relations_hold(A, B, eps, p, mod) and condition_holds(A, B, order, ell):
                return A, B
            b1 %= ell
            b3 %= ell
    return None


def _companion_r(params: AlgebraParams, order: OrderBasis, ell: int) -> Optional[tuple[Mat, Mat]]:
    """ell = r divides eps: B = (0 -p; 1 0), A = (a1 p*a3; a3 -a1), lifted to r^2."""
    eps, p = params.eps, params.p
    mod = ell * ell
    for a1 in range(ell):
        for a3 in range(1, ell):
            if (a1 * a1 + p * a3 * a3 + eps) % ell:
                continue
            t = (-(a1 * a1 + p * a3 * a3 + eps) // ell) * inv_mod(2 * p * a3, ell) % ell
            a3l = a3 + t * ell
            A = mred(_tf(a1, p * a3l, a3l), mod)
            B = mred(_tf(0, -p, 1), mod)
            if relations_hold(A, B, eps, p, mod) and condition_holds(A, B, order, ell):
                return A, B
    return None


def _companion_two(params: AlgebraParams, order: OrderBasis) -> Optional[tuple[Mat, Mat]]:
    """Search mod 2^7 with a fixed A and B in the anticommuting family."""
    eps, p = params.eps, params.p
    mod = 128
    candidates_A = [_tf(0, -eps, 1)]
    if eps % 4 == 3:
        # A = I mod 2 is forced when (1+i)/2 lies in the order.
        candidates_A.append(_tf(-1, -(1 + eps) // 2, 2))
    for A in candidates_A:
        A = mred(A, mod)
        a1, a2, a3 = A[0], A[1], A[2]
        for b3 in range(mod):
            for b1 in range(mod):
                # anticommutation: 2 a1 b1 + a2 b3 + a3 b2 = 0; solve for b2 when a3 is a unit
                if a3 % 2 == 1:
                    b2 = (-(2 * a1 * b1 + a2 * b3)) * inv_mod(a3, mod) % mod
                elif a3 % 4 == 2 and (2 * a1 * b1 + a2 * b3) % 2 == 0:
                    rhs = -(2 * a1 * b1 + a2 * b3) // 2
                    b2 = rhs * inv_mod(a3 // 2, mod) % mod
                else:
                    continue
                if (b1 * b1 + b2 * b3 + p) % mod:
                    continue
                B = _tf(b1, b2, b3)
                if relations_hold(A, B, eps, p, mod) and condition_holds(A, B, order, 2):
                    return A, mred(B, mod)
    return None


def _digit_search(params: AlgebraParams, order: OrderBasis, ell: int, exponent: int) -> Optional[tuple[Mat, Mat]]:
    """Depth-first digit-by-digit search over all six trace-free parameters."""
    eps, p = params.eps, params.p
    cond_e = _condition_exponent(order, ell)

    def ok(vals, k):
        m = ell**k
        A = _tf(*vals[:3])
        B = _tf(*vals[3:])
        if not relations_hold(mred(A, m), mred(B, m), eps, p, m):
            return False
        if k >= cond_e and not condition_holds(mred(A, m), mred(B, m), order, ell):
            return False
        return True

    def rec(vals, k):
        if k == exponent:
            return vals
        step = ell**k
        for digits in product(range(ell), repeat=6):
            nxt = tuple(v + d * step for v, d in zip(vals, digits))
            if ok(nxt, k + 1):
                found = rec(nxt, k + 1)
                if found:
                    return found
        return None

    res = rec((0,) * 6, 0)
    if res is None:
        return None
    mod = ell**exponent
    return mred(_tf(*res[:3]), mod), mred(_tf(*res[3:]), mod)


def seed_exponent(ell: int) -> int:
    return 7 if ell == 2 else 2


def find_splitting_seed(params: AlgebraParams, order: OrderBasis, ell: int) -> tuple[Mat, Mat]:
    """Trace-free (A0, B0) valid modulo ell^2 (odd ell) or 2^7, satisfying the condition."""
    if ell == params.p:
        raise SplittingError("no splitting at the ramified prime")
    if ell == 2:
        res = _companion_two(params, order)
    elif params.eps % ell == 0:
        res = _companion_r(params, order, ell)
    else:
        res = _companion_odd(params, order, ell)
    if res is None:
        logger.info("companion search failed at ell=%d; falling back to digit search", ell)
        res = _digit_search(params, order, ell, seed_exponent(ell))
    if res is None:
        raise SplittingError(f"no splitting seed found at ell={ell}")
    return res


# ---------------------------------------------------------------- odd lifting


def _solve_mod_prime(rows: list[list[int]], rhs: list[int], ell: int) -> list[int]:
    """One solution of rows * x = rhs over F_ell, free variables set to 0."""
    n = len(rows[0])
    aug = [[x % ell for x in r] + [b % ell] for r, b in zip(rows, rhs)]
    pivots = []
    top = 0
    for col in range(n):
        piv = next((r for r in range(top, len(aug)) if aug[r][col]), None)
        if piv is None:
            continue
        aug[top], aug[piv] = aug[piv], aug[top]
        inv = inv_mod(aug[top][col], ell)
        aug[top] = [x * inv % ell for x in aug[top]]
        for r in range(len(aug)):
            if r != top and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(x - f * y) % ell for x, y in zip(aug[r], aug[top])]
        pivots.append(col)
        top += 1
    for r in range(top, len(aug)):
        if aug[r][n]:
            raise SplittingError("lifting system is inconsistent")
    x = [0] * n
    for r, col in enumerate(pivots):
        x[col] = aug[r][n]
    return x


def lift_step_odd(A0: Mat, B0: Mat, ell: int, m: int, eps: int, p: int) -> tuple[Mat, Mat]:
    """Lift a trace-free solution mod ell^m to one mod ell^(m+1)."""
    if ell == 2:
        raise SplittingError("use lift_step_2adic at ell = 2")
    mod_m = ell**m
    if not relations_hold(A0, B0, eps, p, mod_m):
        raise SplittingError("relations do not hold at the starting precision")
    a1, a2, a3 = A0[0], A0[1], A0[2]
    b1, b2, b3 = B0[0], B0[1], B0[2]
    ra = (2 * a1, a3, a2)
    rb = (2 * b1, b3, b2)
    if all(
        (ra[s] * rb[t] - ra[t] * rb[s]) % ell == 0 for s in range(3) for t in range(s + 1, 3)
    ):
        raise SplittingError("A0 and B0 are proportional modulo ell")
    mod = mod_m * ell
    A = _tf(a1, a2, a3)
    B = _tf(b1, b2, b3)
    # residues of the three scalar equations, divided by ell^m
    f1 = (a1 * a1 + a2 * a3 + eps) % mod // mod_m
    f2 = (b1 * b1 + b2 * b3 + p) % mod // mod_m
    f3 = (2 * a1 * b1 + a2 * b3 + a3 * b2) % mod // mod_m
    rows = [
        [2 * a1, a3, a2, 0, 0, 0],
        [0, 0, 0, 2 * b1, b3, b2],
        [2 * b1, b3, b2, 2 * a1, a3, a2],
    ]
    x1, x2, x3, y1, y2, y3 = _solve_mod_prime(rows, [-f1, -f2, -f3], ell)
    A1 = mred(_tf(a1 + mod_m * x1, a2 + mod_m * x2, a3 + mod_m * x3), mod)
    B1 = mred(_tf(b1 + mod_m * y1, b2 + mod_m * y2, b3 + mod_m * y3), mod)
    if not relations_hold(A1, B1, eps, p, mod):
        raise SplittingError("odd lifting step failed verification")
    return A1, B1


# ---------------------------------------------------------------- 2-adic lifting

VARS = ("a", "b", "c", "x", "y", "z")
JAC = {
    "Jac1": (0, 3, 1),
    "Jac2": (0, 3, 2),
    "Jac3": (0, 3, 4),
    "Jac4": (0, 3, 5),
    "Jac5": (1, 4, 5),
}


def equations(v: Sequence[int], eps: int, p: int) -> tuple[int, int, int]:
    a, b, c, x, y, z = v
    return (a * a + b * c + eps, x * x + y * z + p, 2 * a * x + b * z + c * y)


def _derivatives(v: Sequence[int]) -> list[list[int]]:
    """3x6 matrix of partial derivatives of the three equations."""
    a, b, c, x, y, z = v
    return [
        [2 * a, c, b, 0, 0, 0],
        [0, 0, 0, 2 * x, z, y],
        [2 * x, z, y, 2 * a, c, b],
    ]


def _det3(M) -> int:
    return (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )


def _adj3(M) -> list[list[int]]:
    cof = [[0] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            minor = [[M[i][j] for j in range(3) if j != c] for i in range(3) if i != r]
            cof[r][c] = (-1) ** (r + c) * (minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0])
    return [[cof[c][r] for c in range(3)] for r in range(3)]


def jacobian(v: Sequence[int], subset: Sequence[int]) -> int:
    D = _derivatives(v)
    return _det3([[D[r][c] for c in subset] for r in range(3)])


def preferred_subsets(v: Sequence[int], eps: int, p: int) -> list[str]:
    """Variable subsets suggested by the parity case analysis, best first."""
    a, b, c, x, y, z = (t % 2 for t in v)
    if eps % 2 and p % 2:
        if not a and not x:
            return ["Jac5"]
        if a and not x:
            return ["Jac3"]
        if not a and x:
            return ["Jac1"]
        return ["Jac4", "Jac3", "Jac2", "Jac1"]
    # eps = 2 (p = 5 mod 8) or p = 2
    if a and not x:
        return ["Jac5"]
    if not a and x:
        return ["Jac1"] if (b == 0 and y == 0) else ["Jac2"]
    if a and x:
        return ["Jac2"] if y == 0 else ["Jac1"]
    return ["Jac5"]


def lift_step_2adic(v: Sequence[int], m: int, eps: int, p: int) -> tuple[int, ...]:
    """One Newton step: a solution mod 2^m (m >= 7) to one mod 2^(m+1)."""
    if m < 7:
        raise SplittingError("2-adic lifting needs m >= 7")
    mod_m = 1 << m
    mod = mod_m << 1
    if any(f % mod_m for f in equations(v, eps, p)):
        raise SplittingError("equations do not hold at the starting precision")
    v = [int(t) % mod for t in v]
    f = equations(v, eps, p)
    if not any(t % mod for t in f):
        return tuple(v)
    order = [JAC[name] for name in preferred_subsets(v, eps, p)]
    order += [s for s in combinations(range(6), 3) if s not in order]
    D = _derivatives(v)
    for subset in order:
        J = [[D[r][c] for c in subset] for r in range(3)]
        dJ = _det3(J)
        if dJ == 0:
            continue
        k = valuation(dJ, 2)
        if k > 3:
            continue
        ad = _adj3(J)
        num = [sum(ad[r][s] * f[s] for s in range(3)) for r in range(3)]
        if any(t % (1 << k) for t in num):
            continue
        unit_inv = inv_mod(dJ >> k, mod)
        delta = [(t >> k) * unit_inv % mod for t in num]
        w = list(v)
        for idx, d in zip(subset, delta):
            w[idx] = (w[idx] - d) % mod
        if not any(t % mod for t in equations(w, eps, p)):
            return tuple(w)
    raise SplittingError("no admissible variable subset for the Newton step")


# ---------------------------------------------------------------- assembly


def lift_to(A: Mat, B: Mat, ell: int, start: int, n: int, eps: int, p: int) -> tuple[Mat, Mat]:
    for m in range(start, n):
        if ell == 2:
            v = lift_step_2adic((A[0], A[1], A[2], B[0], B[1], B[2]), m, eps, p)
            mod = 1 << (m + 1)
            A, B = mred(_tf(*v[:3]), mod), mred(_tf(*v[3:]), mod)
        else:
            A, B = lift_step_odd(A, B, ell, m, eps, p)
    if n < start:
        mod = ell**n
        A, B = mred(A, mod), mred(B, mod)
    return A, B


def basis_images(A: Mat, B: Mat, order: OrderBasis, ell: int, n: int, prec: int) -> tuple[Mat, ...]:
    """Images of s^1..s^4 modulo ell^prec from A, B known modulo ell^n."""
    mod = ell**n
    out = []
    for nums, d in _numerators(order):
        e = valuation(d, ell)
        if n - e < prec:
            raise SplittingError("not enough precision to divide out denominators")
        X = _combo(nums, A, B, mod)
        if not is_zero_mod(X, ell**e):
            raise SplittingError("condition violated: basis element image is not integral")
        unit = d // ell**e
        low = ell ** (n - e)
        X = tuple((x // ell**e) * inv_mod(unit, low) % low for x in X)
        out.append(mred(X, ell**prec))
    return tuple(out)


def element_image(S: Sequence[Mat], order: OrderBasis, x: Quaternion, mod: int) -> Mat:
    coords = order.integral_coordinates(x)
    if coords is None:
        raise SplittingError(f"{x} is not in the maximal order")
    out = (0, 0, 0, 0)
    for c, X in zip(coords, S):
        out = madd(out, mscale(X, c, mod), mod)
    return out


def compute_splitting(
    ell: int, n: int, params: AlgebraParams, order: OrderBasis, classset: ClassSet, N: int = 1, m: Optional[int] = None
) -> SplittingData:
    if m is None:
        m = classset.m(ell)
    prec = 2 * m + valuation(N, ell) + 2
    A, B = find_splitting_seed(params, order, ell)
    A, B = lift_to(A, B, ell, seed_exponent(ell), n, params.eps, params.p)
    return assemble_splitting(ell, n, m, prec, A, B, order, classset)


def assemble_splitting(
    ell: int, n: int, m: int, prec: int, A: Mat, B: Mat, order: OrderBasis, classset: ClassSet
) -> SplittingData:
    S = basis_images(A, B, order, ell, n, prec)
    wm = ell**prec
    W = tuple(element_image(S, order, pt.at(ell, order.alg), wm) for pt in classset.local_gens)
    data = SplittingData(ell, n, m, prec, A, B, S, W)
    problems = verify_splitting(data, order, classset)
    if problems:
        raise SplittingError(f"splitting at {ell} failed verification: {problems}")
    return data


def verify_splitting(data: SplittingData, order: OrderBasis, classset: Optional[ClassSet] = None) -> list[str]:
    alg = order.alg
    problems = []
    if not relations_hold(data.A, data.B, alg.eps, alg.p, data.modulus):
        problems.append("A, B relations fail at full modulus")
    if not condition_holds(data.A, data.B, order, data.ell):
        problems.append("integrality condition fails")
    wm = data.working_modulus
    for s, S in zip(order.s, data.S):
        if (det(S) - s.nrd()) % wm:
            problems.append(f"det(S) != nrd({s})")
    if classset is not None:
        for pt, W in zip(classset.local_gens, data.W):
            w = pt.at(data.ell, alg)
            if (det(W) - w.nrd()) % wm:
                problems.append("det(W) != nrd(w)")
    return problems
