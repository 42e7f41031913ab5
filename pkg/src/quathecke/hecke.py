"""Hecke operators on functions on the class set, with optional level and weight.

Convention: the (j, i) entry of T is T(1_i) evaluated at j, where
e(i, j, k) = 1 means g_k . w^j = w^i.  Each row of the integer matrix
ell0 * T therefore sums to ell0 + 1.

Level-1 entries come from solving nrd(M alpha) = K M^2 for M alpha in O
subject to local congruences.  The congruences are linear in the
coordinates of M alpha, so by default the solver enumerates the norm form
restricted to the sublattice they cut out; the plain enumerate-then-filter
path is kept as an oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import gcd
from typing import Optional, Sequence

from .arith import crt_pair, frac_valuation, inv_mod, prime_divisors, valuation
from .classes import ClassSet, left_ideal_classes
from .fields import Fp2, Fp2Elem, PrimeField
from .lattice import congruence_kernel, right_order, short_vectors, units
from .quaternion import OrderBasis, Quaternion, build_algebra, maximal_order_basis
from .splitting import (
    Mat,
    SplittingData,
    adj,
    compute_splitting,
    det,
    is_zero_mod,
    mmul,
    precision_plan,
    verify_splitting,
)

logger = logging.getLogger(__name__)

WITNESS_MODES = ("average", "first", "union")


class HeckeError(RuntimeError):
    pass


# ---------------------------------------------------------------- context


def coset_matrices(ell0: int) -> tuple[Mat, ...]:
    """(1 k; 0 ell0) for 0 <= k < ell0, then (ell0 0; 0 1)."""
    return tuple((1, k, 0, ell0) for k in range(ell0)) + ((ell0, 0, 0, 1),)


@dataclass(frozen=True)
class WitnessSolution:
    """M*alpha = t s^1 + x s^2 + y s^3 + z s^4."""

    coords: tuple[int, int, int, int]
    M: int
    order: OrderBasis = field(compare=False, repr=False)

    @property
    def scaled(self) -> Quaternion:
        return self.order.element(self.coords)

    @property
    def alpha(self) -> Quaternion:
        return self.scaled / self.M


@dataclass
class HeckeContext:
    classset: ClassSet
    ell0: int
    N: int
    splittings: dict[int, SplittingData]
    scaling: str = "tight"

    @property
    def order(self) -> OrderBasis:
        return self.classset.order

    @property
    def p(self) -> int:
        return self.classset.params.p

    @property
    def cosets(self) -> tuple[Mat, ...]:
        return coset_matrices(self.ell0)

    def w_val(self, idx: int, ell: int) -> int:
        return self.classset.local_gens[idx].valuation(ell)

    def V_ij(self, i: int, j: int) -> list[int]:
        gi, gj = self.classset.local_gens[i].gens, self.classset.local_gens[j].gens
        return sorted((set(gi) | set(gj)) - {self.p, self.ell0})


def build_context(classset: ClassSet, ell0: int, N: int = 1, scaling: str = "tight", store=None) -> HeckeContext:
    """Splittings for every prime in the precision plan.

    ``store`` is optional and needs ``splitting(ell, n, prec)`` and
    ``add_splitting(data)``; stored data is re-verified, never trusted.
    """
    if scaling not in ("tight", "paper"):
        raise ValueError("scaling must be 'tight' or 'paper'")
    plan = precision_plan(classset, N, ell0)
    sp = {}
    for ell in plan.V:
        n, m = plan.n(ell), plan.m(ell)
        prec = 2 * m + valuation(N, ell) + 2
        data = store.splitting(ell, n, prec) if store is not None else None
        if data is not None and (data.m != m or verify_splitting(data, classset.order, classset)):
            data = None
        if data is None:
            data = compute_splitting(ell, n, classset.params, classset.order, classset, N, m=m)
            if store is not None:
                store.add_splitting(data)
        sp[ell] = data
    return HeckeContext(classset, ell0, N, sp, scaling)


def compute_MK(i: int, j: int, classset: ClassSet, ell0: int, V: Optional[Sequence[int]] = None, scaling: str = "paper") -> tuple[int, Fraction]:
    """Scale M with M*alpha in O and the target norm K of alpha.

    "paper" uses ell0 * prod ell^{m_ell} with the global m_ell; "tight" uses
    prod ell^{max(v(w^i), v(w^j))} with no extra ell0, which is what the
    worked example does and still guarantees M*alpha in O.
    """
    p = classset.params.p
    gi, gj = classset.local_gens[i], classset.local_gens[j]
    if V is None:
        V = sorted((set(gi.gens) | set(gj.gens)) - {p, ell0})
    primes = sorted(set(V) | {p, ell0})
    M = 1 if scaling == "tight" else ell0
    K = Fraction(ell0)
    for ell in primes:
        vi, vj = gi.valuation(ell), gj.valuation(ell)
        if scaling == "tight":
            M *= ell ** max(vi, vj, 0)
        else:
            M *= ell ** classset.m(ell)
        K *= Fraction(ell) ** (vj - vi)
    return M, K


def solve_norm_equation(order: OrderBasis, target) -> list[tuple[int, int, int, int]]:
    """Every integer coordinate vector of O with reduced norm == target."""
    return short_vectors(order.gram(), Fraction(target))


# ---------------------------------------------------------------- congruences


def _unit_prefix(ctx: HeckeContext, ell: int, i: int, j: int, k: Optional[int]):
    """(W^i, post, mod) where post = adj(W^j) [* adj(g_k) at ell0]."""
    sp = ctx.splittings.get(ell)
    if sp is None:
        raise HeckeError(f"missing splitting at {ell}")
    mod = sp.working_modulus
    Wi, Wj = sp.W[i], sp.W[j]
    post = tuple(x % mod for x in adj(Wj))
    if ell == ctx.ell0:
        if k is None:
            raise HeckeError("coset index required at ell0")
        post = mmul(post, tuple(x % mod for x in adj(ctx.cosets[k])), mod)
    return Wi, post, mod


def congruence_exponent(ctx: HeckeContext, ell: int, i: int, j: int, M: int) -> int:
    e = valuation(M, ell) + ctx.w_val(j, ell)
    if ell == ctx.ell0:
        e += 1
    return e


def check_congruences(coords: Sequence[int], i: int, j: int, k: int, ctx: HeckeContext, M: int) -> bool:
    """Local conditions at every ell in V_ij and at ell0 for M*alpha given by coords."""
    for ell in ctx.V_ij(i, j) + [ctx.ell0]:
        Wi, post, mod = _unit_prefix(ctx, ell, i, j, k)
        sp = ctx.splittings[ell]
        X = mmul(mmul(Wi, sp.image(coords), mod), post, mod)
        e = congruence_exponent(ctx, ell, i, j, M)
        if e > sp.prec:
            raise HeckeError(f"precision {sp.prec} too small for exponent {e} at {ell}")
        if not is_zero_mod(X, ell**e):
            return False
    return True


def congruence_forms(i: int, j: int, k: int, ctx: HeckeContext, M: int) -> list[tuple[list[int], int]]:
    """The same conditions as linear forms on (t, x, y, z) with their moduli."""
    forms = []
    for ell in ctx.V_ij(i, j) + [ctx.ell0]:
        Wi, post, mod = _unit_prefix(ctx, ell, i, j, k)
        sp = ctx.splittings[ell]
        e = congruence_exponent(ctx, ell, i, j, M)
        m = ell**e
        prods = [mmul(mmul(Wi, S, mod), post, mod) for S in sp.S]
        for entry in range(4):
            forms.append(([P[entry] % m for P in prods], m))
    return forms


# ---------------------------------------------------------------- level 1


def _target(ctx: HeckeContext, i: int, j: int) -> tuple[int, int]:
    M, K = compute_MK(i, j, ctx.classset, ctx.ell0, ctx.V_ij(i, j), ctx.scaling)
    T = K * M * M
    if T.denominator != 1:
        raise HeckeError(f"K*M^2 = {T} is not an integer")
    return M, int(T)


def e_level1(i: int, j: int, k: int, ctx: HeckeContext, method: str = "sublattice") -> tuple[int, list[WitnessSolution]]:
    """e(i, j, k) with every passing witness."""
    M, target = _target(ctx, i, j)
    order = ctx.order
    if method == "naive":
        sols = [v for v in solve_norm_equation(order, target) if check_congruences(v, i, j, k, ctx, M)]
    elif method == "sublattice":
        basis = congruence_kernel(congruence_forms(i, j, k, ctx, M))
        G = order.gram()
        sub = [[sum(Fraction(basis[a][r]) * G[r][s] * basis[b][s] for r in range(4) for s in range(4)) for b in range(4)] for a in range(4)]
        sols = []
        for c in short_vectors(sub, target):
            sols.append(tuple(sum(c[a] * basis[a][r] for a in range(4)) for r in range(4)))
        sols.sort()
    else:
        raise ValueError(f"unknown method {method!r}")
    wit = [WitnessSolution(tuple(v), M, order) for v in sols]
    return (1 if wit else 0), wit


@dataclass(frozen=True)
class HeckeMatrix:
    """Square matrix with the (output, input) orientation described above."""

    p: int
    ell0: int
    N: int
    weight: Optional[int]
    index: tuple
    entries: tuple[tuple, ...]
    integer: Optional[tuple[tuple[int, ...], ...]] = None
    field_name: str = "Fp"

    @property
    def size(self) -> int:
        return len(self.index)

    def rows(self) -> list[list]:
        return [list(r) for r in self.entries]


def level1_counts(ctx: HeckeContext, method: str = "sublattice") -> tuple[list[list[int]], dict]:
    """Integer matrix ell0*T (row j, column i) and the witness table."""
    h = ctx.classset.h
    counts = [[0] * h for _ in range(h)]
    table = {}
    for j in range(h):
        for k in range(ctx.ell0 + 1):
            hits = []
            for i in range(h):
                e, wit = e_level1(i, j, k, ctx, method)
                if e:
                    hits.append(i)
                    table[(i, j, k)] = wit
                    counts[j][i] += 1
            if len(hits) != 1:
                raise HeckeError(f"coset {k} of class {j} landed in {len(hits)} classes")
    return counts, table


def hecke_matrix_level1(
    p: int, ell0: int, classset: Optional[ClassSet] = None, method: str = "sublattice", ctx: Optional[HeckeContext] = None
) -> HeckeMatrix:
    if ctx is None:
        if classset is None:
            alg = build_algebra(p)
            classset = left_ideal_classes(maximal_order_basis(alg))
        if gcd(ell0, p) != 1:
            raise ValueError("ell0 must be coprime to p")
        ctx = build_context(classset, ell0, 1)
    counts, _ = level1_counts(ctx, method)
    inv = pow(ell0, -1, p)
    entries = tuple(tuple(c * inv % p for c in row) for row in counts)
    return HeckeMatrix(p, ell0, 1, 0, tuple(range(ctx.classset.h)), entries, tuple(map(tuple, counts)))


# ---------------------------------------------------------------- residues


def residue_Qp(alpha: Quaternion, i: int, j: int, classset: ClassSet, F: Fp2) -> Fp2Elem:
    """w_p^i alpha (w_p^j)^{-1} reduced modulo j, as s + t i in F_{p^2}."""
    p = classset.params.p
    alg = classset.params
    wi = classset.local_gens[i].at(p, alg)
    wj = classset.local_gens[j].at(p, alg)
    Q = wi * alpha * wj.inverse()
    c0, c1 = Q.c[0], Q.c[1]
    for c in Q.c:
        if c.denominator % p == 0:
            raise HeckeError("witness is not integral at p")
    s = c0.numerator * inv_mod(c0.denominator, p) % p
    t = c1.numerator * inv_mod(c1.denominator, p) % p
    if s == 0 and t == 0:
        raise HeckeError("witness is not a unit at p")
    return Fp2Elem(s, t)


def _level_residue(coords: Sequence[int], M: int, i: int, j: int, ell: int, ctx: HeckeContext) -> Mat:
    vN = valuation(ctx.N, ell)
    if vN == 0:
        raise HeckeError(f"{ell} does not divide the level")
    sp = ctx.splittings[ell]
    mod = sp.working_modulus
    X = mmul(mmul(sp.W[i], sp.image(coords), mod), tuple(x % mod for x in adj(sp.W[j])), mod)
    wj = ctx.classset.local_gens[j].at(ell, ctx.classset.params)
    scale = Fraction(M) * wj.nrd()
    e = frac_valuation(scale, ell)
    if e < 0 or e + vN > sp.prec:
        raise HeckeError("precision too small for the level residue")
    if not is_zero_mod(X, ell**e):
        raise HeckeError("level residue is not integral; congruences were not met")
    unit = scale / Fraction(ell) ** e
    target = ell**vN
    u = unit.numerator * inv_mod(unit.denominator, target) % target
    ui = inv_mod(u, target)
    Q = tuple((x // ell**e) * ui % target for x in X)
    if gcd(det(Q), ell) != 1:
        raise HeckeError("level residue is not invertible")
    return Q


def residue_Ql(wit: WitnessSolution, i: int, j: int, ell: int, ctx: HeckeContext) -> Mat:
    """W^i (M alpha) adj(W^j) / (M nrd w^j) modulo ell^{v_ell(N)}."""
    return _level_residue(wit.coords, wit.M, i, j, ell, ctx)


def _combine_levels(coords: Sequence[int], M: int, i: int, j: int, ctx: HeckeContext) -> Mat:
    N = ctx.N
    if N == 1:
        return (0, 0, 0, 0)
    out = [0, 0, 0, 0]
    mod = 1
    for ell in prime_divisors(N):
        Q = _level_residue(coords, M, i, j, ell, ctx)
        m = ell ** valuation(N, ell)
        for a in range(4):
            out[a], _ = crt_pair(out[a], mod, Q[a], m)
        mod *= m
    return tuple(x % N for x in out)


def residue_QN(wit: WitnessSolution, i: int, j: int, ctx: HeckeContext) -> Mat:
    """CRT-combined residue in GL_2(Z/N); the zero matrix stands for N = 1."""
    return _combine_levels(wit.coords, wit.M, i, j, ctx)


def stabilizer_action(ctx: HeckeContext, F: Fp2, i: int) -> list[tuple[Fp2Elem, Mat]]:
    """Residues of the right-order units of class i.

    Labels (mu, gamma) and (mu*q, gamma*Q) name the same point of the
    level-N class set whenever (q, Q) is in this list.
    """
    cs = ctx.classset
    R = right_order(cs.reps[i])
    out = {}
    for beta in units(R):
        co = cs.order.coordinates(beta)
        M = 1
        for c in co:
            M = M * c.denominator // gcd(M, c.denominator)
        coords = tuple(int(c * M) for c in co)
        key = (residue_Qp(beta, i, i, cs, F), _combine_levels(coords, M, i, i, ctx))
        out.setdefault(key, None)
    return sorted(out)


# ---------------------------------------------------------------- GL_2(Z/N)


def gl2_elements(N: int) -> list[Mat]:
    """Invertible 2x2 matrices mod N in lexicographic order of (a, b, c, d)."""
    if N == 1:
        return [(0, 0, 0, 0)]
    return [g for g in product(range(N), repeat=4) if gcd((g[0] * g[3] - g[1] * g[2]) % N, N) == 1]


def gl2_order(N: int) -> int:
    out = 1
    for ell in prime_divisors(N):
        e = valuation(N, ell)
        out *= ell ** (4 * (e - 1)) * (ell * ell - 1) * (ell * ell - ell)
    return out


# ---------------------------------------------------------------- general level


@dataclass(frozen=True)
class Term:
    """1_{(i, mu, gamma)} contributes weight * 1_{(j, mu*q, gamma*Q)}."""

    weight: Fraction
    q: Fp2Elem
    Q: Mat


@dataclass
class GeneralHecke:
    """T_ell0 on functions of (class, mu in F_{p^2}^x, gamma in GL_2(Z/N)).

    Stored as permutation terms per (row block j, column block i); the
    dense matrix is available for small sizes.
    """

    p: int
    N: int
    ell0: int
    h: int
    field: Fp2
    blocks: dict[tuple[int, int], list[Term]]
    mode: str
    image_counts: dict[tuple[int, int, int], int]
    first_images: dict[tuple[int, int, int], tuple[Fp2Elem, Mat]] = field(default_factory=dict)
    stabilizers: dict[int, list[tuple[Fp2Elem, Mat]]] = field(default_factory=dict)

    @cached_property
    def mus(self) -> list[Fp2Elem]:
        return self.field.units()

    @cached_property
    def gammas(self) -> list[Mat]:
        return gl2_elements(self.N)

    @cached_property
    def _mu_index(self) -> dict:
        return {m: a for a, m in enumerate(self.mus)}

    @cached_property
    def _gamma_index(self) -> dict:
        return {g: a for a, g in enumerate(self.gammas)}

    @property
    def fiber(self) -> int:
        return len(self.mus) * len(self.gammas)

    @property
    def dim(self) -> int:
        return self.h * self.fiber

    def index_of(self, j: int, mu: Fp2Elem, gamma: Mat) -> int:
        return (j * len(self.mus) + self._mu_index[mu]) * len(self.gammas) + self._gamma_index[gamma]

    def index_list(self) -> list[tuple]:
        return [(j, mu, g) for j in range(self.h) for mu in self.mus for g in self.gammas]

    def _gamma_perm(self, Q: Mat) -> list[int]:
        if self.N == 1:
            return [0]
        N = self.N
        idx = self._gamma_index
        return [idx[tuple(x % N for x in mmul(g, Q, N))] for g in self.gammas]

    def _mu_perm(self, q: Fp2Elem) -> list[int]:
        idx = self._mu_index
        return [idx[self.field.mul(m, q)] for m in self.mus]

    def weight_mod_p(self, w: Fraction) -> int:
        return w.numerator * inv_mod(w.denominator, self.p) % self.p * inv_mod(self.ell0, self.p) % self.p

    def apply(self, vec: Sequence[int]) -> list[int]:
        """T applied to a column vector over F_p (entries ell0^{-1} * weights)."""
        p = self.p
        nm, ng = len(self.mus), len(self.gammas)
        out = [0] * self.dim
        for (j, i), terms in self.blocks.items():
            for term in terms:
                w = self.weight_mod_p(term.weight)
                mp = self._mu_perm(term.q)
                gp = self._gamma_perm(term.Q)
                for a in range(nm):
                    src = (i * nm + a) * ng
                    dst = (j * nm + mp[a]) * ng
                    for b in range(ng):
                        x = vec[src + b]
                        if x:
                            d = dst + gp[b]
                            out[d] = (out[d] + w * x) % p
        return out

    def column_entries(self, c: int) -> list[tuple[int, int]]:
        """Nonzero (row, value) pairs of column c, sorted by row."""
        nm, ng = len(self.mus), len(self.gammas)
        i, rest = divmod(c, nm * ng)
        a, b = divmod(rest, ng)
        acc: dict[int, int] = {}
        for (j, ii), terms in self.blocks.items():
            if ii != i:
                continue
            for term in terms:
                mu = self.field.mul(self.mus[a], term.q)
                g = self.gammas[b] if self.N == 1 else tuple(x % self.N for x in mmul(self.gammas[b], term.Q, self.N))
                r = self.index_of(j, mu, g)
                acc[r] = (acc.get(r, 0) + self.weight_mod_p(term.weight)) % self.p
        return sorted((r, v) for r, v in acc.items() if v)

    def to_dense(self, limit: int = 5000) -> list[list[int]]:
        if self.dim > limit:
            raise HeckeError(f"dense matrix of size {self.dim} exceeds limit {limit}")
        cols = []
        for c in range(self.dim):
            e = [0] * self.dim
            e[c] = 1
            cols.append(self.apply(e))
        return [[cols[c][r] for c in range(self.dim)] for r in range(self.dim)]

    def block_weight_sums(self) -> list[list[Fraction]]:
        """Sum of term weights per (j, i): the action on U-invariant vectors."""
        out = [[Fraction(0)] * self.h for _ in range(self.h)]
        for (j, i), terms in self.blocks.items():
            out[j][i] += sum((t.weight for t in terms), Fraction(0))
        return out

    def row_sums(self) -> list[Fraction]:
        """Every fiber term is a permutation, so T(1) on block j is this sum."""
        out = [Fraction(0)] * self.h
        for (j, i), terms in self.blocks.items():
            out[j] += sum((t.weight for t in terms), Fraction(0))
        return out

    def invariant_projection(self) -> list[list[int]]:
        """Matrix of T on block-constant vectors, over F_p."""
        return [[self.weight_mod_p(x) for x in row] for row in self.block_weight_sums()]

    # -- the quotient by unit-induced label collisions

    @cached_property
    def orbits(self) -> tuple[list[int], list[tuple[int, int]]]:
        """(orbit id per flat index, representative flat index per orbit)."""
        nm, ng = len(self.mus), len(self.gammas)
        label = [-1] * self.dim
        reps = []
        for i in range(self.h):
            acts = [(self._mu_perm(q), self._gamma_perm(Q)) for q, Q in self.stabilizers.get(i, [])]
            for a in range(nm):
                for b in range(ng):
                    x = (i * nm + a) * ng + b
                    if label[x] >= 0:
                        continue
                    oid = len(reps)
                    reps.append((i, x))
                    for mp, gp in acts or [(list(range(nm)), list(range(ng)))]:
                        label[(i * nm + mp[a]) * ng + gp[b]] = oid
        return label, reps

    def orbit_counts(self) -> list[list[int]]:
        """Integer matrix ell0*T on indicator functions of level-N points.

        Entry (y, x) counts cosets k with g_k . y = x; it uses one witness
        per cell since the orbit it lands in does not depend on the choice.
        """
        if not self.stabilizers and self.h:
            raise HeckeError("stabilizer data missing")
        label, reps = self.orbits
        nm, ng = len(self.mus), len(self.gammas)
        n = len(reps)
        out = [[0] * n for _ in range(n)]
        F = self.field
        for (i, j, k), (q, Q) in self.first_images.items():
            qi = F.inv(q)
            Qi = _gl2_inverse(Q, self.N)
            for oid, (blk, x) in enumerate(reps):
                if blk != j:
                    continue
                a, b = divmod(x - j * nm * ng, ng)
                mu = F.mul(self.mus[a], qi)
                g = self.gammas[b] if self.N == 1 else tuple(v % self.N for v in mmul(self.gammas[b], Qi, self.N))
                src = self.index_of(i, mu, g)
                out[oid][label[src]] += 1
        return out

    def orbit_matrix(self) -> list[list[int]]:
        inv = inv_mod(self.ell0, self.p)
        return [[c * inv % self.p for c in row] for row in self.orbit_counts()]


def _gl2_inverse(Q: Mat, N: int) -> Mat:
    if N == 1:
        return Q
    di = inv_mod(det(Q) % N, N)
    return tuple(x * di % N for x in adj(Q))


def _images(ctx: HeckeContext, F: Fp2, i: int, j: int, wits: list[WitnessSolution]) -> list[tuple[Fp2Elem, Mat]]:
    seen = {}
    for w in wits:
        key = (residue_Qp(w.alpha, i, j, ctx.classset, F), residue_QN(w, i, j, ctx))
        seen.setdefault(key, None)
    return list(seen)


def hecke_matrix_general(
    p: int,
    N: int,
    ell0: int,
    classset: Optional[ClassSet] = None,
    witness_mode: str = "average",
    method: str = "sublattice",
    ctx: Optional[HeckeContext] = None,
) -> GeneralHecke:
    """Level-N operator on the full (class, mu, gamma) index set.

    witness_mode:
      average - each distinct image of a coset gets weight 1/#images
      first   - only the lexicographically first witness is used
      union   - each distinct image gets weight 1
    "average" falls back to "first" when p divides an image count.
    """
    if witness_mode not in WITNESS_MODES:
        raise ValueError(f"witness_mode must be one of {WITNESS_MODES}")
    if p == 2:
        raise ValueError("the level/weight path needs odd p; use the level-1 matrix for p = 2")
    if ctx is None:
        if classset is None:
            classset = left_ideal_classes(maximal_order_basis(build_algebra(p)))
        ctx = build_context(classset, ell0, N)
    cs = ctx.classset
    F = Fp2(p, cs.params.eps)
    _, table = level1_counts(ctx, method)
    images = {key: _images(ctx, F, key[0], key[1], wits) for key, wits in table.items()}
    counts = {key: len(v) for key, v in images.items()}
    mode = witness_mode
    if mode == "average" and any(c % p == 0 for c in counts.values()):
        logger.warning("p divides an image count; falling back to witness_mode='first'")
        mode = "first"
    blocks: dict[tuple[int, int], list[Term]] = {}
    first = {}
    for key, wits in sorted(table.items()):
        w0 = wits[0]
        first[key] = (residue_Qp(w0.alpha, key[0], key[1], cs, F), residue_QN(w0, key[0], key[1], ctx))
    for (i, j, k), imgs in sorted(images.items()):
        if mode == "first":
            chosen = [first[(i, j, k)]]
            wt = Fraction(1)
        elif mode == "average":
            chosen, wt = imgs, Fraction(1, len(imgs))
        else:
            chosen, wt = imgs, Fraction(1)
        blocks.setdefault((j, i), []).extend(Term(wt, q, Q) for q, Q in chosen)
    stabs = {i: stabilizer_action(ctx, F, i) for i in range(cs.h)}
    return GeneralHecke(p, N, ell0, cs.h, F, blocks, mode, counts, first, stabs)


def weight_k_matrix(general: GeneralHecke, k: int) -> HeckeMatrix:
    """Matrix on f_{i,gamma} = sum_mu mu^{-k} 1_{(i,mu,gamma)}; entries in F_{p^2}.

    k is taken modulo p^2 - 1 (mu^{p^2-1} = 1), so any k >= 0 is accepted.
    """
    if k < 0:
        raise ValueError("weight must be non-negative")
    F = general.field
    kk = k % (F.size - 1)
    gammas = general.gammas
    ng = len(gammas)
    n = general.h * ng
    A = [[F.zero] * n for _ in range(n)]
    for (j, i), terms in general.blocks.items():
        for term in terms:
            w = general.weight_mod_p(term.weight)
            coeff = F.mul(F.coerce(w), F.pow(term.q, kk))
            perm = general._gamma_perm(term.Q)
            for b in range(ng):
                r, c = j * ng + perm[b], i * ng + b
                A[r][c] = F.add(A[r][c], coeff)
    index = tuple((j, g) for j in range(general.h) for g in gammas)
    return HeckeMatrix(general.p, general.ell0, general.N, k, index, tuple(map(tuple, A)), None, "Fp2")
