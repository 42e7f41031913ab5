"""Dense linear algebra over a finite field object from ``fields``.

Matrices are lists of rows.  Polynomials are coefficient lists, lowest
degree first, always monic when returned by char_poly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import _ffarray
from .fields import Fp2, PrimeField


class LinalgError(ValueError):
    pass


def coerce_matrix(F, M) -> list[list]:
    return [[F.coerce(x) for x in row] for row in M]


def identity(F, n: int) -> list[list]:
    return [[F.one if a == b else F.zero for b in range(n)] for a in range(n)]


def matmul(F, X, Y) -> list[list]:
    if X and _ffarray.supported(F, max(len(X), len(Y))):
        return _ffarray.dense_matmul(F, X, Y)
    n, m, q = len(X), len(Y), len(Y[0]) if Y else 0
    out = []
    for a in range(n):
        row = [F.zero] * q
        Xa = X[a]
        for b in range(m):
            x = Xa[b]
            if F.is_zero(x):
                continue
            Yb = Y[b]
            for c in range(q):
                if not F.is_zero(Yb[c]):
                    row[c] = F.add(row[c], F.mul(x, Yb[c]))
        out.append(row)
    return out


def matsub(F, X, Y) -> list[list]:
    return [[F.sub(x, y) for x, y in zip(rx, ry)] for rx, ry in zip(X, Y)]


def scalar_shift(F, M, lam) -> list[list]:
    """M - lam * I."""
    return [[F.sub(x, lam) if a == b else x for b, x in enumerate(row)] for a, row in enumerate(M)]


def is_zero_matrix(F, M) -> bool:
    return all(F.is_zero(x) for row in M for x in row)


def row_echelon(F, M) -> tuple[list[list], list[int]]:
    """Reduced row echelon form and pivot columns."""
    if M and _ffarray.supported(F, max(len(M), len(M[0]))):
        return _ffarray.row_echelon(F, M)
    A = [list(r) for r in M]
    rows = len(A)
    cols = len(A[0]) if A else 0
    pivots = []
    top = 0
    for c in range(cols):
        piv = next((r for r in range(top, rows) if not F.is_zero(A[r][c])), None)
        if piv is None:
            continue
        A[top], A[piv] = A[piv], A[top]
        inv = F.inv(A[top][c])
        A[top] = [F.mul(x, inv) for x in A[top]]
        for r in range(rows):
            if r != top and not F.is_zero(A[r][c]):
                f = A[r][c]
                A[r] = [F.sub(x, F.mul(f, y)) for x, y in zip(A[r], A[top])]
        pivots.append(c)
        top += 1
        if top == rows:
            break
    return A, pivots


def rank(F, M) -> int:
    return len(row_echelon(F, M)[1]) if M else 0


def kernel(F, M) -> list[list]:
    """Basis of {v : M v = 0} as a list of column vectors (plain lists)."""
    n = len(M[0]) if M else 0
    R, pivots = row_echelon(F, M)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [F.zero] * n
        v[f] = F.one
        for r, c in enumerate(pivots):
            v[c] = F.neg(R[r][f])
        basis.append(v)
    return basis


# ---------------------------------------------------------------- polynomials


def poly_eval(F, poly: Sequence, x):
    acc = F.zero
    for c in reversed(poly):
        acc = F.add(F.mul(acc, x), c)
    return acc


def poly_divide_linear(F, poly: Sequence, root) -> list:
    """Quotient of poly by (X - root); caller guarantees exact division."""
    n = len(poly) - 1
    q = [F.zero] * n
    acc = F.zero
    for d in range(n, 0, -1):
        acc = F.add(F.mul(acc, root), poly[d])
        q[d - 1] = acc
    return q


def poly_matrix_eval(F, poly: Sequence, M) -> list[list]:
    n = len(M)
    acc = [[F.zero] * n for _ in range(n)]
    for c in reversed(poly):
        acc = matmul(F, acc, M)
        for a in range(n):
            acc[a][a] = F.add(acc[a][a], c)
    return acc


def hessenberg(F, M) -> list[list]:
    """Upper Hessenberg form by similarity transforms."""
    if _ffarray.supported(F, len(M)):
        return _ffarray.hessenberg(F, M)
    A = [list(r) for r in M]
    n = len(A)
    for c in range(n - 2):
        piv = next((r for r in range(c + 1, n) if not F.is_zero(A[r][c])), None)
        if piv is None:
            continue
        if piv != c + 1:
            A[piv], A[c + 1] = A[c + 1], A[piv]
            for row in A:
                row[piv], row[c + 1] = row[c + 1], row[piv]
        inv = F.inv(A[c + 1][c])
        for r in range(c + 2, n):
            f = F.mul(A[r][c], inv)
            if F.is_zero(f):
                continue
            A[r] = [F.sub(x, F.mul(f, y)) for x, y in zip(A[r], A[c + 1])]
            for row in A:
                row[c + 1] = F.add(row[c + 1], F.mul(f, row[r]))
    return A


def char_poly(F, M) -> list:
    """Monic characteristic polynomial det(X*I - M), lowest degree first."""
    n = len(M)
    if any(len(r) != n for r in M):
        raise LinalgError("matrix is not square")
    H = hessenberg(F, coerce_matrix(F, M))
    polys = [[F.one]]  # p_0 = 1
    for k in range(1, n + 1):
        # p_k = (X - h_kk) p_{k-1} - sum_{m<k} h_{m,k} * prod h_{sub} * p_{m-1}
        prev = polys[k - 1]
        cur = [F.zero] + list(prev)
        hkk = H[k - 1][k - 1]
        for d in range(len(prev)):
            cur[d] = F.sub(cur[d], F.mul(hkk, prev[d]))
        prod = F.one
        for m in range(k - 1, 0, -1):
            prod = F.mul(prod, H[m][m - 1])
            if F.is_zero(prod):
                break
            coef = F.mul(prod, H[m - 1][k - 1])
            if F.is_zero(coef):
                continue
            for d, c in enumerate(polys[m - 1]):
                cur[d] = F.sub(cur[d], F.mul(coef, c))
        polys.append(cur)
    return polys[n]


def lift_to_fp2(F2: Fp2, M) -> list[list]:
    return [[F2.coerce(x) for x in row] for row in M]


def eigenvalues(F, M) -> list:
    """Roots of the characteristic polynomial lying in F, with multiplicity,
    found by scanning every field element in the field's canonical order."""
    poly = char_poly(F, coerce_matrix(F, M))
    out = []
    for x in F.elements():
        while len(poly) > 1 and F.is_zero(poly_eval(F, poly, x)):
            out.append(x)
            poly = poly_divide_linear(F, poly, x)
    return out


def eigenvalues_fp2(F2: Fp2, M) -> list:
    """Eigenvalues in F_{p^2} of a matrix over F_p or F_{p^2}, sorted by (s, t)."""
    return eigenvalues(F2, lift_to_fp2(F2, M))


# ---------------------------------------------------------------- simultaneous


@dataclass(frozen=True)
class Eigensystem:
    values: tuple
    multiplicity: int
    semisimple: bool = True
    vectors: tuple = field(default=(), compare=False)


def commutes(F, X, Y) -> bool:
    return is_zero_matrix(F, matsub(F, matmul(F, X, Y), matmul(F, Y, X)))


def _restrict(F, M, basis: list[list]) -> list[list]:
    """Matrix of M on the invariant subspace spanned by the given columns."""
    d = len(basis)
    n = len(M)
    # solve basis * R = M * basis using a pivot set of rows
    B = [[basis[c][r] for c in range(d)] for r in range(n)]  # n x d
    MB = matmul(F, M, B)
    aug = [B[r] + MB[r] for r in range(n)]
    R, pivots = row_echelon(F, aug)
    if pivots[:d] != list(range(d)) or any(p >= d for p in pivots):
        raise LinalgError("subspace is not invariant under the matrix")
    return [R[r][d:] for r in range(d)]


def _span_product(F, basis: list[list], coords: list[list]) -> list[list]:
    """Columns basis * c for each coordinate column c."""
    if not coords:
        return []
    return matmul(F, coords, basis)


def simultaneous_eigensystems(F2, matrices: Sequence) -> tuple[list[Eigensystem], int]:
    """Joint generalized eigenspaces of commuting matrices over the field F2
    (normally F_{p^2}; any field object from ``fields`` works).

    Returns the systems in lexicographic order of their value tuples and the
    dimension left over because some eigenvalues lie outside the field.
    """
    mats = [coerce_matrix(F2, M) for M in matrices]
    if not mats:
        return [], 0
    n = len(mats[0])
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            if not commutes(F2, mats[a], mats[b]):
                raise LinalgError(f"matrices {a} and {b} do not commute")
    found: list[Eigensystem] = []

    def rec(restricted: list, basis: list[list], values: tuple, semisimple: bool):
        d = len(basis)
        if not restricted:
            found.append(Eigensystem(values, d, semisimple, tuple(tuple(v) for v in basis)))
            return
        M = restricted[0]
        roots = eigenvalues(F2, M)
        for lam in sorted(set(roots)):
            alg_mult = roots.count(lam)
            shifted = scalar_shift(F2, M, lam)
            power = shifted
            gen = kernel(F2, power)
            geo = len(gen)
            while len(gen) < alg_mult:
                power = matmul(F2, power, shifted)
                gen = kernel(F2, power)
            ss = semisimple and geo == len(gen)
            sub_basis = _span_product(F2, basis, gen)
            rest = [_restrict(F2, X, gen) for X in restricted[1:]]
            rec(rest, sub_basis, values + (lam,), ss)

    rec(mats, identity(F2, n), (), True)
    found.sort(key=lambda e: e.values)
    leftover = n - sum(e.multiplicity for e in found)
    return found, leftover
