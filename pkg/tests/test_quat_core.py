from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quathecke.arith import isprime, legendre
from quathecke.quaternion import (
    AlgebraError,
    AlgebraParams,
    OrderBasis,
    build_algebra,
    conj,
    maximal_order_basis,
    mul,
    nrd,
    order_defects,
    reduced_discriminant,
    trd,
)

PRIMES_TO_200 = [p for p in range(2, 200) if isprime(p)]


def test_build_algebra_examples():
    assert build_algebra(11).eps == 1
    assert build_algebra(2).eps == 1
    a17 = build_algebra(17)
    assert (a17.eps, a17.r, a17.a) == (3, 3, 1)
    assert build_algebra(13).eps == 2


@pytest.mark.parametrize("p", [p for p in PRIMES_TO_200 if p % 8 == 1])
def test_smallest_auxiliary_prime(p):
    alg = build_algebra(p)
    r = alg.r
    assert r % 4 == 3 and legendre(r, p) == -1
    assert all(not (isprime(s) and s % 4 == 3 and legendre(s, p) == -1) for s in range(3, r))
    assert (alg.a * alg.a * p + 1) % r == 0
    assert all((b * b * p + 1) % r for b in range(0, alg.a))


def test_bad_parameters_rejected():
    with pytest.raises(AlgebraError):
        AlgebraParams(11, 2)
    with pytest.raises(AlgebraError):
        build_algebra(15)


def test_multiplication_table(alg11):
    i, j, ij, one = alg11.i, alg11.j, alg11.ij, alg11.one
    assert mul(i, j) == ij
    assert mul(j, i) == -ij
    assert mul(one + i, one - i) == 2 * one
    assert mul(i, i) == -1 * one
    assert mul(j, j) == -11 * one


def test_norm_form_in_order_coordinates(alg11, order11):
    t, x, y, z = (Fraction(v) for v in (3, -2, 5, 7))
    q = order11.element((t, x, y, z))
    expected = (t + z / 2) ** 2 + (x + y / 2) ** 2 + Fraction(11, 4) * y**2 + Fraction(11, 4) * z**2
    assert nrd(q) == expected
    assert nrd(alg11.one) == 1
    assert nrd(alg11.ij) == alg11.eps * alg11.p


def test_order_basis_p11(alg11, order11):
    half = Fraction(1, 2)
    i, j, ij, one = alg11.i, alg11.j, alg11.ij, alg11.one
    assert order11.s == (one, i, (i + ij) * half, (one + j) * half)
    assert reduced_discriminant(order11) == 11


def test_order_basis_p13():
    alg = build_algebra(13)
    O = maximal_order_basis(alg)
    assert nrd(O.s[1]) == 5
    assert reduced_discriminant(O) == 13


def test_non_maximal_order_discriminant(alg11):
    assert reduced_discriminant([alg11.one, alg11.i, alg11.j, alg11.ij]) == 44


def test_printed_p2_basis_is_rejected():
    alg = build_algebra(2)
    half = Fraction(1, 2)
    printed = OrderBasis(alg, ((alg.one + alg.i + alg.j + alg.ij) * half, alg.i, alg.j, alg.ij))
    assert order_defects(printed)
    assert reduced_discriminant(maximal_order_basis(alg)) == 2


@pytest.mark.parametrize("p", PRIMES_TO_200)
def test_maximal_order_for_all_small_primes(p):
    O = maximal_order_basis(build_algebra(p))
    assert not order_defects(O)
    assert O.integral_coordinates(O.alg.one) is not None
    assert reduced_discriminant(O) == p
    G = O.gram()
    # positive definite: leading principal minors positive
    from quathecke.quaternion import det4

    assert G[0][0] > 0
    assert G[0][0] * G[1][1] - G[0][1] * G[1][0] > 0
    assert det4(G) > 0


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
quad = st.tuples(rationals, rationals, rationals, rationals)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5, 11, 13, 17]), quad, quad)
def test_norm_and_trace_identities(p, cx, cy):
    alg = build_algebra(p)
    x, y = alg.element(*cx), alg.element(*cy)
    assert nrd(mul(x, y)) == nrd(x) * nrd(y)
    assert trd(x) * alg.one == x + conj(x)
    assert conj(mul(x, y)) == mul(conj(y), conj(x))
    assert nrd(x) >= 0
