from fractions import Fraction
import random
from math import isqrt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import classset_for, p11_ideal_basis
from quathecke.classes import eichler_mass, neighbor_prime, neighbors, verify_class_set
from quathecke.lattice import (
    conjugate_ideal,
    ideal_nrd,
    ideal_product,
    is_isomorphic,
    lattice_from_generators,
    order_lattice,
    right_multiply,
    right_order,
    short_vectors,
    short_vectors_box,
    unit_count,
    units,
)


@pytest.fixture(scope="module")
def I2(alg11, order11):
    return lattice_from_generators(p11_ideal_basis(alg11), order11)


def test_order_lattice_is_identity(order11):
    O = order_lattice(order11)
    assert O.denominator == 1
    assert O.hnf == tuple(tuple(int(a == b) for b in range(4)) for a in range(4))


def test_second_class_ideal(I2, alg11, order11):
    assert I2.index_in_order() == 4
    assert ideal_nrd(I2) == 2
    assert I2.is_left_ideal()
    gens = p11_ideal_basis(alg11)
    assert lattice_from_generators(gens + gens, order11) == I2
    assert ideal_nrd(order_lattice(order11)) == 1
    assert conjugate_ideal(conjugate_ideal(I2)) == I2


def test_short_vectors_examples(order11):
    G = order11.gram()
    assert short_vectors(G, 2) == sorted([(1, 1, 0, 0), (1, -1, 0, 0), (-1, 1, 0, 0), (-1, -1, 0, 0)])
    assert short_vectors(G, 0) == [(0, 0, 0, 0)]


def test_isomorphism_examples(I2, alg11, order11):
    O = order_lattice(order11)
    ok, w = is_isomorphic(O, O)
    assert ok and right_multiply(O, w) == O
    assert is_isomorphic(O, I2) == (False, None)
    J = right_multiply(I2, alg11.one + alg11.i)
    ok, w = is_isomorphic(I2, J)
    assert ok and right_multiply(I2, w) == J


def test_right_orders_and_units(I2, alg11, order11):
    O = order_lattice(order11)
    assert right_order(O) == O
    counts = {unit_count(O), unit_count(right_order(I2))}
    assert counts == {4, 6}
    for R in (O, right_order(I2)):
        us = units(R)
        assert alg11.one in us and -1 * alg11.one in us
    alpha = alg11.one + alg11.i
    lhs = right_order(right_multiply(I2, alpha))
    rhs = lattice_from_generators([alpha.inverse() * x * alpha for x in right_order(I2).basis], order11)
    assert lhs == rhs


def test_hurwitz_unit_count():
    cs = classset_for(2)
    assert cs.unit_orders == (24,)


@pytest.mark.parametrize("p,h", [(2, 1), (3, 1), (5, 1), (7, 1), (13, 1), (11, 2), (23, 3)])
def test_class_numbers(p, h):
    cs = classset_for(p)
    assert cs.h == h
    assert cs.mass() == eichler_mass(p)
    assert verify_class_set(cs) == []


def test_unit_orders_p23():
    assert sorted(classset_for(23).unit_orders) == [2, 4, 6]


def test_local_generators_p11(cs11, alg11):
    assert cs11.local_gens[0].gens == {}
    half = Fraction(1, 2)
    assert cs11.local_gens[1].gens == {2: alg11.element(1, Fraction(-3, 2), 0, -half)}
    assert cs11.m(2) == 1 and cs11.m(3) == 0 and cs11.m(11) == 0


@pytest.mark.parametrize("p", [23, 37])
def test_isomorphism_is_an_equivalence(p):
    cs = classset_for(p)
    O = order_lattice(cs.order)
    sample = neighbors(O, neighbor_prime(p))[:5]
    for I in sample:
        ok, w = is_isomorphic(I, I)
        assert ok
    for I in sample:
        for J in sample:
            ok, w = is_isomorphic(I, J)
            back, w2 = is_isomorphic(J, I)
            assert ok == back
            if ok:
                assert right_multiply(I, w) == J and right_multiply(J, w2) == I
    for I in sample:
        for J in sample:
            for K in sample:
                if is_isomorphic(I, J)[0] and is_isomorphic(J, K)[0]:
                    assert is_isomorphic(I, K)[0]


unimodular_ops = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3)), max_size=8)


@settings(max_examples=40, deadline=None)
@given(unimodular_ops, st.permutations(range(4)))
def test_canonical_form_invariance(ops, perm):
    cs = classset_for(11)
    I = cs.reps[1]
    gens = list(I.basis)
    for a, b, c in ops:
        if a != b:
            gens[a] = gens[a] + gens[b] * c
    gens = [gens[k] for k in perm]
    assert lattice_from_generators(gens, cs.order) == I


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12))
def test_short_vectors_match_box_search(seed, target):
    rnd = random.Random(seed)
    # random positive definite integral form = B^T B + diagonal shift
    B = [[rnd.randint(-2, 2) for _ in range(4)] for _ in range(4)]
    G = [[Fraction(sum(B[k][a] * B[k][b] for k in range(4)) + (a == b)) for b in range(4)] for a in range(4)]
    # G >= I, so q(v) = target forces |v_a| <= isqrt(target)
    assert short_vectors(G, target) == sorted(short_vectors_box(G, target, isqrt(target)))


def test_ideal_product_norm_multiplicative(cs11):
    I = cs11.reps[1]
    assert ideal_nrd(ideal_product(I, conjugate_ideal(I))) == ideal_nrd(I) ** 2
