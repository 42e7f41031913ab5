import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import classset_for
from quathecke.splitting import (
    SplittingError,
    compute_splitting,
    condition_holds,
    det,
    equations,
    find_splitting_seed,
    lift_step_2adic,
    lift_step_odd,
    lift_to,
    mmul,
    precision_plan,
    relations_hold,
    verify_splitting,
)


def mod_mat(X, m):
    return tuple(x % m for x in X)


def test_precision_plan_examples(cs11):
    plan = precision_plan(cs11, 1, 2)
    assert plan.V == [2] and plan.m(2) == 1 and plan.n(2) == 7
    plan = precision_plan(cs11, 1, 3)
    assert plan.V == [2, 3] and plan.m(3) == 0 and plan.n(3) == 4
    plan = precision_plan(cs11, 3, 2)
    assert plan.V == [2, 3] and plan.n(3) == 5


def test_precision_plan_rejects_bad_levels(cs11):
    with pytest.raises(ValueError):
        precision_plan(cs11, 11, 2)
    with pytest.raises(ValueError):
        precision_plan(cs11, 2, 2)


def test_seed_at_two_p11(alg11, order11):
    A, B = find_splitting_seed(alg11, order11, 2)
    mod = 2**7
    assert A == mod_mat((0, -1, 1, 0), mod)
    x = B[0]
    assert B == mod_mat((x, 2, 2, -x), mod)
    assert (x * x + 15) % mod == 0 and x % 8 == 1


def test_seed_at_three_p11(alg11, order11):
    A, B = find_splitting_seed(alg11, order11, 3)
    assert A == mod_mat((0, -1, 1, 0), 9)
    x = B[0]
    assert B == mod_mat((x, 0, 0, -x), 9)
    assert (x * x + 11) % 9 == 0 and x % 3 == 1


def test_swapped_seed_fails_integrality(order11):
    A = mod_mat((0, -1, 1, 0), 128)
    B = mod_mat((2, 25, 25, -2), 128)
    assert relations_hold(A, B, 1, 11, 128)
    assert not condition_holds(A, B, order11, 2)


def test_lift_step_odd_examples(alg11, order11):
    A, B = find_splitting_seed(alg11, order11, 3)
    A1, B1 = lift_step_odd(A, B, 3, 2, 1, 11)
    assert relations_hold(A1, B1, 1, 11, 27)
    assert mod_mat(A1, 9) == A and mod_mat(B1, 9) == B
    # already exact at the next precision: zero increment
    A2, B2 = lift_step_odd(A1, B1, 3, 2, 1, 11)
    assert (A2, B2) == (A1, B1)


def test_lift_step_odd_rejects_proportional():
    # the zero pair satisfies every relation mod 3 when eps = p = 3, and is proportional
    A = (0, 0, 0, 0)
    with pytest.raises(SplittingError):
        lift_step_odd(A, A, 3, 1, 3, 3)


def test_lift_step_2adic_examples():
    seed = (0, -1, 1, 25, 2, 2)
    out = lift_step_2adic(seed, 7, 1, 11)
    assert not any(f % 2**8 for f in equations(out, 1, 11))
    # the Jacobian may carry up to 2^3, so only the low m - 3 digits are kept
    assert all((a - b) % 2**4 == 0 for a, b in zip(out, seed))
    # a tuple already exact mod 2^8 comes back unchanged
    again = lift_step_2adic(out, 7, 1, 11)
    assert tuple(x % 2**8 for x in again) == tuple(x % 2**8 for x in out)
    with pytest.raises(SplittingError):
        lift_step_2adic((0, -1, 1, 1, 2, 2), 7, 1, 11)  # x = 1 solves only mod 16
    with pytest.raises(SplittingError):
        lift_step_2adic(seed, 6, 1, 11)


def _scan_two_adic(rnd, eps, p):
    """A solution mod 2^7 found by scanning small integers from a random start."""
    mod = 128
    for _ in range(2000):
        a = rnd.randrange(mod)
        b = rnd.randrange(1, mod, 2)
        c = (-eps - a * a) * pow(b, -1, mod) % mod
        for x in range(mod):
            for y in range(mod):
                z = -(2 * a * x + c * y) * pow(b, -1, mod) % mod
                v = (a, b, c, x, y, z)
                if not any(f % mod for f in equations(v, eps, p)):
                    return v
    return None


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(1, 3), (1, 7), (1, 11), (2, 5), (2, 13), (3, 17), (1, 19)]), st.integers(0, 10**6))
def test_two_adic_chain(params, seed):
    eps, p = params
    v = _scan_two_adic(random.Random(seed), eps, p)
    assume(v is not None)
    for m in range(7, 10):
        v = lift_step_2adic(v, m, eps, p)
        assert not any(f % 2 ** (m + 1) for f in equations(v, eps, p))


def _odd_seed(rnd, ell, eps, p):
    mod = ell * ell
    for _ in range(50):
        a = rnd.randrange(mod)
        b = rnd.randrange(1, mod)
        if b % ell == 0:
            continue
        binv = pow(b, -1, mod)
        c = (-eps - a * a) * binv % mod
        xs = list(range(mod))
        rnd.shuffle(xs)
        for x in xs:
            for y in range(mod):
                z = -(2 * a * x + c * y) * binv % mod
                A, B = (a, b, c, -a % mod), (x, y, z, -x % mod)
                if relations_hold(A, B, eps, p, mod):
                    return A, B
    return None


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([3, 5, 7, 13]), st.sampled_from([(1, 11), (2, 13), (3, 17), (1, 2)]), st.integers(0, 10**6))
def test_odd_lifting_to_twenty(ell, params, seed):
    eps, p = params
    assume(ell != p and eps % ell)
    found = _odd_seed(random.Random(seed), ell, eps, p)
    assume(found is not None)
    A, B = found
    try:
        A, B = lift_to(A, B, ell, 2, 20, eps, p)
    except SplittingError as exc:
        assume("proportional" not in str(exc))
        raise
    assert relations_hold(A, B, eps, p, ell**20)


def test_images_p11_at_two(cs11, alg11, order11):
    sp = compute_splitting(2, 7, alg11, order11, cs11)
    imgs = [mod_mat(S, 4) for S in sp.S]
    assert imgs[1] == mod_mat((0, -1, 1, 0), 4)
    assert imgs[2] == mod_mat((-1, 0, 1, 1), 4)
    assert imgs[3] == mod_mat((1, 1, 1, 0), 4)
    # image of the second class's local generator at 2
    assert mod_mat(sp.W[1], 4) == (2, 1, 2, 0)
    assert mod_mat(sp.W[0], 4) == (1, 0, 0, 1)


def test_images_p11_at_three(cs11, alg11, order11):
    sp = compute_splitting(3, 4, alg11, order11, cs11)
    assert mod_mat(sp.S[2], 3) == (0, 0, 1, 0)
    assert mod_mat(sp.S[3], 3) == (1, 0, 0, 0)


SPLIT_CASES = [(p, N) for p in (2, 3, 5, 7, 11, 13, 17, 23, 29, 41) for N in (1, 3, 4, 5) if N % p]


@pytest.mark.parametrize("p,N", SPLIT_CASES)
def test_splittings_validate(p, N):
    cs = classset_for(p)
    ell0 = next(l for l in (2, 3, 5, 7) if (p * N) % l)
    plan = precision_plan(cs, N, ell0)
    rnd = random.Random(p * 100 + N)
    for ell in plan.V:
        sp = compute_splitting(ell, plan.n(ell), cs.params, cs.order, cs, N, m=plan.m(ell))
        assert verify_splitting(sp, cs.order, cs) == []
        assert relations_hold(sp.A, sp.B, cs.params.eps, p, sp.modulus)
        assert condition_holds(sp.A, sp.B, cs.order, ell)
        mod = sp.working_modulus
        for _ in range(40):
            x = [rnd.randint(-9, 9) for _ in range(4)]
            y = [rnd.randint(-9, 9) for _ in range(4)]
            prod = cs.order.integral_coordinates(cs.order.element(x) * cs.order.element(y))
            assert sp.image(prod) == mmul(sp.image(x), sp.image(y), mod)
            assert (det(sp.image(x)) - cs.order.element(x).nrd()) % mod == 0
