from fractions import Fraction
import logging

import pytest

from conftest import classset_for
from quathecke.fields import Fp2, Fp2Elem
from quathecke.hecke import (
    WitnessSolution,
    build_context,
    check_congruences,
    coset_matrices,
    compute_MK,
    e_level1,
    gl2_elements,
    gl2_order,
    hecke_matrix_general,
    hecke_matrix_level1,
    level1_counts,
    residue_Ql,
    residue_Qp,
    solve_norm_equation,
    weight_k_matrix,
)
from quathecke.lattice import right_order, units
from quathecke.linalg import commutes, eigenvalues_fp2, simultaneous_eigensystems
from quathecke.splitting import det

T2_P11 = ((6, 1), (7, 0))
T3_P11 = ((8, 8), (1, 4))


def same_up_to_swap(M, ref):
    swapped = tuple(tuple(row[::-1]) for row in ref[::-1])
    return tuple(map(tuple, M)) in (ref, swapped)


# ---------------------------------------------------------------- scaling and targets


def test_cosets():
    for ell0 in (2, 3, 5):
        cos = coset_matrices(ell0)
        assert len(cos) == ell0 + 1
        assert all(det(g) == ell0 for g in cos)
        assert cos[-1] == (ell0, 0, 0, 1)


def test_compute_MK_examples(cs11):
    assert compute_MK(0, 0, cs11, 2) == (4, 2)
    assert compute_MK(0, 1, cs11, 2) == (4, 4)
    assert compute_MK(1, 1, cs11, 3) == (6, 3)
    for i in range(2):
        for j in range(2):
            for ell0 in (2, 3, 5):
                for scaling in ("paper", "tight"):
                    M, K = compute_MK(i, j, cs11, ell0, scaling=scaling)
                    assert (K * M * M).denominator == 1 and K * M * M > 0


def test_norm_equation_examples(order11):
    assert set(solve_norm_equation(order11, 2)) == {(1, 1, 0, 0), (1, -1, 0, 0), (-1, 1, 0, 0), (-1, -1, 0, 0)}
    unit_vectors = solve_norm_equation(order11, 1)
    assert len(unit_vectors) == 4
    assert any(v[3] == 2 for v in solve_norm_equation(order11, 12))


# ---------------------------------------------------------------- congruences


def test_check_congruences_examples(ctx11_2):
    assert check_congruences((1, 1, 0, 0), 0, 0, 0, ctx11_2, 1) is False
    assert check_congruences((1, 1, 0, 0), 0, 0, 1, ctx11_2, 1) is True


def test_no_norm_twelve_solution_for_second_class(ctx11_3, order11):
    M, K = compute_MK(1, 1, ctx11_3.classset, 3, scaling="tight")
    assert K * M * M == 12
    assert not any(check_congruences(v, 1, 1, 0, ctx11_3, M) for v in solve_norm_equation(order11, 12))


# ---------------------------------------------------------------- level 1


def test_entry_counts_p11(ctx11_2):
    counts, _ = level1_counts(ctx11_2)
    # counts[j][i] = sum over cosets of e(i, j, k)
    assert counts == [[1, 2], [3, 0]]


def test_witnesses_for_first_column(ctx11_2, alg11):
    half = Fraction(1, 2)
    found = set()
    for k in range(3):
        e, wits = e_level1(0, 1, k, ctx11_2)
        found.update(w.alpha for w in wits)
    for alpha in (alg11.element(half, -1, -half, 0), alg11.element(half, 1, -half, 0), alg11.element(2)):
        assert alpha in found


def test_witness_sets_closed_under_units(ctx11_2, ctx11_3):
    for ctx in (ctx11_2, ctx11_3):
        cs = ctx.classset
        _, table = level1_counts(ctx)
        for (i, j, k), wits in table.items():
            alphas = {w.alpha for w in wits}
            us = units(right_order(cs.reps[i]))
            assert len(alphas) == len(us)
            assert {u * a for u in us for a in alphas} == alphas


def test_level1_matrices_p11(cs11):
    T2 = hecke_matrix_level1(11, 2, cs11)
    T3 = hecke_matrix_level1(11, 3, cs11)
    assert T2.entries == T2_P11 and T2.integer == ((1, 2), (3, 0))
    assert T3.entries == T3_P11 and T3.integer == ((2, 2), (3, 1))


def test_level1_matrices_from_search():
    cs = classset_for(11)
    assert same_up_to_swap(hecke_matrix_level1(11, 2, cs).entries, T2_P11)
    assert same_up_to_swap(hecke_matrix_level1(11, 3, cs).entries, T3_P11)


@pytest.mark.parametrize("p", [11, 23])
def test_sublattice_matches_naive(p):
    cs = classset_for(p)
    for ell0 in (2, 3):
        ctx = build_context(cs, ell0)
        assert level1_counts(ctx, "sublattice")[0] == level1_counts(ctx, "naive")[0]


def test_scalings_agree(cs11):
    for ell0 in (2, 3, 5):
        a = level1_counts(build_context(cs11, ell0, scaling="tight"))[0]
        b = level1_counts(build_context(cs11, ell0, scaling="paper"))[0]
        assert a == b


@pytest.mark.parametrize("p", [2, 3, 5, 7, 13])
def test_single_class(p):
    cs = classset_for(p)
    for ell0 in (2, 3, 5, 7):
        if ell0 == p:
            continue
        T = hecke_matrix_level1(p, ell0, cs)
        assert T.entries == (((ell0 + 1) * pow(ell0, -1, p) % p,),)


def test_small_example_from_hand_computation(ctx11_2, order11):
    """Brute force: all norm-K*M^2 vectors filtered by the fixed congruences."""
    M_tab = {}
    for i in range(2):
        for j in range(2):
            M, K = compute_MK(i, j, ctx11_2.classset, 2, scaling="tight")
            M_tab[(i, j)] = (M, int(K * M * M))
    for (i, j), (M, target) in M_tab.items():
        cand = solve_norm_equation(order11, target)
        for k in range(3):
            e, _ = e_level1(i, j, k, ctx11_2)
            brute = any(check_congruences(v, i, j, k, ctx11_2, M) for v in cand)
            assert e == int(brute)


# ---------------------------------------------------------------- residues


def test_residue_Qp(cs11, alg11):
    F = Fp2(11, 1)
    assert residue_Qp(alg11.one, 0, 0, cs11, F) == F.one
    for u in units(right_order(cs11.reps[0])):
        assert F.norm(residue_Qp(u, 0, 0, cs11, F)) == 1
    half = Fraction(1, 2)
    alpha = (alg11.i + (alg11.one + alg11.j) * half) * half
    r = residue_Qp(alpha, 0, 0, cs11, F)
    assert r == Fp2Elem(3, 6)
    assert F.pow(r, 120) == F.one


def test_residue_Ql(cs11, order11):
    ctx = build_context(cs11, 2, 3)
    one = WitnessSolution((1, 0, 0, 0), 1, order11)
    assert residue_Ql(one, 0, 0, 3, ctx) == (1, 0, 0, 1)
    wit = WitnessSolution((1, 1, 0, 0), 1, order11)
    Q = residue_Ql(wit, 0, 0, 3, ctx)
    assert Q == (1, 2, 1, 1)
    assert (det(Q) - 2) % 3 == 0


def test_residue_determinants(cs11):
    ctx = build_context(cs11, 2, 3)
    _, table = level1_counts(ctx)
    for (i, j, k), wits in table.items():
        for w in wits:
            Q = residue_Ql(w, i, j, 3, ctx)
            # det matches nrd(w_i alpha w_j^-1) = nrd(alpha) nrd(w_i)/nrd(w_j), a 3-adic unit
            n = w.alpha.nrd() * cs11.local_gens[i].at(3, cs11.params).nrd() / cs11.local_gens[j].at(3, cs11.params).nrd()
            assert (det(Q) * n.denominator - n.numerator) % 3 == 0


def test_gl2_counts():
    assert gl2_elements(1) == [(0, 0, 0, 0)]
    for N in (2, 3, 4, 5, 6):
        assert len(gl2_elements(N)) == gl2_order(N)


# ---------------------------------------------------------------- general level


@pytest.fixture(scope="module")
def general11():
    cs = classset_for(11)
    return {ell0: hecke_matrix_general(11, 1, ell0, cs) for ell0 in (2, 3)}


def test_general_reduces_to_level1(general11):
    cs = classset_for(11)
    for ell0, G in general11.items():
        assert G.dim == cs.h * 120
        assert tuple(map(tuple, G.invariant_projection())) == hecke_matrix_level1(11, ell0, cs).entries
        W0 = weight_k_matrix(G, 0)
        F = G.field
        assert W0.entries == tuple(tuple(F.coerce(x) for x in row) for row in hecke_matrix_level1(11, ell0, cs).entries)


def test_general_constant_vector(general11):
    for ell0, G in general11.items():
        out = G.apply([1] * G.dim)
        assert set(out) == {(ell0 + 1) * pow(ell0, -1, 11) % 11}


def test_general_full_index_eigensystems(general11):
    F = Fp2(11, 1)
    mats = [general11[2].to_dense(), general11[3].to_dense()]
    assert commutes(F, *[[[F.coerce(x) for x in r] for r in M] for M in mats])
    systems, _ = simultaneous_eigensystems(F, mats)
    pairs = {tuple(s.values) for s in systems}
    assert (F.coerce(10), F.coerce(7)) in pairs
    assert (F.coerce(7), F.coerce(5)) in pairs


def test_weight_k_eigenvalues(general11):
    W = weight_k_matrix(general11[2], 0)
    assert eigenvalues_fp2(Fp2(11, 1), W.entries) == [Fp2Elem(7, 0), Fp2Elem(10, 0)]


def test_weight_reduced_mod_group_order(general11):
    G = general11[2]
    assert weight_k_matrix(G, 120).entries == weight_k_matrix(G, 0).entries
    assert weight_k_matrix(G, 122).entries == weight_k_matrix(G, 2).entries
    with pytest.raises(ValueError):
        weight_k_matrix(G, -1)


@pytest.mark.parametrize("p,N,ell0,k", [(5, 2, 3, 2), (7, 2, 3, 1), (11, 1, 2, 3)])
def test_weight_spaces_are_preserved(p, N, ell0, k):
    """Apply the full operator to each f_(i,gamma) over F_{p^2} and compare
    with the combination read off the weight-k matrix."""
    G = hecke_matrix_general(p, N, ell0, classset_for(p))
    F = G.field
    W = weight_k_matrix(G, k)
    ng = len(G.gammas)
    for col, (i, gamma) in enumerate(W.index):
        f = {}
        for mu in G.mus:
            f[G.index_of(i, mu, gamma)] = F.pow(mu, -k)
        image = {}
        for (j, ii), terms in G.blocks.items():
            if ii != i:
                continue
            for term in terms:
                w = F.coerce(G.weight_mod_p(term.weight))
                for mu in G.mus:
                    g2 = gamma if N == 1 else tuple(x % N for x in _mul(gamma, term.Q, N))
                    r = G.index_of(j, F.mul(mu, term.q), g2)
                    image[r] = F.add(image.get(r, F.zero), F.mul(w, f[G.index_of(i, mu, gamma)]))
        expected = {}
        for row, (j, g2) in enumerate(W.index):
            c = W.entries[row][col]
            if F.is_zero(c):
                continue
            for mu in G.mus:
                r = G.index_of(j, mu, g2)
                expected[r] = F.add(expected.get(r, F.zero), F.mul(c, F.pow(mu, -k)))
        keys = set(image) | set(expected)
        assert all(image.get(r, F.zero) == expected.get(r, F.zero) for r in keys)
        assert ng == len(G.gammas)


def _mul(X, Y, N):
    return (
        (X[0] * Y[0] + X[1] * Y[2]) % N,
        (X[0] * Y[1] + X[1] * Y[3]) % N,
        (X[2] * Y[0] + X[3] * Y[2]) % N,
        (X[2] * Y[1] + X[3] * Y[3]) % N,
    )


@pytest.mark.parametrize("p,N", [(5, 2), (7, 2), (11, 2)])
def test_general_commutes_on_weight_blocks(p, N):
    cs = classset_for(p)
    ells = [l for l in (3, 5, 7) if (p * N) % l][:2]
    Gs = [hecke_matrix_general(p, N, l, cs) for l in ells]
    F = Gs[0].field
    for k in (0, 2):
        A, B = (weight_k_matrix(G, k).rows() for G in Gs)
        assert commutes(F, A, B)


def test_orbit_matrix_matches_full_operator():
    G = hecke_matrix_general(5, 2, 3, classset_for(5))
    label, reps = G.orbits
    Om = G.orbit_matrix()
    for y in range(len(reps)):
        v = [1 if label[x] == y else 0 for x in range(G.dim)]
        out = G.apply(v)
        for x in range(G.dim):
            assert out[x] == Om[label[x]][y]


def test_fallback_and_orbits_at_p3(caplog):
    cs = classset_for(3)
    with caplog.at_level(logging.WARNING):
        Gs = [hecke_matrix_general(3, 2, l, cs) for l in (5, 7)]
    assert all(G.mode == "first" for G in Gs)
    assert "falling back" in caplog.text
    A, B = (G.orbit_matrix() for G in Gs)
    from quathecke.fields import PrimeField

    assert commutes(PrimeField(3), A, B)
    for G, M in zip(Gs, (A, B)):
        assert len({sum(r) % 3 for r in M}) == 1


def test_p2_general_rejected():
    with pytest.raises(ValueError):
        hecke_matrix_general(2, 1, 3, classset_for(2))
