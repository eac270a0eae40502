import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lassgap import graphs
from lassgap.lasserre import (GramSolution, LiftedSDP, MomentVector, NotPSDError, build_lifted_sdp, build_psi1,
                              build_psi2, certify_lift, gram_from_moments, implied_y_vectors, mix,
                              moment_matrix, rank1_gram, rank1_lift, shift, solve_family, solve_lifted,
                              verify_vector_constraints)
from lassgap.poly import (BinaryProgram, MultilinearPoly, balance_polynomial, constant, cut_polynomial,
                          enumerate_subsets, eval_poly, linear, union)

from conftest import SMALL_GRAPHS

TOL = 1e-7


def as_float(mm):
    return np.asarray(mm.matrix, dtype=float)


# ------------------------------------------------------------ moment matrices

def test_moment_matrix_rank1_example():
    mm = moment_matrix(rank1_lift((1, 0), 1))
    assert mm.basis == ((), (0,), (1,))
    np.testing.assert_array_equal(as_float(mm), [[1, 1, 0], [1, 1, 0], [0, 0, 0]])


def test_moment_matrix_empty_instance():
    mm = moment_matrix(MomentVector(0, 1, {(): 1}))
    np.testing.assert_array_equal(as_float(mm), [[1]])


def test_moment_matrix_average_of_two_lifts():
    y = mix([rank1_lift((0, 0), 1), rank1_lift((1, 1), 1)], [Fraction(1, 2)] * 2)
    np.testing.assert_array_equal(as_float(moment_matrix(y)), [[1, .5, .5], [.5, .5, .5], [.5, .5, .5]])


def test_moment_vector_validation():
    with pytest.raises(ValueError):
        MomentVector(1, 1, {(): 2, (0,): 1})
    with pytest.raises(ValueError):
        MomentVector(2, 1, {(): 1, (0,): 1})
    with pytest.raises(ValueError):
        moment_matrix(rank1_lift((1, 0), 1), level=2)


def test_rank1_lift_examples():
    y = rank1_lift((0, 0, 0), 2)
    assert y[()] == 1 and all(v == 0 for k, v in y.values.items() if k)
    assert all(v == 1 for v in rank1_lift((1, 1, 1), 2).values.values())
    y = rank1_lift((1, 0, 1), 2)
    assert y[(0, 2)] == 1 and y[(0, 1)] == 0


# ------------------------------------------------------------------- shift

def test_shift_constant_is_identity():
    y = rank1_lift((1, 0, 1), 1)
    assert shift(constant(3, 1), y) == dict(y.values)


def test_shift_single_variable():
    assert shift(linear(1, {0: 1}), rank1_lift((1,), 1))[()] == 1


def test_shift_balance_on_balanced_cut_is_zero():
    x = (1, 0, 1, 0, 0, 1)
    out = shift(balance_polynomial(6, 3), rank1_lift(x, 2))
    assert len(out) == sum(1 for _ in enumerate_subsets(6, 3))
    assert all(v == 0 for v in out.values())


def test_shift_degree_guard():
    with pytest.raises(ValueError):
        shift(MultilinearPoly(3, {(0, 1, 2): 1}), rank1_lift((1, 1, 1), 1))


# ----------------------------------------------------------- lifted programs

def test_build_lifted_sdp_smallest():
    prog = BinaryProgram(1, linear(1, {0: 1}), constant(1, 1))
    lsdp = build_lifted_sdp(prog, 1)
    assert lsdp.block_sizes == (2, 2)
    assert lsdp.objective == {(0,): 1}


def test_build_lifted_sdp_rejects_low_round():
    prog = BinaryProgram(3, MultilinearPoly(3, {(0, 1, 2): 1}), constant(3, 1))
    with pytest.raises(ValueError):
        build_lifted_sdp(prog, 1)


def test_lifted_sdp_invariants():
    with pytest.raises(ValueError):
        LiftedSDP(2, 1, (), (({}, 0),), {})
    with pytest.raises(ValueError):
        LiftedSDP(3, 1, (), (({(0, 1, 2): 1}, 0),), {})


def test_c4_balanced_equality_route():
    # oracle: exhaustive scan of all 16 assignments (balanced optimum 2), matched by an independent SDP solve
    g = graphs.cycle(4)
    prog = BinaryProgram(4, cut_polynomial(4, g.edges.tolist()), balance_polynomial(4, 2), constraint_kind="eq")
    assert prog.brute_force()[0] == 2
    res = solve_lifted(build_lifted_sdp(prog, 2), tol=TOL)
    assert res.status == "converged"
    assert res.value == pytest.approx(2, abs=10 * TOL)


def test_psi1_triangle():
    fam = build_psi1(graphs.triangle(), Fraction(1, 3), 1)
    assert [tp for tp, _ in fam] == [Fraction(1, 3), Fraction(2, 3)]
    assert fam[0][1].block_sizes[0] == 4
    value, results = solve_family(fam, tol=TOL)
    for res in results:
        assert res.status == "converged"
        assert res.value == pytest.approx(2, abs=10 * TOL)


def test_psi1_single_edge():
    fam = build_psi1(graphs.path(2), 0.5, 1)
    assert [tp for tp, _ in fam] == [Fraction(1, 2)]
    assert solve_family(fam, tol=TOL)[0] == pytest.approx(1, abs=10 * TOL)


def test_psi1_grid_and_validation():
    fam = build_psi1(graphs.path(6), Fraction(1, 3), 1)
    assert [tp for tp, _ in fam] == [Fraction(k, 6) for k in (2, 3, 4)]
    with pytest.raises(ValueError):
        build_psi1(graphs.path(4), 0, 1)
    with pytest.raises(ValueError):
        build_psi1(graphs.path(3), Fraction(1, 2), 1)


def test_psi2_single_edge():
    fam = build_psi2(graphs.path(2), 1)
    assert [t for t, _ in fam] == [Fraction(1, 2)]
    assert solve_family(fam, tol=TOL)[0] == pytest.approx(1, abs=10 * TOL)


def test_psi2_path3_below_integral():
    fam = build_psi2(graphs.path(3), 1)
    assert [t for t, _ in fam] == [Fraction(1, 3)]
    value, _ = solve_family(fam, tol=TOL)
    assert value <= 0.5 + 10 * TOL


def test_psi1_objective_scaling_of_psi2():
    lsdp = build_psi2(graphs.path(4), 1)[1][1]
    assert lsdp.meta["scale"] == Fraction(1, 16 * Fraction(1, 2) * Fraction(1, 2))


# -------------------------------------------------------------- Gram vectors

def test_gram_rank1_all_equal_unit():
    g = gram_from_moments(rank1_lift((1, 1), 1))
    v = g.vectors
    assert np.allclose(v, v[0])
    assert np.allclose(np.sum(v * v, axis=1), 1)


def test_gram_orthonormal_vectors():
    # an identity Gram matrix violates union consistency, so it is built from vectors directly
    vecs = np.eye(3)
    g = GramSolution(((), (0,), (1,)), vecs)
    np.testing.assert_allclose(g.gram(), np.eye(3))
    assert not verify_vector_constraints(g).ok


def test_gram_averaged_c4_cuts():
    y = mix([rank1_lift((1, 1, 0, 0), 2), rank1_lift((0, 1, 1, 0), 2)], [Fraction(1, 2)] * 2)
    g = gram_from_moments(y, 2)
    gram = g.gram()
    for i, a in enumerate(g.basis):
        for j, b in enumerate(g.basis):
            assert abs(gram[i, j] - float(y[union(a, b)])) <= 1e-10


def test_gram_rejects_non_psd():
    y = MomentVector(1, 1, {(): 1, (0,): 2})
    with pytest.raises(NotPSDError):
        gram_from_moments(y)


def test_verify_rank1_empty_report():
    rep = verify_vector_constraints(rank1_gram((1, 0, 1), 2), tol=0)
    assert rep.ok and rep.max_violation == 0


def test_verify_names_perturbed_vector():
    tol = 1e-8
    g = gram_from_moments(rank1_lift((1, 0, 1), 1).as_float())
    vecs = g.vectors.copy()
    k = g.index[(1,)]
    vecs[k, 0] += 10 * tol
    rep = verify_vector_constraints(GramSolution(g.basis, vecs), tol=tol)
    assert not rep.ok
    assert (1,) in rep.vectors_named()


def test_verify_on_solver_output_reports_constant():
    # vectors extracted from a solved relaxation: violations are O(residual); the constant is reported
    lsdp = build_psi1(graphs.cycle(5), Fraction(2, 5), 1)[0][1]
    res = solve_lifted(lsdp, tol=TOL)
    y = {k: res.moments.get(k, 0.0) for k in enumerate_subsets(5, 2)}
    y[()] = 1.0
    g = gram_from_moments(MomentVector(5, 1, y), tol=1e-6)
    rep = verify_vector_constraints(g, tol=1e-6)
    c = rep.max_violation / max(res.residual, 1e-16)
    print(f"solver residual {res.residual:.2e}, max vector violation {rep.max_violation:.2e}, constant {c:.2f}")
    assert rep.ok


# ------------------------------------------------------------ certificates

def test_certify_zero_polynomial():
    cert = certify_lift(rank1_gram((1, 0), 1), MultilinearPoly(2, {}))
    assert cert.delta == 0 and cert.residual == 0 and cert.accepted


def test_certify_rank1_balance():
    x = (1, 0, 1, 1)
    cert = certify_lift(rank1_gram(x, 1), linear(4, {v: 1 for v in range(4)}))
    assert cert.delta == 3 and cert.residual_sq == 0 and cert.accepted


def test_certify_rejects_uncovered_subset():
    with pytest.raises(KeyError):
        certify_lift(rank1_gram((1, 0), 1), MultilinearPoly(2, {(0, 1): 1}))


def test_implied_vectors_scale():
    g = implied_y_vectors(rank1_gram((1, 1), 1), 4)
    assert np.allclose(g.gram()[0, 0], 4)


# -------------------------------------------------------------- properties

bits = st.integers(1, 6).flatmap(lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n))


@given(bits, st.integers(1, 3))
def test_union_consistency_rank1(x, r):
    y = rank1_lift(x, r)
    mm = moment_matrix(y)
    for i, a in enumerate(mm.basis):
        for j, b in enumerate(mm.basis):
            assert mm.matrix[i, j] == y[union(a, b)]


@given(bits, st.dictionaries(st.lists(st.integers(0, 5), max_size=2).map(tuple), st.integers(-3, 3), max_size=5))
def test_certify_rank1_any_polynomial(x, coeffs):
    n = len(x)
    q = MultilinearPoly(n, {tuple(v for v in k if v < n): c for k, c in coeffs.items()})
    cert = certify_lift(rank1_gram(x, 2), q)
    assert cert.delta == eval_poly(q, x)
    assert cert.residual_sq == 0 and cert.residual == 0


@pytest.mark.parametrize("name", sorted(SMALL_GRAPHS))
@pytest.mark.parametrize("r", [1, 2, 3])
def test_rank1_exactness_exhaustive(name, r):
    g = SMALL_GRAPHS[name]
    n = g.n
    edges = g.edges.tolist()
    psi1 = {tp * n: lsdp for tp, lsdp in build_psi1(g, Fraction(1, n) if n > 1 else 0.5, r)}
    psi2 = {t * n: lsdp for t, lsdp in build_psi2(g, r)}
    for x in itertools.product((0, 1), repeat=n):
        y = dict(rank1_lift(x, r).values)
        k = sum(x)
        crossing = sum(x[u] != x[v] for u, v in edges)
        for fam, value in ((psi1, crossing), (psi2, Fraction(crossing, max(k * (n - k), 1)))):
            lsdp = fam.get(k)
            if lsdp is None:
                continue
            res = lsdp.residuals(y)
            assert res["equality"] == 0
            assert min(res["min_eigs"]) >= -1e-9
            assert res["objective"] == value
        prog = BinaryProgram(n, cut_polynomial(n, edges), balance_polynomial(n, k), constraint_kind="eq")
        res = build_lifted_sdp(prog, max(r, 2)).residuals(dict(rank1_lift(x, max(r, 2)).values))
        assert res["equality"] == 0 and res["objective"] == crossing


weights = st.lists(st.integers(1, 9), min_size=1, max_size=4)


@given(st.integers(1, 5), st.integers(1, 2), weights, st.randoms(use_true_random=False))
def test_gram_round_trip_on_mixtures(n, r, w, rnd):
    xs = [tuple(rnd.randint(0, 1) for _ in range(n)) for _ in w]
    y = mix([rank1_lift(x, r) for x in xs], [Fraction(v, sum(w)) for v in w])
    g = gram_from_moments(y.as_float(), r)
    assert verify_vector_constraints(g, tol=1e-8).ok
    for s, val in g.moments().items():
        assert abs(val - float(y[s])) <= 1e-10
