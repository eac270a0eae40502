import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lassgap import graphs
from lassgap.lasserre import build_psi1, build_psi2, solve_family
from lassgap.sdp import SdpProblem, dumps_json, export_sdpa, parse_sdpa, psd_project, solve

from conftest import SMALL_GRAPHS

TOL = 1e-7


def trace_problem(size=3):
    return SdpProblem(
        blocks=((size, "psd"),),
        constraints=tuple({(0, i, i): 1.0} for i in range(size)),
        rhs=(1.0,) * size,
        objective={(0, i, i): 1.0 for i in range(size)},
    )


def test_trace_minimization():
    sol = solve(trace_problem(), tol=TOL)
    assert sol.converged
    assert sol.objective == pytest.approx(3, abs=TOL * 10)


def test_psi1_triangle_family_min():
    value, _ = solve_family(build_psi1(graphs.triangle(), Fraction(1, 3), 1), tol=TOL)
    assert value == pytest.approx(2, abs=10 * TOL)


def test_infeasible_toy():
    p = SdpProblem(((1, "psd"),), ({(0, 0, 0): 1.0},), (-1.0,), {(0, 0, 0): 1.0})
    sol = solve(p, tol=TOL, max_iter=20000)
    assert sol.status == "infeasible_suspected"


def test_residuals_are_recomputed():
    p = trace_problem(4)
    sol = solve(p, tol=TOL)
    obj, viol = p.evaluate(sol.blocks)
    assert sol.primal_residual == pytest.approx(np.abs(viol).max(), rel=1e-14, abs=1e-300)
    assert sol.objective == pytest.approx(obj, rel=1e-14)
    for m, e in zip(sol.blocks, sol.min_eigs):
        assert e == pytest.approx(np.linalg.eigvalsh(m).min(), rel=1e-14, abs=1e-14)


def test_max_sense():
    p = SdpProblem(((2, "psd"),), ({(0, 0, 0): 1.0, (0, 1, 1): 1.0},), (1.0,), {(0, 0, 1): 2.0}, "max")
    sol = solve(p, tol=TOL)
    assert sol.converged
    assert sol.objective == pytest.approx(1, abs=1e-5)


def test_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem(((2, "psd"),), ({},), (1.0,), {})
    with pytest.raises(ValueError):
        SdpProblem(((2, "diag"),), ({(0, 0, 1): 1.0},), (1.0,), {})
    with pytest.raises(ValueError):
        SdpProblem(((2, "psd"),), ({(0, 1, 0): 1.0},), (1.0,), {})
    with pytest.raises(ValueError):
        solve(trace_problem(), tol=0)


# ------------------------------------------------------------- projection

def test_psd_project_examples():
    np.testing.assert_allclose(psd_project(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(psd_project(np.diag([1.0, -1.0])), np.diag([1.0, 0.0]), atol=1e-15)


def test_psd_project_is_nearest_sampled():
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.standard_normal((5, 5))
        a = (a + a.T) / 2
        p = psd_project(a)
        assert np.linalg.eigvalsh(p).min() >= -1e-12
        d = np.linalg.norm(a - p)
        for _ in range(100):
            b = rng.standard_normal((5, 5))
            b = b @ b.T * rng.uniform(0, 1)
            assert d <= np.linalg.norm(a - b) + 1e-12


@given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
def test_psd_project_idempotent(vals):
    a = np.array(vals).reshape(3, 3)
    a = (a + a.T) / 2
    p = psd_project(a)
    np.testing.assert_allclose(psd_project(p), p, atol=1e-9)


# ------------------------------------------------------------------- SDPA

def test_sdpa_one_by_one():
    p = SdpProblem(((1, "psd"),), ({(0, 0, 0): 1.0},), (1.0,), {(0, 0, 0): 1.0})
    lines = export_sdpa(p).splitlines()
    assert len(lines) == 6
    assert lines[:4] == ["1", "1", "1", "1"]
    assert lines[4:] == ["0 1 1 1 -1", "1 1 1 1 1"]


def test_sdpa_empty_constraints_error():
    p = SdpProblem(((1, "psd"),), (), (), {(0, 0, 0): 1.0})
    with pytest.raises(ValueError):
        export_sdpa(p)


def test_sdpa_round_trip_single_edge():
    problem, _ = build_psi1(graphs.path(2), 0.5, 1)[0][1].to_sdp()
    buf = io.StringIO()
    export_sdpa(problem, buf)
    back = parse_sdpa(io.StringIO(buf.getvalue()))
    assert back.sense == "max"
    assert back.canonical() == problem.canonical()


@pytest.mark.parametrize("name", sorted(SMALL_GRAPHS))
def test_sdpa_round_trip_families(name):
    g = SMALL_GRAPHS[name]
    fams = [build_psi2(g, 1)]
    if g.n > 2:
        fams.append(build_psi1(g, Fraction(1, 3), 2))
    for fam in fams:
        for _, lsdp in fam:
            problem, _ = lsdp.to_sdp()
            assert parse_sdpa(export_sdpa(problem)).canonical() == problem.canonical()


def test_json_round_trip():
    problem, _ = build_psi1(graphs.cycle(4), 0.5, 1)[0][1].to_sdp()
    back = SdpProblem.from_json(json.loads(dumps_json(problem)))
    assert back.canonical() == problem.canonical()


def test_solve_never_above_rank1_point():
    # every balanced cut of C5 at k=2 is feasible; the relaxation can only go lower
    lsdp = build_psi1(graphs.cycle(5), Fraction(2, 5), 1)[0][1]
    problem, rep = lsdp.to_sdp()
    sol = solve(problem, tol=TOL)
    assert sol.objective <= 2 + 10 * TOL
