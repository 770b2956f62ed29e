import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal import (DomainError, NewtonOptions, NonConvergence, NotMinimalCandidate,
                      ParamPoint, ShapeError, SolutionPair, SystemSpec, jacobian, laplacian,
                      make_mesh, neg_laplacian, newton_result, newton_solve, residual,
                      solve_minimal)
from extremal.solver import _check_minimal, scaled_residual

from conftest import SPECS, mesh

# minimal disk solution: u = 2 log((1+b)/(1+b r^2)), lambda = 8b/(1+b)^2
B_MINIMAL = 3 - 2 * math.sqrt(2)


def test_residual_at_zero_E():
    m = mesh(64, 3)
    r1, r2 = residual(SPECS["E"], m, ParamPoint(1, 1), np.zeros(65), np.zeros(65))
    np.testing.assert_array_equal(r1, -1.0)
    np.testing.assert_array_equal(r2, -1.0)


def test_residual_G_quadratic_profile():
    m = mesh(64, 3)
    r = m.nodes
    u = 1 - r ** 2
    spec = SystemSpec.power("G", 2, 2)
    r1, _ = residual(spec, m, ParamPoint(1, 1), u, np.zeros_like(u))
    # -Delta(1 - r^2) = 2N and f'(u) g(0) = 2 (1 + u); the scheme is exact on quadratics
    np.testing.assert_allclose(r1, 6 - 2 * (1 - r[:-1] ** 2 + 1), atol=1e-9)


def test_singular_profile_residual_second_order():
    spec = SPECS["E"]
    errs = []
    for M in (64, 128, 256):
        m = make_mesh(M, 4)
        r = m.nodes
        u = np.zeros(M + 1)
        u[1:] = -2 * np.log(r[1:])
        r1, _ = residual(spec, m, ParamPoint(4, 4), u, u)
        errs.append(np.max(np.abs(r1[r[:-1] >= 0.25])))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) >= 1.9)


def test_operator_kills_constants_and_is_exact_on_quadratics():
    for N in (1, 2, 3, 7.5):
        m = make_mesh(40, N, 1.3)
        np.testing.assert_allclose(neg_laplacian(m, np.ones(41)), 0.0, atol=1e-9)
        np.testing.assert_allclose(neg_laplacian(m, m.nodes ** 2), -2 * N, rtol=1e-9)


def test_laplacian_matches_full_vector_form(rng):
    m = mesh(64, 3)
    w = rng.standard_normal(65)
    w[-1] = 0.0
    np.testing.assert_allclose(laplacian(m) @ w[:-1], neg_laplacian(m, w), rtol=1e-12)


def test_shape_and_boundary_errors():
    m = mesh(32, 2)
    with pytest.raises(ShapeError):
        residual(SPECS["E"], m, ParamPoint(1, 1), np.zeros(10), np.zeros(10))
    with pytest.raises(DomainError):
        residual(SPECS["E"], m, ParamPoint(1, 1), np.ones(33), np.zeros(33))


def _smooth_pair(m, rng, amp=1.0):
    k = np.arange(1, 4)
    basis = np.cos(np.outer(m.nodes, (k - 0.5) * np.pi))
    basis[-1] = 0.0
    return (amp * np.abs(basis @ rng.standard_normal(3)),
            amp * np.abs(basis @ rng.standard_normal(3)))


@pytest.mark.parametrize("name", ["E", "G33", "H22"])
@given(seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_jacobian_matches_finite_differences(name, seed):
    rng = np.random.default_rng(seed)
    m = mesh(48, 3)
    u, v = _smooth_pair(m, rng, 0.5)
    du, dv = _smooth_pair(m, rng)
    p = ParamPoint(0.7, 1.3)
    J = jacobian(SPECS[name], m, p, u, v)
    lin = J @ np.concatenate([du[:-1], dv[:-1]])
    best = np.inf
    for h in (1e-4, 1e-5, 1e-6, 1e-7):
        a = np.concatenate(residual(SPECS[name], m, p, u + h * du, v + h * dv))
        b = np.concatenate(residual(SPECS[name], m, p, u - h * du, v - h * dv))
        fd = (a - b) / (2 * h)
        best = min(best, np.linalg.norm(fd - lin) / np.linalg.norm(lin))
    assert best <= 1e-6


def test_jacobian_blocks_E_at_zero():
    m = mesh(32, 2)
    J = jacobian(SPECS["E"], m, ParamPoint(0.3, 0.7), np.zeros(33), np.zeros(33))
    M = m.M
    np.testing.assert_allclose(J[:M, M:].toarray(), -0.3 * np.eye(M))
    np.testing.assert_allclose(J[M:, :M].toarray(), -0.7 * np.eye(M))
    assert sp.linalg.norm(J[:M, :M] - laplacian(m)) == 0


def test_jacobian_G_diagonal_coefficient():
    m = mesh(32, 2)
    u = 0.5 * (1 - m.nodes ** 2)
    v = np.zeros(33)
    J = jacobian(SystemSpec.power("G", 3, 2), m, ParamPoint(1, 1), u, v)
    d = (laplacian(m) - J[:32, :32]).diagonal()
    np.testing.assert_allclose(d, 3 * 2 * (1 + u[:-1]) ** 1, rtol=1e-13)


def test_newton_disk_minimal_solution():
    sol = newton_solve(SPECS["E"], mesh(256, 2), ParamPoint(1, 1))
    assert abs(sol.u[0] - 2 * math.log(1 + B_MINIMAL)) < 1e-3
    assert abs(sol.u[0] - 0.31669) < 1e-3


def test_newton_beyond_fold_fails():
    with pytest.raises(NonConvergence):
        newton_solve(SPECS["E"], mesh(256, 2), ParamPoint(2.5, 2.5))
    with pytest.raises(NonConvergence):
        solve_minimal(SPECS["E"], mesh(256, 2), ParamPoint(2.5, 2.5))


@pytest.mark.parametrize("name", ["E", "G33", "H22"])
def test_trivial_branch_limit(name):
    sups = [newton_solve(SPECS[name], mesh(64, 3), ParamPoint(lam, lam)).sup_u
            for lam in (1e-2, 1e-4, 1e-6)]
    assert sups[0] > sups[1] > sups[2] and sups[2] < 1e-5


def test_newton_tolerance_and_iteration_cap():
    spec, m, p = SPECS["E"], mesh(128, 2), ParamPoint(1.5, 1.5)
    res = newton_result(spec, m, p)
    assert res.residual <= 1e-10
    assert scaled_residual(spec, m, p, res.sol.u, res.sol.v) == res.residual
    with pytest.raises(NonConvergence) as info:
        newton_result(spec, m, p, opts=NewtonOptions(max_iter=1))
    assert info.value.residual > 1e-10


def test_jacobian_consistent_at_every_iterate():
    spec, m, p = SPECS["G33"], mesh(64, 3), ParamPoint(0.2, 0.2)
    errs = []

    def cb(it, u, v, res):
        rng = np.random.default_rng(it)
        du, dv = _smooth_pair(m, rng)
        lin = jacobian(spec, m, p, u, v) @ np.concatenate([du[:-1], dv[:-1]])
        h = 1e-6
        a = np.concatenate(residual(spec, m, p, u + h * du, v + h * dv))
        b = np.concatenate(residual(spec, m, p, u - h * du, v - h * dv))
        errs.append(np.linalg.norm((a - b) / (2 * h) - lin) / np.linalg.norm(lin))

    newton_result(spec, m, p, opts=NewtonOptions(callback=cb))
    assert len(errs) >= 3 and max(errs) < 1e-6


@pytest.mark.parametrize("name, N, lam", [("E", 2, 1.5), ("G33", 3, 0.2), ("H22", 3, 0.5)])
def test_mesh_refinement_order(name, N, lam):
    sols = [newton_solve(SPECS[name], make_mesh(M, N), ParamPoint(lam, lam)) for M in (32, 64, 128)]
    # compare on the common coarse nodes
    d1 = np.max(np.abs(sols[0].u - sols[1].u[::2]))
    d2 = np.max(np.abs(sols[1].u[::2] - sols[2].u[::4]))
    assert math.log2(d1 / d2) >= 1.7


@pytest.mark.parametrize("name", ["E", "G33"])
def test_diagonal_symmetry(name):
    sol = newton_solve(SPECS[name], mesh(128, 3), ParamPoint(0.2, 0.2))
    assert np.max(np.abs(sol.u - sol.v)) <= 1e-10 * max(1.0, sol.sup_u)


def test_minimality_checks_reject_bad_candidates():
    m = mesh(32, 2)
    bad = SolutionPair(-0.1 * (1 - m.nodes), np.zeros(33), ParamPoint(1, 1), m)
    with pytest.raises(NotMinimalCandidate):
        _check_minimal(bad, 1e-10)
    bump = SolutionPair(np.sin(np.pi * m.nodes), np.zeros(33), ParamPoint(1, 1), m)
    with pytest.raises(NotMinimalCandidate):
        _check_minimal(bump, 1e-10)
