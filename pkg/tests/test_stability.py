import math

import numpy as np
import pytest
from scipy.linalg import eigh
from scipy.optimize import brentq

from extremal import (DomainError, ParamPoint, SolutionPair, TestFunctionPair, VariantError,
                      check_gra, check_radialstab, check_twist, dirichlet_mu1, inequality_sweep,
                      jacobian, make_mesh, neg_laplacian, newton_solve, principal_eigenpair,
                      random_test_pair, step3_bound, step3_constant, step3_testfn)
from extremal.solver import laplacian
from extremal.stability import radialstab_sides, twist_sides

from conftest import SPECS, branch, mesh


def _zero_pair(m):
    return TestFunctionPair(np.zeros(m.M + 1), np.zeros(m.M + 1))


def test_mu1_matches_dense_eigensolve():
    m = make_mesh(64, 3, 1.3)
    K = laplacian(m).toarray()
    w = m.weights[:-1]
    dense = eigh(K * w[:, None], np.diag(w), eigvals_only=True)[0]
    assert dirichlet_mu1(m) == pytest.approx(dense, rel=1e-10)
    # continuum value for the ball in 3D is pi^2
    assert dirichlet_mu1(make_mesh(512, 3)) == pytest.approx(math.pi ** 2, rel=1e-4)


def test_eta_near_zero_solution_interval():
    m, eps = make_mesh(256, 1), 1e-4
    p = ParamPoint(eps, eps)
    sol = newton_solve(SPECS["E"], m, p)
    ep = principal_eigenpair(SPECS["E"], m, p, sol)
    # u = v ~ 0: the symmetric mode sees -Delta - eps
    assert ep.eta == pytest.approx(dirichlet_mu1(m) - eps, rel=1e-6)
    assert np.max(np.abs(ep.zeta - ep.chi)) < 1e-6


def test_eigenpair_normalisation_and_positivity():
    br = branch("G33", 3, 1.25)
    pt = br.points[len(br.points) // 2]
    ep = principal_eigenpair(SPECS["G33"], mesh(256, 3), pt.sol.param, pt.sol)
    assert ep.eta > 0 and np.max(ep.zeta) == 1.0
    assert np.all(ep.zeta[:-1] > 0) and np.all(ep.chi[:-1] > 0)
    assert ep.zeta[-1] == ep.chi[-1] == 0.0


def test_eta_positive_mid_ray():
    m = mesh(256, 2)
    p = ParamPoint(1.0, 1.0)
    sol = newton_solve(SPECS["E"], m, p)
    assert principal_eigenpair(SPECS["E"], m, p, sol).eta > 0.1


@pytest.mark.parametrize("name, N, sigma", [("E", 2, 1.0), ("E", 3, 0.8), ("G33", 3, 1.0),
                                            ("H22", 3, 1.25)])
def test_eta_crosses_zero_at_fold(name, N, sigma):
    br = branch(name, N, sigma)
    mu1 = dirichlet_mu1(mesh(256, N))
    etas = [pt.eta for pt in br.points]
    assert min(etas) >= -1e-6 * mu1
    # near a quadratic fold eta ~ sqrt(lambda* - lambda)
    f = br.fold
    assert etas[-1] <= 10 * mu1 * math.sqrt(f.width / f.lambda_ok)
    assert etas[-1] < 1e-3 * etas[0]


def _hardy_eta(N):
    """Principal eigenvalue of -Delta - 2(N-2)/r^2 on the unit ball (N = 11: j_{3/2,1}^2)."""
    nu = math.sqrt((N - 2) ** 2 / 4 - 2 * (N - 2))
    assert nu == 1.5
    j = brentq(lambda x: math.tan(x) - x, 4.0, 4.6)
    return j * j


def test_eta_at_singular_extremal_above_critical_dimension():
    # for N = 11 the branch ends at u* = -2 log r; the linearisation there is
    # the Hardy operator, whose principal eigenvalue stays well away from 0
    br = branch("E", 11)
    assert br.points[-1].eta == pytest.approx(_hardy_eta(11), rel=0.01)


@pytest.mark.parametrize("name, N, lam", [("E", 2, 1.0), ("G33", 3, 0.2), ("H22", 3, 0.5)])
def test_eta_refinement_order(name, N, lam):
    p = ParamPoint(lam, lam)
    etas = []
    for M in (32, 64, 128):
        m = make_mesh(M, N)
        etas.append(principal_eigenpair(SPECS[name], m, p, newton_solve(SPECS[name], m, p)).eta)
    assert math.log2(abs(etas[1] - etas[0]) / abs(etas[2] - etas[1])) >= 1.7


@pytest.mark.parametrize("name, N", [("E", 2), ("G33", 3), ("H22", 3), ("E", 11)])
def test_rayleigh_consistency(name, N):
    m = mesh(256, N)
    w = np.concatenate([m.weights[:-1]] * 2)
    for pt in branch(name, N).points[::3]:
        ep = principal_eigenpair(SPECS[name], m, pt.sol.param, pt.sol)
        x = np.concatenate([ep.zeta[:-1], ep.chi[:-1]])
        r = jacobian(SPECS[name], m, pt.sol.param, pt.sol.u, pt.sol.v) @ x - ep.eta * x
        # relative to the diffusion part, which stays O(1) even where eta -> 0
        scale = np.concatenate([neg_laplacian(m, ep.zeta), neg_laplacian(m, ep.chi)])
        assert math.sqrt(np.sum(w * r * r) / np.sum(w * scale * scale)) <= 1e-8


def test_zero_test_functions_give_zero_margin():
    m = mesh(256, 3)
    for name, check in (("G33", check_gra), ("H22", check_twist)):
        pt = branch(name, 3).points[5]
        assert check(SPECS[name], m, pt.sol.param, pt.sol, _zero_pair(m)) == 0.0
    pt = branch("E", 3).points[5]
    assert check_radialstab(m, pt.sol.param, pt.sol, np.zeros(m.M + 1)) == 0.0


@pytest.mark.parametrize("name, check", [("G33", check_gra), ("H22", check_twist)])
def test_eigenpair_satisfies_stability_inequality(name, check):
    m = mesh(256, 3)
    for pt in branch(name, 3).points[::4]:
        ep = principal_eigenpair(SPECS[name], m, pt.sol.param, pt.sol)
        t = TestFunctionPair(ep.zeta, ep.chi)
        rhs = m.integrate_cells(m.diff(ep.zeta) ** 2) / pt.lam
        assert check(SPECS[name], m, pt.sol.param, pt.sol, t) >= -1e-6 * rhs


def test_variant_mismatch():
    m = mesh(64, 3)
    sol = SolutionPair.zero(m, ParamPoint(1, 1))
    with pytest.raises(VariantError):
        check_gra(SPECS["H22"], m, sol.param, sol, _zero_pair(m))
    with pytest.raises(VariantError):
        check_twist(SPECS["G33"], m, sol.param, sol, _zero_pair(m))


def test_twist_integrand_closed_form():
    # f = (1+u)^2, g = (1+v)^2: sqrt(f f'' g g'') = 2 (1+u)(1+v)
    m = mesh(256, 3)
    pt = branch("H22", 3).points[8]
    u, v = pt.sol.u, pt.sol.v
    phi = 1 - m.nodes ** 2
    lhs, _ = twist_sides(SPECS["H22"], m, pt.sol.param, pt.sol, TestFunctionPair(phi, phi))
    f1, g1 = 2 * (1 + u), 2 * (1 + v)
    expected = m.integrate(f1 * g1 * 2 * phi ** 2 + 2 * 2 * (1 + u) * (1 + v) * phi ** 2)
    assert lhs == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("kind, name, N", [("gra", "G33", 3), ("twist", "H22", 3),
                                           ("radialstab", "E", 3), ("radialstab", "G33", 3)])
def test_random_sweeps_along_branch(kind, name, N):
    m = mesh(256, N)
    for pt in branch(name, N).points[::4]:
        res = inequality_sweep(kind, SPECS[name], m, pt.sol.param, pt.sol, n=25, seed=7)
        assert res.passed and res.count == 25


def test_sweep_rejects_unknown_kind():
    m = mesh(64, 3)
    sol = SolutionPair.zero(m, ParamPoint(1, 1))
    with pytest.raises(ValueError):
        inequality_sweep("nope", SPECS["E"], m, sol.param, sol)


def test_random_test_pairs_vanish_at_boundary(rng):
    m = mesh(64, 3)
    for _ in range(10):
        t = random_test_pair(m, rng)
        assert t.phi[-1] == 0.0 and t.psi[-1] == 0.0


def test_radialstab_linear_test_function():
    m = mesh(256, 3)
    for pt in branch("E", 3).points:
        lhs, rhs = radialstab_sides(m, pt.sol.param, pt.sol, 1 - m.nodes)
        assert rhs - lhs >= -1e-6 * rhs


def test_radialstab_requires_zero_boundary():
    m = mesh(64, 3)
    sol = SolutionPair.zero(m, ParamPoint(1, 1))
    with pytest.raises(DomainError):
        check_radialstab(m, sol.param, sol, np.ones(65))


def test_step3_testfn_examples():
    t = np.array([0.0, 0.1, 0.2, 0.5, 0.75, 1.0])
    out = step3_testfn(10, 0.1, t)
    assert out[-1] == 0.0
    # N = 10: the middle piece is t^-4
    assert out[2] == pytest.approx(0.2 ** -4)
    assert out[0] == out[1] == pytest.approx(0.1 ** -4)
    assert out[3] == pytest.approx(2 ** 4)
    assert out[4] == pytest.approx(2 ** 5 * 0.25)
    with pytest.raises(DomainError):
        step3_testfn(10, 0.5, t)
    with pytest.raises(DomainError):
        step3_testfn(10, 0.0, t)


@pytest.mark.parametrize("N", [3, 7.5, 11])
def test_step3_testfn_continuity(N):
    a = math.sqrt(N - 1) + 1
    r, h = 0.2, 1e-12
    left, right = step3_testfn(N, r, [0.5 - h, 0.5 + h])
    assert left == pytest.approx(2 ** a, rel=1e-9) and right == pytest.approx(2 ** a, rel=1e-9)
    left, right = step3_testfn(N, r, [r - h, r + h])
    assert left == pytest.approx(right, rel=1e-9)


def test_step3_constant_value():
    assert step3_constant(11) == pytest.approx(4 ** (math.sqrt(10) + 2) / 9)
    with pytest.raises(DomainError):
        step3_constant(2)


@pytest.mark.parametrize("N", [3, 11])
def test_step3_bound_and_radialstab(N):
    m = mesh(256, N)
    for pt in branch("E", N).points[::3]:
        for r in (0.05, 0.1, 0.2, 0.4):
            lhs, rhs = radialstab_sides(m, pt.sol.param, pt.sol, step3_testfn(N, r, m.nodes))
            assert rhs - lhs >= -1e-6 * rhs
            inner, bound = step3_bound(m, pt.sol.param, pt.sol, r)
            assert inner <= bound
