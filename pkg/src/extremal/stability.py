"""Principal eigenpair of the coupled linearisation and stability-inequality margins.

All integrals use the mesh quadrature (dual-cell weights for nodal terms,
midpoint weights with difference quotients for gradient terms).  With these
choices the discrete gradient energy equals phi^T K phi for the same stiffness
matrix K used by the solver, so the inequalities hold exactly for discretely
semi-stable solutions up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from .core import ParamPoint, RadialMesh, SolutionPair, SystemSpec, TestFunctionPair
from .errors import DomainError, EigFailure, NotPrincipal, VariantError
from .solver import edge_coefficients, jacobian


@dataclass(frozen=True, eq=False)
class Eigenpair:
    eta: float
    zeta: np.ndarray
    chi: np.ndarray
    rel_residual: float = 0.0


def dirichlet_mu1(mesh: RadialMesh) -> float:
    """Smallest eigenvalue of the discrete -Delta (symmetrised tridiagonal problem)."""
    a = edge_coefficients(mesh)
    w = mesh.weights[:-1]
    diag = a.copy()
    diag[1:] += a[:-1]
    s = 1.0 / np.sqrt(w)
    d = diag * s * s
    e = -a[:-1] * s[:-1] * s[1:]
    vals = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))
    return float(vals[0])


def default_eig_tol(mesh: RadialMesh) -> float:
    return 1e-8 * dirichlet_mu1(mesh)


def principal_eigenpair(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint,
                        sol: SolutionPair, *, shift: Optional[float] = None,
                        tol: float = 0.0, max_iter: Optional[int] = None) -> Eigenpair:
    """Principal eigenpair of the Jacobian by shift-invert Arnoldi (ARPACK).

    With the default shift -mu_1, J - shift*I is an M-matrix on the minimal
    branch, so its inverse is positive and the principal eigenvalue is the
    one closest to the shift.  ``tol = 0`` asks ARPACK for machine precision.
    """
    M = mesh.M
    J = jacobian(spec, mesh, p, sol.u, sol.v)
    if shift is None:
        shift = -dirichlet_mu1(mesh)
    try:
        vals, vecs = eigs(J, k=2, sigma=shift, which="LM", v0=np.ones(2 * M),
                          tol=tol, maxiter=max_iter)
    except (ArpackNoConvergence, ArpackError, RuntimeError) as exc:
        raise EigFailure(f"shift-invert Arnoldi failed: {exc}") from exc
    k = int(np.argmin(np.abs(vals - shift)))
    eta = float(vals[k].real)
    x = vecs[:, k]
    x = (x * np.exp(-1j * np.angle(x[np.argmax(np.abs(x))]))).real
    x /= np.linalg.norm(x)
    rel = float(np.linalg.norm(J @ x - eta * x) / max(np.linalg.norm(J @ x), abs(shift), 1.0))
    zeta = np.append(x[:M], 0.0)
    chi = np.append(x[M:], 0.0)
    if np.any(zeta[:-1] <= 0) or np.any(chi[:-1] <= 0):
        raise NotPrincipal(f"eigenvector changes sign (eta = {eta:.6g})")
    scale = float(np.max(zeta))
    return Eigenpair(eta, zeta / scale, chi / scale, rel)


def _gradient_energy(mesh: RadialMesh, phi) -> float:
    return mesh.integrate_cells(mesh.diff(phi) ** 2)


def _coefficients(spec, sol):
    f, g = spec.f.eval, spec.g.eval
    u, v = sol.u, sol.v
    return (f(u, 0), f(u, 1), f(u, 2)), (g(v, 0), g(v, 1), g(v, 2))


def gra_sides(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, sol: SolutionPair,
              t: TestFunctionPair):
    if spec.variant != "G":
        raise VariantError("the gradient-system inequality applies to variant G only")
    mesh.check(t.phi)
    (f0, f1, f2), (g0, g1, g2) = _coefficients(spec, sol)
    phi, psi = t.phi, t.psi
    lhs = mesh.integrate(f2 * g0 * phi ** 2 + f0 * g2 * psi ** 2 + 2 * f1 * g1 * phi * psi)
    rhs = _gradient_energy(mesh, phi) / p.lam + _gradient_energy(mesh, psi) / p.gamma
    return lhs, rhs


def check_gra(spec, mesh, p, sol, t: TestFunctionPair) -> float:
    lhs, rhs = gra_sides(spec, mesh, p, sol, t)
    return rhs - lhs


def twist_sides(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, sol: SolutionPair,
                t: TestFunctionPair):
    if spec.variant != "H":
        raise VariantError("the twisted inequality applies to variant H only")
    mesh.check(t.phi)
    (f0, f1, f2), (g0, g1, g2) = _coefficients(spec, sol)
    phi, psi = t.phi, t.psi
    cross = np.sqrt(f0 * f2 * g0 * g2)
    lhs = mesh.integrate(f1 * g1 * (phi ** 2 + psi ** 2) + 2 * cross * phi * psi)
    rhs = _gradient_energy(mesh, phi) / p.lam + _gradient_energy(mesh, psi) / p.gamma
    return lhs, rhs


def check_twist(spec, mesh, p, sol, t: TestFunctionPair) -> float:
    lhs, rhs = twist_sides(spec, mesh, p, sol, t)
    return rhs - lhs


def _weight(mesh, p, sol):
    return mesh.diff(sol.u) ** 2 / p.lam + mesh.diff(sol.v) ** 2 / p.gamma


def radialstab_sides(mesh: RadialMesh, p: ParamPoint, sol: SolutionPair, phi):
    phi = np.asarray(phi, dtype=float)
    mesh.check(phi)
    if phi[-1] != 0.0:
        raise DomainError("phi must vanish at r = 1")
    W = _weight(mesh, p, sol)
    lhs = (mesh.N - 1) * mesh.integrate_cells(W * mesh.at_mid(phi) ** 2)
    rhs = mesh.integrate_cells(W * mesh.diff(mesh.nodes * phi) ** 2)
    return lhs, rhs


def check_radialstab(mesh, p, sol, phi) -> float:
    lhs, rhs = radialstab_sides(mesh, p, sol, phi)
    return rhs - lhs


def step3_testfn(N: float, r: float, t) -> np.ndarray:
    """Piecewise test function: flat on [0,r], power decay to 1/2, linear to zero at 1."""
    if not 0 < r < 0.5:
        raise DomainError(f"need 0 < r < 1/2, got {r}")
    t = np.asarray(t, dtype=float)
    a = np.sqrt(N - 1.0) + 1.0
    out = np.empty_like(t)
    inner = t <= r
    middle = (t > r) & (t <= 0.5)
    outer = t > 0.5
    out[inner] = r ** -a
    out[middle] = t[middle] ** -a
    out[outer] = 2.0 ** (a + 1.0) * (1.0 - t[outer])
    return out


def step3_constant(N: float) -> float:
    """C_N with int_0^r W t^(N-1) <= C_N r^(2 sqrt(N-1)+2) int_{1/2}^1 W t^(N-1).

    Obtained by inserting the piecewise test function: the middle pieces cancel
    exactly, leaving (N-2) r^(-2a) int_0^r W <= 4^(a+1) int_{1/2}^1 W (1-2t)^2 with
    a = sqrt(N-1) + 1.
    """
    if not N > 2:
        raise DomainError("the inner-ball energy bound needs N > 2")
    return 4.0 ** (np.sqrt(N - 1.0) + 2.0) / (N - 2.0)


def step3_bound(mesh: RadialMesh, p: ParamPoint, sol: SolutionPair, r: float):
    """(inner energy on [0,r], bound C_N r^(2a) * outer-annulus energy)."""
    if not 0 < r < 0.5:
        raise DomainError(f"need 0 < r < 1/2, got {r}")
    W = _weight(mesh, p, sol)
    inner = mesh.integrate_cells(np.where(mesh.mid <= r, W, 0.0))
    outer = mesh.integrate_cells(np.where(mesh.mid > 0.5, W, 0.0))
    a = np.sqrt(mesh.N - 1.0)
    return inner, step3_constant(mesh.N) * r ** (2 * a + 2) * outer


def random_test_pair(mesh: RadialMesh, rng: np.random.Generator, modes: int = 5) -> TestFunctionPair:
    """Truncated series of sin((k - 1/2) pi (1 - r)); every term vanishes at r = 1."""
    k = np.arange(1, modes + 1)
    basis = np.sin(np.outer(1.0 - mesh.nodes, (k - 0.5) * np.pi))
    basis[-1] = 0.0
    c = rng.standard_normal((2, modes)) / k
    return TestFunctionPair(basis @ c[0], basis @ c[1])


@dataclass(frozen=True)
class SweepResult:
    min_margin: float
    min_relative: float
    count: int
    passed: bool


def inequality_sweep(kind: str, spec: SystemSpec, mesh: RadialMesh, p: ParamPoint,
                     sol: SolutionPair, *, n: int = 100, seed: int = 0,
                     rel_tol: float = 1e-6) -> SweepResult:
    """Evaluate one inequality on ``n`` seeded random test pairs.

    A pair passes when margin >= -rel_tol * rhs (rhs = gradient energy side).
    """
    rng = np.random.default_rng(seed)
    worst, worst_rel, ok = np.inf, np.inf, True
    for _ in range(n):
        t = random_test_pair(mesh, rng)
        if kind == "gra":
            lhs, rhs = gra_sides(spec, mesh, p, sol, t)
        elif kind == "twist":
            lhs, rhs = twist_sides(spec, mesh, p, sol, t)
        elif kind == "radialstab":
            lhs, rhs = radialstab_sides(mesh, p, sol, t.phi)
        else:
            raise ValueError(f"unknown inequality {kind!r}")
        margin = rhs - lhs
        worst = min(worst, margin)
        worst_rel = min(worst_rel, margin / rhs if rhs > 0 else margin)
        ok &= margin >= -rel_tol * abs(rhs)
    return SweepResult(float(worst), float(worst_rel), n, bool(ok))
