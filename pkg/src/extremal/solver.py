"""Finite-volume discretisation of the radial systems and a damped Newton solver.

The radial operator -(w'' + (N-1)/r w') is written in conservative form
-r^(1-N) (r^(N-1) w')' and discretised on dual cells.  At r = 0 the zero-flux
condition gives -Delta_h w(0) = 2N (w_0 - w_1) / r_1^2, which is the one-sided
approximation of -N w''(0).  The scheme is exact on quadratics.

Unknowns are the M nodal values at r_0 .. r_{M-1}; r_M = 1 carries the
Dirichlet condition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import ParamPoint, RadialMesh, SolutionPair, SystemSpec
from .errors import DomainError, NonConvergence, NotMinimalCandidate, ShapeError


def edge_coefficients(mesh: RadialMesh) -> np.ndarray:
    """Flux coefficient r_{j+1/2}^(N-1) / h_j for each cell."""
    return mesh.face_weights / mesh.h ** 2


def stiffness(mesh: RadialMesh) -> sp.csc_matrix:
    """Symmetric M x M stiffness matrix K on the interior unknowns."""
    a = edge_coefficients(mesh)
    M = mesh.M
    diag = a.copy()
    diag[1:] += a[:-1]
    off = -a[:-1]
    return sp.diags([off, diag, off], [-1, 0, 1], shape=(M, M), format="csc")


def laplacian(mesh: RadialMesh) -> sp.csc_matrix:
    """-Delta_h = V^{-1} K restricted to interior unknowns (Dirichlet at r = 1)."""
    return sp.diags(1.0 / mesh.weights[:-1]) @ stiffness(mesh)


def neg_laplacian(mesh: RadialMesh, w) -> np.ndarray:
    """-Delta_h w at nodes 0..M-1 for a full nodal vector (w_M need not vanish)."""
    w = np.asarray(w, dtype=float)
    mesh.check(w)
    flux = edge_coefficients(mesh) * np.diff(w)
    out = -flux
    out[1:] += flux[:-1]
    return out / mesh.weights[:-1]


def _check_pair(mesh, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (mesh.M + 1,) or v.shape != (mesh.M + 1,):
        raise ShapeError(f"grid functions must have {mesh.M + 1} nodes, got {u.shape}, {v.shape}")
    if u[-1] != 0.0 or v[-1] != 0.0:
        raise DomainError("u and v must vanish at r = 1")
    return u, v


def residual(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, u, v):
    u, v = _check_pair(mesh, u, v)
    r1, r2 = spec.rhs(u[:-1], v[:-1])
    return (neg_laplacian(mesh, u) - p.lam * r1,
            neg_laplacian(mesh, v) - p.gamma * r2)


def jacobian(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, u, v) -> sp.csc_matrix:
    """Exact derivative of ``residual`` w.r.t. the interior unknowns, ordered (u, v)."""
    u, v = _check_pair(mesh, u, v)
    A = laplacian(mesh)
    d11, d12, d21, d22 = spec.rhs_derivatives(u[:-1], v[:-1])
    return sp.bmat([
        [A - sp.diags(p.lam * d11), sp.diags(-p.lam * d12)],
        [sp.diags(-p.gamma * d21), A - sp.diags(p.gamma * d22)],
    ], format="csc")


@dataclass
class NewtonOptions:
    tol: float = 1e-10          # componentwise backward error of the equations
    step_tol: float = 1e-9      # final Newton correction relative to max(1, |w|)
    max_iter: int = 50
    max_halvings: int = 20
    check_minimal: bool = True
    callback: Optional[Callable] = None


@dataclass
class NewtonResult:
    sol: SolutionPair
    residual: float
    iterations: int


def _residual_scale(spec, mesh, p, u, v):
    """Componentwise magnitude (|(-Delta_h)| |w| + lam |RHS|) of both residual terms."""
    s1, s2 = spec.rhs(u[:-1], v[:-1])
    a = edge_coefficients(mesh)

    def lap_abs(w):
        aw = np.abs(w)
        out = a * (aw[:-1] + aw[1:])
        out[1:] += a[:-1] * (aw[1:-1] + aw[:-2])
        return out / mesh.weights[:-1]

    tiny = np.finfo(float).tiny
    return np.concatenate([lap_abs(u) + p.lam * np.abs(s1) + tiny,
                           lap_abs(v) + p.gamma * np.abs(s2) + tiny])


def scaled_residual(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, u, v) -> float:
    """Componentwise relative residual max_j |R_j| / (|(-Delta_h)| |w| + lam |RHS|)_j.

    This is the backward error of the discrete equations; unlike the plain
    max-norm it does not floor at the rounding level of the 1/h^2 stencil
    entries near r = 0 on graded meshes.
    """
    u, v = _check_pair(mesh, u, v)
    with np.errstate(all="ignore"):
        r = np.concatenate(residual(spec, mesh, p, u, v))
        n = float(np.max(np.abs(r) / _residual_scale(spec, mesh, p, u, v)))
    return n if np.isfinite(n) else np.inf


def newton_result(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint,
                  init: Optional[SolutionPair] = None,
                  opts: Optional[NewtonOptions] = None) -> NewtonResult:
    """Damped Newton iteration.

    Converged when ``scaled_residual`` <= tol and the next Newton correction
    is below ``step_tol``; that correction is applied before returning.
    """
    opts = opts or NewtonOptions()
    M = mesh.M
    if init is None:
        u = np.zeros(M + 1)
        v = np.zeros(M + 1)
    else:
        if init.mesh.M != M:
            raise ShapeError("initial guess lives on a different mesh")
        u, v = _check_pair(mesh, init.u, init.v)
        u, v = u.copy(), v.copy()

    res = scaled_residual(spec, mesh, p, u, v)
    for it in range(opts.max_iter + 1):
        if opts.callback is not None:
            opts.callback(it, u.copy(), v.copy(), res)
        if it == opts.max_iter:
            break
        F = np.concatenate(residual(spec, mesh, p, u, v))
        try:
            lu = splu(jacobian(spec, mesh, p, u, v))
        except RuntimeError:
            raise NonConvergence("singular Newton system", res, it) from None
        step = lu.solve(-F)
        if not np.all(np.isfinite(step)):
            raise NonConvergence("singular Newton system", res, it)
        # a small backward error alone is not enough near a fold, where J is
        # nearly singular; the Newton correction must be small as well
        scale = max(1.0, float(np.max(np.abs(u))), float(np.max(np.abs(v))))
        if res <= opts.tol and np.max(np.abs(step)) <= opts.step_tol * scale:
            un, vn = u.copy(), v.copy()
            un[:-1] += step[:M]
            vn[:-1] += step[M:]
            rn = scaled_residual(spec, mesh, p, un, vn)
            if rn <= opts.tol:
                u, v, res = un, vn, rn
            sol = SolutionPair(u, v, p, mesh)
            if opts.check_minimal:
                _check_minimal(sol, opts.tol)
            return NewtonResult(sol, res, it + 1)
        # natural monotonicity test: the simplified Newton correction
        # J(x)^{-1} F(x + alpha dx) must shrink relative to dx.  Being affine
        # invariant it tolerates the large, badly scaled residuals near r = 0.
        norm0 = np.linalg.norm(step)
        alpha = 1.0
        for _ in range(opts.max_halvings + 1):
            un = u.copy()
            vn = v.copy()
            un[:-1] += alpha * step[:M]
            vn[:-1] += alpha * step[M:]
            with np.errstate(all="ignore"):
                simp = lu.solve(-np.concatenate(residual(spec, mesh, p, un, vn)))
            if np.linalg.norm(simp) <= (1.0 - 0.25 * alpha) * norm0 or norm0 == 0.0:
                break
            alpha *= 0.5
        else:
            raise NonConvergence("line search failed", res, it)
        u, v = un, vn
        res = scaled_residual(spec, mesh, p, u, v)
    raise NonConvergence(f"no convergence after {opts.max_iter} iterations", res, opts.max_iter)


def newton_solve(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint,
                 init: Optional[SolutionPair] = None,
                 opts: Optional[NewtonOptions] = None) -> SolutionPair:
    return newton_result(spec, mesh, p, init, opts).sol


def _check_minimal(sol: SolutionPair, tol: float):
    for name, w in (("u", sol.u), ("v", sol.v)):
        slack = tol * max(1.0, float(np.max(np.abs(w))))
        if np.min(w) < -slack:
            raise NotMinimalCandidate(f"{name} is negative (min {np.min(w):.3e})")
        if np.max(np.diff(w)) > slack:
            raise NotMinimalCandidate(f"{name} is not radially decreasing")
