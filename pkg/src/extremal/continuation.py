"""Minimal-branch continuation along rays gamma = sigma * lambda and fold bracketing."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.linalg import spsolve

from .core import (Branch, BranchPoint, Fold, ParamPoint, RadialMesh, Ray, SolutionPair,
                   SystemSpec, UpsilonCurve, UpsilonSample)
from .errors import (BadStart, EigFailure, ExtremalError, IncompleteBranch,
                     NonConvergence, NotMinimalCandidate, NotPrincipal)
from .solver import NewtonOptions, jacobian, newton_result
from .stability import default_eig_tol, principal_eigenpair

log = logging.getLogger(__name__)

_STEP_FAILURES = (NonConvergence, NotMinimalCandidate, EigFailure, NotPrincipal)


@dataclass
class ContinuationOptions:
    lambda0: Optional[float] = None
    min_step: float = 1e-8          # relative bracket width at which tracing stops
    easy_iterations: int = 4        # Newton iterations counted as an easy step
    max_steps: int = 5000
    eig_tol: Optional[float] = None  # default 1e-8 * mu_1(mesh)
    probe_start: float = 1e-3
    predictor: bool = True          # tangent predictor; False warm-starts from the last point
    newton: NewtonOptions = field(default_factory=NewtonOptions)


def default_lambda0(spec: SystemSpec, mesh: RadialMesh, sigma: float,
                    opts: Optional[ContinuationOptions] = None) -> float:
    """0.05 times the first lambda, doubling from ``probe_start``, where a cold Newton solve fails."""
    opts = opts or ContinuationOptions()
    ray = Ray(sigma)
    lam = opts.probe_start
    for _ in range(80):
        try:
            newton_result(spec, mesh, ray.point(lam), None, opts.newton)
        except (NonConvergence, NotMinimalCandidate):
            return 0.05 * lam
        lam *= 2.0
    raise BadStart("cold Newton never failed while probing for lambda0")


def tangent_predictor(spec: SystemSpec, mesh: RadialMesh, sol: SolutionPair,
                      sigma: float, lam: float) -> SolutionPair:
    """First-order extrapolation of the branch through ``sol`` to parameter ``lam``.

    Differentiating F(w, lam) = 0 along the ray gives J dw/dlam = (R1, sigma R2).
    """
    u, v = sol.u, sol.v
    r1, r2 = spec.rhs(u[:-1], v[:-1])
    J = jacobian(spec, mesh, sol.param, u, v)
    dw = spsolve(J.tocsc(), np.concatenate([r1, sigma * r2]))
    dlam = lam - sol.param.lam
    M = mesh.M
    if not np.all(np.isfinite(dw)):
        return sol
    return SolutionPair(np.append(u[:-1] + dlam * dw[:M], 0.0),
                        np.append(v[:-1] + dlam * dw[M:], 0.0), Ray(sigma).point(lam), mesh)


def _accept(spec, mesh, ray, lam, init, opts, eig_tol):
    p = ray.point(lam)
    res = newton_result(spec, mesh, p, init, opts.newton)
    eig = principal_eigenpair(spec, mesh, p, res.sol)
    if eig.eta < -eig_tol:
        raise NotMinimalCandidate(f"negative principal eigenvalue {eig.eta:.3e}")
    return BranchPoint(res.sol, res.residual, eig.eta, res.iterations), res.iterations


def trace_ray(spec: SystemSpec, mesh: RadialMesh, sigma: float,
              opts: Optional[ContinuationOptions] = None,
              lam_stop: Optional[float] = None) -> Branch:
    """Follow the minimal branch upward in lambda until the fold is bracketed.

    Steps double after easy Newton solves and halve after failures.  A failure
    only ends the trace once the failing step is below ``min_step * lambda_ok``;
    earlier failures may be spurious (warm start outside the Newton basin).
    With ``lam_stop`` the trace ends early, without a fold, once that value is
    accepted.
    """
    opts = opts or ContinuationOptions()
    ray = Ray(sigma)
    eig_tol = opts.eig_tol if opts.eig_tol is not None else default_eig_tol(mesh)
    lam0 = opts.lambda0 if opts.lambda0 is not None else default_lambda0(spec, mesh, sigma, opts)
    try:
        first, _ = _accept(spec, mesh, ray, lam0, None, opts, eig_tol)
    except _STEP_FAILURES as exc:
        raise BadStart(f"cannot solve at lambda0 = {lam0:.6g}: {exc}") from exc

    points = [first]
    events = []
    lam_ok, lam_fail = lam0, math.inf
    step = lam0
    converged = False
    for _ in range(opts.max_steps):
        if lam_stop is not None and lam_ok >= lam_stop:
            break
        trial = lam_ok + step if lam_stop is None else min(lam_ok + step, lam_stop)
        init = points[-1].sol
        if opts.predictor:
            init = tangent_predictor(spec, mesh, init, sigma, trial)
        try:
            pt, iters = _accept(spec, mesh, ray, trial, init, opts, eig_tol)
        except _STEP_FAILURES as exc:
            if isinstance(exc, NotMinimalCandidate) and "eigenvalue" in str(exc):
                events.append(("negative_eta", trial, str(exc)))
            lam_fail = trial
            if step <= opts.min_step * lam_ok:
                converged = True
                break
            step *= 0.5
            continue
        points.append(pt)
        lam_ok = trial
        if lam_fail <= lam_ok:
            lam_fail = math.inf   # the earlier failure was spurious
        if iters <= opts.easy_iterations:
            step *= 2.0

    fold = None
    if math.isfinite(lam_fail) and not (lam_stop is not None and lam_ok >= lam_stop):
        fold = Fold(0.5 * (lam_ok + lam_fail), lam_ok, lam_fail, converged)
    log.debug("ray sigma=%g: %d points, fold %s", sigma, len(points), fold)
    return Branch(spec, replace(ray, lam_lo=lam0, lam_hi=lam_fail), tuple(points), fold,
                  tuple(events))


def solve_minimal(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint,
                  opts: Optional[ContinuationOptions] = None) -> BranchPoint:
    """Minimal solution at ``p`` by continuation from small lambda along its ray.

    Raises NonConvergence when the fold is bracketed below ``p.lam``.
    """
    opts = opts or ContinuationOptions()
    ray = Ray(p.sigma)
    lam0 = opts.lambda0 if opts.lambda0 is not None else default_lambda0(spec, mesh, p.sigma, opts)
    if p.lam <= lam0:
        eig_tol = opts.eig_tol if opts.eig_tol is not None else default_eig_tol(mesh)
        return _accept(spec, mesh, ray, p.lam, None, opts, eig_tol)[0]
    br = trace_ray(spec, mesh, p.sigma, replace(opts, lambda0=lam0), lam_stop=p.lam)
    last = br.points[-1]
    if br.fold is not None or last.lam != p.lam:
        bound = br.fold.lambda_star if br.fold is not None else last.lam
        raise NonConvergence(f"no minimal solution at lambda = {p.lam:.6g}; branch ends near {bound:.6g}",
                             float("nan"), 0)
    return last


def extremal_estimate(branch: Branch) -> SolutionPair:
    """Last accepted solution below the fold, tagged with the fold bracket."""
    if branch.fold is None or not branch.fold.converged:
        raise IncompleteBranch("branch has no converged fold bracket")
    if len(branch.points) < 3:
        raise IncompleteBranch("need at least three branch points")
    sol = branch.points[-1].sol
    return replace(sol, bracket=(branch.fold.lambda_ok, branch.fold.lambda_fail))


def _upsilon_sample(args) -> UpsilonSample:
    spec, mesh, sigma, opts = args
    try:
        br = trace_ray(spec, mesh, sigma, opts)
        if br.fold is None or not br.fold.converged:
            raise IncompleteBranch("fold not bracketed")
    except ExtremalError as exc:
        nan = float("nan")
        return UpsilonSample(sigma, nan, nan, nan, f"{type(exc).__name__}: {exc}")
    lam = br.fold.lambda_star
    return UpsilonSample(sigma, lam, sigma * lam, br.fold.width)


def trace_upsilon(spec: SystemSpec, mesh: RadialMesh, sigmas: Sequence[float],
                  opts: Optional[ContinuationOptions] = None, workers: int = 1) -> UpsilonCurve:
    """One ray per sigma; failures become samples carrying an error string."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas or any(not s > 0 for s in sigmas):
        raise ValueError("sigmas must be a nonempty list of positive numbers")
    jobs = [(spec, mesh, s, opts) for s in sorted(set(sigmas))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_upsilon_sample, jobs))
    else:
        samples = [_upsilon_sample(j) for j in jobs]
    return UpsilonCurve(tuple(samples))
