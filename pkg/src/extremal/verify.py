"""Closed-form threshold algebra and executable comparison / integral checks.

Slack convention: every slack is oriented so that a positive value means the
condition holds.  Strict conditions pass only when slack > STRICT_TOL.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .continuation import extremal_estimate
from .core import POWER, Branch, ParamPoint, RadialMesh, SolutionPair, SystemSpec
from .errors import DomainError, HypothesisNotMet, NoRoot, VariantError

STRICT_TOL = 1e-12


def t_plus(p: float) -> float:
    if not p >= 1:
        raise DomainError(f"t_plus needs p >= 1, got {p}")
    return p + math.sqrt(p * (p - 1.0))


def L_func(q: float) -> float:
    if not q > 1:
        raise DomainError(f"L needs q > 1, got {q}")
    return 1.0 + t_plus(q) / (q - 1.0)


def I_func(p: float, q: float, lam: float, gamma: float, t: float) -> float:
    if not t > 0.5:
        raise DomainError(f"I has a singular denominator for t <= 1/2, got {t}")
    ratio = gamma * q / (lam * p)
    return (p + q - 1.0 - t * t / (2.0 * t - 1.0)
            + 2.0 * p * q / (p + q) * (ratio ** (t + q - 1.0) - 1.0))


def t_zero(p: float, q: float) -> float:
    """max{t_plus(p-1), t_plus(q-1)}; needs p, q >= 2."""
    return max(t_plus(p - 1.0), t_plus(q - 1.0))


def _I_min(p, q, lam, gamma, t):
    return min(I_func(p, q, lam, gamma, t), I_func(q, p, gamma, lam, t))


def find_T(p: float, q: float, lam: float, gamma: float, *, t_max: float = 1e6,
           hyp_tol: float = STRICT_TOL) -> float:
    """Root in (t0, inf) of t -> min{I_{p,q,lam,gamma}(t), I_{q,p,gamma,lam}(t)}.

    The hypothesis I(t0) > 0 for both orderings is strict: values within
    ``hyp_tol`` of zero are treated as failing.
    """
    t0 = t_zero(p, q)
    i1, i2 = I_func(p, q, lam, gamma, t0), I_func(q, p, gamma, lam, t0)
    if not (i1 > hyp_tol and i2 > hyp_tol):
        raise HypothesisNotMet(f"I(t0) must be positive for both orderings, got {i1:.6g}, {i2:.6g}",
                               min(i1, i2))
    hi = 2.0 * t0
    while _I_min(p, q, lam, gamma, hi) >= 0:
        if hi >= t_max:
            raise NoRoot(f"no sign change of I on ({t0:.6g}, {t_max:.3g}]")
        hi = min(2.0 * hi, t_max)
    grid = np.linspace(t0, hi, 257)
    vals = np.array([_I_min(p, q, lam, gamma, t) for t in grid])
    if np.any(np.diff(vals) > 1e-12 * np.max(np.abs(vals))):
        raise NoRoot("min of the two I functions is not decreasing on the bracket")
    return brentq(lambda t: _I_min(p, q, lam, gamma, t), t0, hi, xtol=1e-14, rtol=1e-14)


def hamil_bound(p: float) -> float:
    """4 + 2/(p-1) + 2 sqrt(p/(p-1))."""
    if not p > 1:
        raise DomainError(f"need p > 1, got {p}")
    return 4.0 + 2.0 / (p - 1.0) + 2.0 * math.sqrt(p / (p - 1.0))


def cone_bounds(p: float, q: float):
    """Interval for gamma q / (lam p) inside which the I(t0) hypothesis holds."""
    t0 = t_zero(p, q)
    base = 1.0 - (p + q) / (2.0 * p * q) * min(p, q)
    if base <= 0:
        return 0.0, math.inf
    return base ** (1.0 / (t0 + q - 1.0)), base ** (-1.0 / (t0 + p - 1.0))


def exp_bounds(N: float):
    """(N-2)/8 < gamma/lam < 8/(N-2); the upper bound is void for N <= 2."""
    upper = 8.0 / (N - 2.0) if N > 2 else math.inf
    return (N - 2.0) / 8.0, upper


@dataclass(frozen=True)
class Verdict:
    name: str
    applicable: bool
    passed: bool
    slack: float
    note: str = ""


def _strict(name, slack, note=""):
    if abs(slack) <= STRICT_TOL:
        return Verdict(name, True, False, 0.0, note or "equality within tolerance")
    return Verdict(name, True, slack > 0, float(slack), note)


def _na(name, note):
    return Verdict(name, False, False, math.nan, note)


@dataclass(frozen=True)
class ThresholdReport:
    p: float
    q: float
    lam: float
    gamma: float
    N: float
    t_plus_values: tuple
    t0: float
    T: Optional[float]
    verdicts: dict = field(default_factory=dict)

    def __getitem__(self, name) -> Verdict:
        return self.verdicts[name]


def threshold_report(p: float, q: float, lam: float, gamma: float, N: float) -> ThresholdReport:
    if not (p > 1 and q > 1):
        raise DomainError(f"need p, q > 1, got {p}, {q}")
    ParamPoint(lam, gamma)
    tp = (t_plus(p), t_plus(q))
    t0 = t_zero(p, q) if min(p, q) >= 2 else math.nan
    v = {}
    T = None
    if p > 2 and q > 2:
        v["gradp"] = _strict("gradp", 1.0 + 2.0 / (p + q - 2.0) * t0 - N / 2.0)
        try:
            T = find_T(p, q, lam, gamma)
            v["zaza"] = _strict("zaza", 1.0 + 2.0 / (p + q - 2.0) * T - N / 2.0)
        except (HypothesisNotMet, NoRoot) as exc:
            v["zaza"] = _na("zaza", f"{type(exc).__name__}: {exc}")
    else:
        v["gradp"] = _na("gradp", "needs p, q > 2")
        v["zaza"] = _na("zaza", "needs p, q > 2")
    if min(p, q) >= 2:
        lo, hi = cone_bounds(p, q)
        x = gamma * q / (lam * p)
        v["cone"] = _strict("cone", min(x - lo, hi - x))
    else:
        v["cone"] = _na("cone", "t0 needs p, q >= 2")
    v["hamil"] = _strict("hamil", min(hamil_bound(p), hamil_bound(q)) - N)
    lo, hi = exp_bounds(N)
    s = gamma / lam
    v["exp"] = _strict("exp", min(s - lo, hi - s))
    return ThresholdReport(p, q, lam, gamma, N, tp, t0, T, v)


# ---------------------------------------------------------------- pointwise

def _power_exponents(spec: SystemSpec, variant: str):
    if spec.variant != variant:
        raise VariantError(f"check applies to variant {variant}, got {spec.variant}")
    if spec.f.kind != POWER or spec.g.kind != POWER:
        raise VariantError("check needs power nonlinearities")
    return spec.f.exponent, spec.g.exponent


def check_pointwise_G(spec: SystemSpec, sol: SolutionPair, p: Optional[ParamPoint] = None):
    """(min(u - v), min((lam p / gamma q) v - u)); both >= 0 when lam p >= gamma q."""
    pe, qe = _power_exponents(spec, "G")
    p = p or sol.param
    if p.lam * pe < p.gamma * qe:
        raise HypothesisNotMet("need lam p >= gamma q", p.lam * pe - p.gamma * qe)
    k = p.lam * pe / (p.gamma * qe)
    return float(np.min(sol.u - sol.v)), float(np.min(k * sol.v - sol.u))


def check_pointwise_H(spec: SystemSpec, sol: SolutionPair, p: Optional[ParamPoint] = None) -> float:
    """min(p gamma u - q lam v); >= 0 for minimal solutions when q lam >= gamma p."""
    pe, qe = _power_exponents(spec, "H")
    p = p or sol.param
    if qe * p.lam < p.gamma * pe:
        raise HypothesisNotMet("need q lam >= gamma p", qe * p.lam - p.gamma * pe)
    return float(np.min(pe * p.gamma * sol.u - qe * p.lam * sol.v))


# ---------------------------------------------------------------- integral estimates

def stabpol_sides(spec: SystemSpec, mesh: RadialMesh, sol: SolutionPair, s: float, t: float):
    """Both sides of the power-weighted energy estimate obtained from the
    gradient-system inequality with phi = (1+u)^t - 1, psi = (1+v)^s - 1."""
    p, q = _power_exponents(spec, "G")
    if s == 0.5 or t == 0.5:
        raise DomainError("s and t must differ from 1/2")
    U, V = 1.0 + sol.u, 1.0 + sol.v

    def I(a, b):
        return mesh.integrate(U ** a * V ** b)

    at = t * t / (2 * t - 1)
    bs = s * s / (2 * s - 1)
    lhs = (p * (p - 1 - at) * I(2 * t + p - 2, q) + q * (q - 1 - bs) * I(p, 2 * s + q - 2)
           + 2 * p * q * I(t + p - 1, s + q - 1) + p * (p - 1) * I(p - 2, q)
           + q * (q - 1) * I(p, q - 2) + p * at * I(p - 1, q) + q * bs * I(p, q - 1))
    rhs = (2 * p * (p - 1) * I(t + p - 2, q) + 2 * p * q * I(t + p - 1, q - 1)
           + 2 * q * (q - 1) * I(p, s + q - 2) + 2 * p * q * I(p - 1, s + q - 1))
    return lhs, rhs


def check_stabpol(spec: SystemSpec, mesh: RadialMesh, p: ParamPoint, sol: SolutionPair,
                  s: float, t: float) -> float:
    lhs, rhs = stabpol_sides(spec, mesh, sol, s, t)
    return rhs - lhs


@dataclass(frozen=True)
class PowerIntegrals:
    sup_1: float
    sup_2: float
    growth: float              # max over the last half / value at mid-branch
    bounded: bool
    cauchy_schwarz_ok: bool
    values: np.ndarray = field(repr=False, default=None)   # shape (n_points, 3)


def check_power_integrals(spec: SystemSpec, mesh: RadialMesh, branch: Branch, t: float,
                          tau: float, *, max_growth: float = 10.0) -> PowerIntegrals:
    """Integrals of (u+1)^(2t+p-1)(v+1)^(q-1) and (u+1)^(p-1)(v+1)^(2tau+q-1) along an H-branch.

    Also checks the Cauchy-Schwarz corollary for (u+1)^(p+t-1)(v+1)^(q+tau-1)
    at every point.
    """
    p, q = _power_exponents(spec, "H")
    if not 1 < t < t_plus(p):
        raise DomainError(f"need 1 < t < t_plus(p) = {t_plus(p):.6g}, got {t}")
    if not 1 < tau < t_plus(q):
        raise DomainError(f"need 1 < tau < t_plus(q) = {t_plus(q):.6g}, got {tau}")
    if not branch.points:
        raise DomainError("empty branch")
    vals = []
    cs_ok = True
    for pt in branch.points:
        U, V = 1.0 + pt.sol.u, 1.0 + pt.sol.v
        i1 = mesh.integrate(U ** (2 * t + p - 1) * V ** (q - 1))
        i2 = mesh.integrate(U ** (p - 1) * V ** (2 * tau + q - 1))
        i3 = mesh.integrate(U ** (p + t - 1) * V ** (q + tau - 1))
        cs_ok &= i3 <= math.sqrt(i1 * i2) * (1.0 + 1e-12)
        vals.append((i1, i2, i3))
    vals = np.array(vals)
    n = len(vals)
    mid = vals[n // 2, :2]
    growth = float(np.max(vals[n // 2:, :2] / mid))
    return PowerIntegrals(float(vals[:, 0].max()), float(vals[:, 1].max()), growth,
                          growth <= max_growth, bool(cs_ok), vals)


check_shit_integrals = check_power_integrals


# ---------------------------------------------------------------- blow-up rates

def power_exponent(N: float) -> float:
    """-N/2 + sqrt(N-1) + 2."""
    return -N / 2.0 + math.sqrt(N - 1.0) + 2.0


@dataclass(frozen=True)
class BlowupFit:
    regime: str                # "bounded", "log" or "power"
    slope: float               # d log u / d log r on the window
    log_coeff: float           # c in u ~ a + c |log r| on the window
    bound_ok: bool
    C: float = math.nan
    exponent: float = math.nan
    ratio: float = math.nan    # max(u / bound) / C on the window, or relative sup change


def fit_blowup(branch: Branch, window: Optional[tuple] = None, *, ratio_max: float = 2.0,
               sup_tol: float = 0.05) -> BlowupFit:
    """Fit the extremal-estimate profile on ``window`` and test the dimension-dependent bound.

    C is the geometric mean of u / bound on the window; ``bound_ok`` requires
    max(u / bound) <= ratio_max * C.  For N < 10 the check is instead that
    sup u changes by less than ``sup_tol`` between the last point and the
    first point within ten bracket widths of lambda_ok.
    """
    sol = extremal_estimate(branch)
    mesh = sol.mesh
    r_lo, r_hi = window if window is not None else (4.0 * mesh.r1, 0.25)
    if not (mesh.r1 <= r_lo < r_hi < 0.5):
        raise DomainError(f"window ({r_lo}, {r_hi}) must lie in [r_1, 1/2) = [{mesh.r1:.3g}, 0.5)")
    r = mesh.nodes
    mask = (r >= r_lo) & (r <= r_hi)
    if mask.sum() < 3:
        raise DomainError("window contains fewer than three nodes")
    rw, uw = r[mask], sol.u[mask]
    if np.any(uw <= 0):
        raise DomainError("profile must be positive on the window")
    slope = float(np.polyfit(np.log(rw), np.log(uw), 1)[0])
    log_coeff = float(np.polyfit(-np.log(rw), uw, 1)[0])
    N = mesh.N
    if N < 10:
        fold = branch.fold
        ref = next(pt for pt in branch.points if pt.lam >= fold.lambda_ok - 10.0 * fold.width)
        change = abs(sol.sup_u - ref.sup_u) / sol.sup_u
        return BlowupFit("bounded", slope, log_coeff, bool(change < sup_tol), ratio=change)
    if N == 10:
        regime, e, bound = "log", math.nan, 1.0 + np.abs(np.log(rw))
    else:
        regime, e = "power", power_exponent(N)
        bound = rw ** e
    q = uw / bound
    C = float(np.exp(np.mean(np.log(q))))
    ratio = float(np.max(q) / C)
    return BlowupFit(regime, slope, log_coeff, ratio <= ratio_max, C, e, ratio)
