"""Shared types: nonlinearities, system specs, radial meshes and solution containers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import DomainError, ShapeError

POWER = "power"
EXPONENTIAL = "exponential"
CUSTOM = "custom"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Nonlinearity:
    """Smooth increasing convex f with f(0) = 1.

    ``f2_unbounded`` records the asymptotic requirement liminf f'' = inf, which
    cannot be checked on finite samples and is therefore declared.
    """

    kind: str
    exponent: Optional[float] = None
    t_max: float = math.inf
    f2_unbounded: bool = True
    _splines: tuple = field(default=(), repr=False, compare=False)

    @classmethod
    def power(cls, p: float) -> "Nonlinearity":
        if not p > 1:
            raise DomainError(f"power exponent must exceed 1, got {p}")
        return cls(POWER, float(p), f2_unbounded=p > 2)

    @classmethod
    def exponential(cls) -> "Nonlinearity":
        return cls(EXPONENTIAL)

    @classmethod
    def custom(cls, t: Sequence[float], values: Sequence[float], *,
               f2_unbounded: bool = False, t0: Optional[float] = None) -> "Nonlinearity":
        """Quintic interpolant of samples; condition (R) is checked on the sample grid."""
        t = np.asarray(t, dtype=float)
        y = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 6:
            raise DomainError("custom nonlinearity needs >= 6 matching samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DomainError("sample abscissae must start at 0 and increase strictly")
        if abs(y[0] - 1.0) > 1e-12:
            raise DomainError(f"f(0) must equal 1, got {y[0]}")
        spl = make_interp_spline(t, y, k=5)
        splines = (spl,) + tuple(spl.derivative(k) for k in (1, 2, 3))
        scale = float(np.max(np.abs(y)))
        d1 = splines[1](t)
        d2 = splines[2](t)
        if np.any(d1 <= 0):
            raise DomainError("custom nonlinearity is not increasing on its samples")
        if np.any(d2 < -1e-10 * scale):
            raise DomainError("custom nonlinearity is not convex on its samples")
        t0 = 0.5 * t[-1] if t0 is None else t0
        tail = t[t >= t0]
        tail = tail[tail > 0]
        if tail.size >= 2 and np.any(np.diff(y[-tail.size:] / tail) <= 0):
            raise DomainError("f(T)/T is not increasing on the sampled tail")
        return cls(CUSTOM, None, float(t[-1]), f2_unbounded, splines)

    def eval(self, t, order: int = 0):
        """Derivative of the given order, vectorised over ``t``; no domain checks."""
        t = np.asarray(t, dtype=float)
        if self.kind == EXPONENTIAL:
            return np.exp(t)
        if self.kind == POWER:
            p = self.exponent
            c = 1.0
            for k in range(order):
                c *= p - k
            return c * (1.0 + t) ** (p - order)
        return self._splines[order](t)


def nl_eval(n: Nonlinearity, t: float, order: int = 0) -> float:
    if order not in (0, 1, 2, 3):
        raise DomainError(f"order must be 0..3, got {order}")
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if n.kind == CUSTOM and t > n.t_max:
        raise DomainError(f"t={t} outside tabulated range [0, {n.t_max}]")
    return float(n.eval(t, order))


@dataclass(frozen=True)
class SystemSpec:
    variant: str
    f: Nonlinearity = field(default_factory=Nonlinearity.exponential)
    g: Nonlinearity = field(default_factory=Nonlinearity.exponential)

    def __post_init__(self):
        if self.variant not in ("G", "H", "E"):
            raise DomainError(f"unknown variant {self.variant!r}")
        if self.variant == "E":
            object.__setattr__(self, "f", Nonlinearity.exponential())
            object.__setattr__(self, "g", Nonlinearity.exponential())

    @classmethod
    def power(cls, variant: str, p: float, q: float) -> "SystemSpec":
        return cls(variant, Nonlinearity.power(p), Nonlinearity.power(q))

    @property
    def exponents(self):
        return self.f.exponent, self.g.exponent

    @property
    def is_symmetric(self) -> bool:
        """True when swapping u and v maps the system with (lambda, gamma) to (gamma, lambda)."""
        return self.variant == "E" or self.f == self.g

    def rhs(self, u, v):
        """Right-hand sides (before multiplying by lambda, gamma)."""
        if self.variant == "E":
            return np.exp(v), np.exp(u)
        f, g = self.f.eval, self.g.eval
        if self.variant == "G":
            return f(u, 1) * g(v, 0), f(u, 0) * g(v, 1)
        return f(u, 0) * g(v, 1), f(u, 1) * g(v, 0)

    def rhs_derivatives(self, u, v):
        """(d1/du, d1/dv, d2/du, d2/dv) of the right-hand sides."""
        if self.variant == "E":
            z = np.zeros_like(np.asarray(u, dtype=float))
            return z, np.exp(v), np.exp(u), z
        f, g = self.f.eval, self.g.eval
        f0, f1, f2 = f(u, 0), f(u, 1), f(u, 2)
        g0, g1, g2 = g(v, 0), g(v, 1), g(v, 2)
        if self.variant == "G":
            return f2 * g0, f1 * g1, f1 * g1, f0 * g2
        return f1 * g1, f0 * g2, f2 * g0, f1 * g1


@dataclass(frozen=True)
class ParamPoint:
    lam: float
    gamma: float

    def __post_init__(self):
        if not (self.lam > 0 and self.gamma > 0):
            raise DomainError(f"parameters must be positive, got ({self.lam}, {self.gamma})")

    @property
    def sigma(self) -> float:
        return self.gamma / self.lam


@dataclass(frozen=True)
class Ray:
    """Parameters (lam, sigma*lam) for lam in [lam_lo, lam_hi)."""

    sigma: float
    lam_lo: float = 0.0
    lam_hi: float = math.inf

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    def point(self, lam: float) -> ParamPoint:
        return ParamPoint(lam, self.sigma * lam)


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Nodes 0 = r_0 < ... < r_M = 1 in real dimension N.

    ``weights`` are dual-cell weights: node j carries the exact integral of
    r^(N-1) over [r_{j-1/2}, r_{j+1/2}], so they sum to 1/N.  ``face_weights``
    carry r_{j+1/2}^(N-1) * h_j and integrate cell-midpoint quantities such as
    squared difference quotients.
    """

    nodes: np.ndarray
    N: float
    grading: float
    weights: np.ndarray
    mid: np.ndarray
    h: np.ndarray
    face_weights: np.ndarray

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def r1(self) -> float:
        return float(self.nodes[1])

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.nodes.shape:
            raise ShapeError(f"expected {self.nodes.size} nodal values, got {values.shape}")
        return float(self.weights @ values)

    def integrate_cells(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.mid.shape:
            raise ShapeError(f"expected {self.mid.size} cell values, got {values.shape}")
        return float(self.face_weights @ values)

    def diff(self, w) -> np.ndarray:
        """Centered difference quotient at cell midpoints."""
        return np.diff(np.asarray(w, dtype=float)) / self.h

    def at_mid(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return 0.5 * (w[1:] + w[:-1])

    def check(self, *grids):
        for w in grids:
            if np.shape(w) != self.nodes.shape:
                raise ShapeError(f"grid function of shape {np.shape(w)} on mesh with {self.nodes.size} nodes")


def make_mesh(M: int, N: float, grading: float = 1.0) -> RadialMesh:
    if M < 16:
        raise DomainError(f"need M >= 16, got {M}")
    if not N >= 1:
        raise DomainError(f"need N >= 1, got {N}")
    if not grading >= 1:
        raise DomainError(f"need grading >= 1, got {grading}")
    r = (np.arange(M + 1) / M) ** grading
    r[0], r[-1] = 0.0, 1.0
    mid = 0.5 * (r[1:] + r[:-1])
    faces = np.concatenate(([0.0], mid, [1.0]))
    weights = np.diff(faces ** N) / N
    h = np.diff(r)
    face_weights = mid ** (N - 1) * h
    return RadialMesh(_frozen(r), float(N), float(grading), _frozen(weights),
                      _frozen(mid), _frozen(h), _frozen(face_weights))


def default_grading(N: float) -> float:
    return 1.0 if N <= 10 else 1.5


@dataclass(frozen=True, eq=False)
class SolutionPair:
    u: np.ndarray
    v: np.ndarray
    param: ParamPoint
    mesh: RadialMesh
    bracket: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "v", _frozen(self.v))
        self.mesh.check(self.u, self.v)

    @classmethod
    def zero(cls, mesh: RadialMesh, param: ParamPoint) -> "SolutionPair":
        z = np.zeros(mesh.M + 1)
        return cls(z, z, param, mesh)

    @property
    def sup_u(self) -> float:
        return float(np.max(self.u))

    @property
    def sup_v(self) -> float:
        return float(np.max(self.v))

    def swapped(self) -> "SolutionPair":
        p = ParamPoint(self.param.gamma, self.param.lam)
        return SolutionPair(self.v, self.u, p, self.mesh, self.bracket)


@dataclass(frozen=True, eq=False)
class BranchPoint:
    sol: SolutionPair
    residual: float
    eta: float
    iterations: int = 0

    @property
    def lam(self) -> float:
        return self.sol.param.lam

    @property
    def gamma(self) -> float:
        return self.sol.param.gamma

    @property
    def sup_u(self) -> float:
        return self.sol.sup_u

    @property
    def sup_v(self) -> float:
        return self.sol.sup_v


@dataclass(frozen=True)
class Fold:
    lambda_star: float
    lambda_ok: float
    lambda_fail: float
    converged: bool

    @property
    def width(self) -> float:
        return self.lambda_fail - self.lambda_ok


@dataclass(frozen=True, eq=False)
class Branch:
    spec: SystemSpec
    ray: Ray
    points: tuple
    fold: Optional[Fold]
    events: tuple = ()

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])


@dataclass(frozen=True)
class UpsilonSample:
    sigma: float
    lambda_star: float
    gamma_star: float
    bracket_width: float
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class UpsilonCurve:
    samples: tuple

    def at(self, sigma: float) -> UpsilonSample:
        for s in self.samples:
            if s.sigma == sigma:
                return s
        raise KeyError(sigma)


@dataclass(frozen=True, eq=False)
class TestFunctionPair:
    phi: np.ndarray
    psi: np.ndarray

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(self.phi))
        object.__setattr__(self, "psi", _frozen(self.psi))
        if self.phi.shape != self.psi.shape:
            raise ShapeError("phi and psi must share a mesh")
        if self.phi[-1] != 0.0 or self.psi[-1] != 0.0:
            raise DomainError("test functions must vanish at r = 1")
