"""Exception hierarchy shared by the solver, continuation and verification layers."""


class ExtremalError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ExtremalError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ShapeError(ExtremalError, ValueError):
    """Grid function length does not match the mesh."""


class VariantError(ExtremalError, ValueError):
    """Operation called with a system variant it does not apply to."""


class NonConvergence(ExtremalError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NotMinimalCandidate(ExtremalError):
    """Newton converged to a pair that is negative or not radially decreasing."""


class BadStart(ExtremalError):
    """Continuation could not solve at its starting parameter."""


class IncompleteBranch(ExtremalError):
    """Branch has no converged fold bracket, or too few points."""


class EigFailure(ExtremalError):
    """Inverse power iteration did not converge."""


class NotPrincipal(ExtremalError):
    """Computed eigenvector changes sign in the interior."""


class HypothesisNotMet(ExtremalError):
    def __init__(self, message, value=float("nan")):
        super().__init__(message)
        self.value = value


class NoRoot(ExtremalError):
    """No sign change found in the search interval."""


class ConfigError(ExtremalError, ValueError):
    """Invalid or incomplete experiment configuration."""
