"""Exception types raised by the solver library."""


class SolverError(Exception):
    """Base class for all library errors."""


class ZeroField(SolverError):
    """An operation that requires a nonzero field received the zero field."""


class DegenerateConstraintGradient(SolverError):
    """The constraint gradient vanished; the tangent projection is undefined."""


class DegenerateDirection(SolverError):
    """The nonlinear integral of a direction underflowed; it cannot be scaled
    onto the manifold (the direction is essentially zero on the support of g)."""


class LinearSolveFailure(SolverError):
    """The inner linear elliptic solve did not reach its residual tolerance."""


class AssemblyFailure(SolverError):
    """The assembled inner-product operator is not positive definite."""


class InvalidCoefficient(SolverError):
    """Problem coefficients violate the well-posedness constraints."""


class LineSearchFailure(SolverError):
    """Backtracking exhausted its budget without satisfying the step rule."""


class EigenSolveFailure(SolverError):
    """The generalized eigensolver did not converge."""


class InvalidBracket(SolverError):
    """Bisection endpoints do not straddle the symmetry-breaking transition."""


class InsufficientData(SolverError):
    """Too few data points for the requested fit."""


class NonPositiveData(SolverError):
    """Log-linear fitting requires strictly positive transformed data."""


class ConfigError(SolverError):
    """A run configuration file is malformed or out of range."""
