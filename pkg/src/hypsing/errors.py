"""Exception hierarchy for the toolkit.

Numerical-contract violations derive from :class:`NumericalError` so the CLI
can map them all to one exit code; configuration problems are
:class:`ConfigError`.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ToolkitError):
    """Rejected instance configuration (schema, values, or files)."""


class NumericalError(ToolkitError):
    """A numerical precondition or convergence contract failed."""


class PoleProximity(NumericalError):
    """Evaluation point lies inside the guard zone of a retained pole."""


class ZeroProximity(NumericalError):
    """Evaluation point is too close to a zero for a stable quotient."""


class TailUnboundable(NumericalError):
    """The requested region reaches the accumulation set of tail poles."""


class BoundaryDegeneracy(NumericalError):
    """A zero or pole sits on (or hugs) an integration boundary."""


class NonConvergence(NumericalError):
    """An iteration or quadrature failed to meet its tolerance."""


class NonFinite(NumericalError):
    """An integrand sample was nan or infinite."""


class SeparationTooSmall(NumericalError):
    """No admissible loop or extraction radius exists at this point."""


class PathThroughPole(NumericalError):
    """An integration path passes inside a pole guard zone."""


class HalfPlaneViolation(NumericalError):
    """A developed value left the upper half-plane (offset too small)."""


class DegenerateDerivative(NumericalError):
    """|f'| is below threshold where a quotient by f' is required."""


class NonHyperbolicExponent(NumericalError):
    """Principal coefficient admits no real angle parameter."""
