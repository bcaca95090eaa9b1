"""Exception types raised by the solvers."""


class ResonantTangencyError(Exception):
    """Base class for every error raised by this package."""


class SolverError(ResonantTangencyError):
    """A numerical procedure could not produce a result."""


class NoConvergence(SolverError):
    """Newton iteration for a periodic orbit did not converge."""


class NotSingleRound(SolverError):
    """A converged orbit failed the single-round certificate."""


class EscapedDomain(SolverError):
    """An iterate left the bounding box."""


class NoBifurcationInRange(SolverError):
    """No sign change of a test function was found within the scan range."""


class ComplexRoot(ResonantTangencyError):
    """The quadratic for the leading-order orbit offset has no real root.

    Not a failure as such: it marks parameters past the saddle-node fold.
    """


class DegenerateDirection(ResonantTangencyError, ValueError):
    """The denominator of a bifurcation predictor vanishes for this direction."""


class PreconditionViolated(ResonantTangencyError, ValueError):
    """Inputs lie outside the region where an expansion is claimed to hold."""


class InsufficientData(SolverError):
    """Too few successful points to fit a scaling limit."""
