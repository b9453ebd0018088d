"""Exception types shared across the package."""


class ChlabError(Exception):
    """Base class for all package-specific errors."""


class GridMismatch(ChlabError):
    """Fields living on incompatible grids were combined."""


class NonZeroMean(ChlabError):
    """Mean-zero precondition violated (inverse Laplacian, dual norms)."""


class DomainViolation(ChlabError):
    """Argument outside the admissible range of the singular potential."""


class BoundViolation(ChlabError):
    """A phase field left the open interval (-1, 1)."""


class NewtonDiverged(ChlabError):
    """Nonlinear solve failed to meet its residual contract."""


class MeanInfeasible(ChlabError):
    """Requested mean value outside (-1, 1)."""


class InsufficientCoverage(ChlabError):
    """Trajectory does not cover the requested time window."""


class EmptyTrajectory(ChlabError):
    """An operation that needs records received none."""


class ConfigError(ChlabError):
    """Configuration invalid; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
