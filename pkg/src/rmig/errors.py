"""Exception and warning types shared across the library."""


class RmigError(Exception):
    """Base class for all library errors."""


class ParameterDomainError(RmigError, ValueError):
    """Parameter vector lies outside the model's open parameter box."""


class CompositionError(RmigError, ValueError):
    """Independent components cannot be combined (e.g. mismatched matrix size)."""


class ExactEngineCapError(RmigError, RuntimeError):
    """Matrix size exceeds the quadrature engine cap; use the sampling path."""


class TruncationError(RmigError, RuntimeError):
    """Weight underflows everywhere on the truncation window; widen the window."""


class StepSizeError(RmigError, ValueError):
    """Finite-difference stencil would leave the parameter box."""


class SamplingDiagnosticsError(RmigError, RuntimeError):
    """Sampler diagnostics failed (e.g. pathological acceptance rate)."""


class MultiCutError(RmigError, RuntimeError):
    """Equilibrium density went negative: potential is outside the one-cut regime."""


class SolverError(RmigError, RuntimeError):
    """Iterative solve failed to converge; carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class TruncationDomainError(RmigError, ValueError):
    """Equilibrium support escapes the requested radius."""


class UsageError(RmigError, ValueError):
    """Invalid configuration document or command-line usage."""


class UnstableEstimateWarning(UserWarning):
    """Fewer than ~100 effective samples back a Monte-Carlo estimate."""


class SingleChainWarning(UserWarning):
    """Standard error fell back to a single-chain autocorrelation window."""


class ReconstructionWarning(UserWarning):
    """Potential reconstruction residual is large; measure may not come from a
    polynomial potential."""


class NonConvexPotentialWarning(UserWarning):
    """Confining but non-convex base potential; one-cut behavior not guaranteed."""
