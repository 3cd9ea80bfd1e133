class SolverError(Exception):
    """Base class for failures of the inner beamforming solvers."""


class RankDeficientError(SolverError, ValueError):
    """Effective first-hop channel has fewer than K usable eigenmodes."""


class SingularChannelError(SolverError, ValueError):
    """Stacked user channel matrix is not of full row rank."""


class InfeasibleTargetsError(SolverError, ValueError):
    """SINR targets cannot be met (singular coupling matrix or negative power)."""


class ConvergenceError(SolverError, RuntimeError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
