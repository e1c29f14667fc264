class PowerFlowError(Exception):
    """Base class for solver and input errors."""


class InfeasibleError(PowerFlowError):
    """No schedule meets the deadline.

    ``min_latency`` (ps), when known, is the fastest achievable inference time.
    """

    def __init__(self, message: str, min_latency: int | None = None):
        super().__init__(message)
        self.min_latency = min_latency


class GreedyFailedError(InfeasibleError):
    pass


class OracleCapacityError(PowerFlowError):
    pass


class ProfileError(PowerFlowError, ValueError):
    """Malformed or invalid profile / schedule document."""
