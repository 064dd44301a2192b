"""Exception types shared across the simulator."""


class EsemSimError(Exception):
    """Base class for all simulator errors."""


class InvalidInput(EsemSimError):
    """Raised when an argument violates a documented precondition."""


class ConfigError(EsemSimError):
    """Raised when a configuration file or parameter set is inconsistent."""


class RankDeficit(EsemSimError):
    """Requested more nullspace dimensions than the matrix provides."""

    def __init__(self, requested: int, achievable: int):
        self.requested = requested
        self.achievable = achievable
        super().__init__(
            f"requested {requested} left-nullspace dimensions, "
            f"only {achievable} available"
        )


class SingularGroup(EsemSimError):
    """Stacked stream rows are (numerically) rank deficient; the group
    cannot be zero-forced and must be discarded."""


class DualDomainError(EsemSimError):
    """Dual variables left the domain of the closed-form power expressions
    (nonpositive water-level denominator)."""


class GenerationFailure(EsemSimError):
    """Random matrix generation repeatedly failed a full-rank check."""


class InfeasiblePlan(EsemSimError):
    """No requested sweep point admits a feasible dimension plan."""


class UnknownTransmitter(EsemSimError):
    """Candidate transmitter identifier is not 'bs' or a valid relay index."""
