"""Exception hierarchy shared by all fidshadow modules."""


class FidShadowError(Exception):
    """Base class for all library errors."""


class ValidationError(FidShadowError, ValueError):
    """Input failed a structural or numerical validity check."""


class DimensionMismatch(ValidationError):
    pass


class InvalidDimension(ValidationError):
    pass


class NotTracePreserving(ValidationError):
    pass


class DegenerateChannel(ValidationError):
    """The fidelity distribution is a point mass; no density exists."""


class DegenerateTriangle(DegenerateChannel):
    pass


class DegenerateSpectrum(ValidationError):
    pass


class InapplicableMethod(FidShadowError):
    """A method's preconditions do not hold for the given channel."""


class NotCommuting(InapplicableMethod):
    pass


class NotSpanning(InapplicableMethod):
    def __init__(self, message: str, rank_deficit: int = 0):
        super().__init__(message)
        self.rank_deficit = rank_deficit


class NonConvergence(FidShadowError):
    def __init__(self, message: str, best_value: float = float("nan")):
        super().__init__(message)
        self.best_value = best_value


class EmptySample(ValidationError):
    pass


class ProblemTooLarge(ValidationError):
    pass
