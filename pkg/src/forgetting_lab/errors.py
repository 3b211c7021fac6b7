class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class InfeasibleError(ValueError):
    """Raised when a task collection is not jointly realizable."""

    def __init__(self, message, max_residual):
        super().__init__(message)
        self.max_residual = max_residual
