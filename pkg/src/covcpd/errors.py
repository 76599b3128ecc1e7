class ContractError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""
