"""Exception hierarchy shared by every module."""


class ContractError(ValueError):
    """A caller violated a documented precondition."""


class BudgetError(ContractError):
    """An evaluation was requested beyond the allotted budget."""


class DomainError(ContractError):
    """Argument outside the mathematical domain of a function."""


class InvariantError(ContractError):
    """A data structure invariant does not hold (e.g. singular A)."""


class GenerationInfeasible(RuntimeError):
    """Random problem generation hit its rejection cap."""

    def __init__(self, constraint: str, attempts: int):
        super().__init__(f"no admissible problem after {attempts} attempts; failing constraint: {constraint}")
        self.constraint = constraint
        self.attempts = attempts
