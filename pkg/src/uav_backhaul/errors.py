class ConfigError(ValueError):
    """Invalid scenario or experiment configuration."""


class DomainError(ValueError):
    """Input outside the domain of a channel or power formula."""


class StructureError(ValueError):
    """Array shapes that do not match the scenario dimensions."""


class ConstraintViolation(ValueError):
    """An association or power allocation is infeasible.

    ``constraint`` names the violated family: ``"power"`` (per-UAV peak
    power), ``"user"`` (at most one UAV-RB pair per user), ``"rb"`` (at most
    one user per RB) or ``"tb"`` (exactly one TB per UAV). ``index`` is the
    UAV, user or RB the row belongs to.
    """

    def __init__(self, constraint: str, index: int, message: str):
        super().__init__(f"{constraint}[{index}]: {message}")
        self.constraint = constraint
        self.index = index


class InfeasibleError(RuntimeError):
    pass


class UnboundedError(RuntimeError):
    pass


class OracleSizeError(ValueError):
    pass
