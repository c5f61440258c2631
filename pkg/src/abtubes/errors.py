"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for every error raised by abtubes."""


class ConfigurationError(SimulationError, ValueError):
    pass


class ResolutionError(SimulationError, ValueError):
    """Packet narrower than the grid can resolve."""


class DomainSizeError(SimulationError, ValueError):
    """Packet tail reaches the periodic boundary."""


class ShapeError(SimulationError, ValueError):
    """Fields live on different grids."""


class PreconditionError(SimulationError, ValueError):
    pass


class NumericalBlowupError(SimulationError, FloatingPointError):
    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite amplitude after step {step_index}")


class ModelViolationError(SimulationError):
    """A result contradicts a property that holds exactly for the model (signals a bug)."""


class ConfinementFailureError(SimulationError):
    pass


class DegenerateFringeError(SimulationError, ValueError):
    pass


class NoFringeError(SimulationError):
    pass


class AuditFailure(SimulationError, AssertionError):
    def __init__(self, message, e1, e2):
        self.e1 = e1
        self.e2 = e2
        super().__init__(f"{message} (e1={e1!r}, e2={e2!r})")
