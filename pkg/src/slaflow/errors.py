class ConfigError(ValueError):
    """Invalid scenario, template, or policy configuration."""


class ContractViolation(RuntimeError):
    """An operation was called outside its precondition."""


class NoReplicaError(LookupError):
    """A scheduling decision was requested with no live replica."""


class ProfilingError(RuntimeError):
    pass


class SimulationError(RuntimeError):
    """A run-time invariant failed; ``trace`` holds the most recent events."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
