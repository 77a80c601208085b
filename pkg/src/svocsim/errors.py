"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for failures raised while stepping a simulation."""


class DegenerateReference(SimulationError):
    """An oscillator reference collapsed below the usable magnitude."""


class WrongFaultCount(SimulationError):
    """A feedback estimator was invoked with the wrong number of faulty phases."""


class ConfigError(ValueError):
    """Invalid scenario or parameter configuration."""


class OverlappingEvents(ConfigError):
    """Two grid events act on the same phase over overlapping intervals."""


class MissingScenario(KeyError):
    """A run required by the acceptance check is absent."""
