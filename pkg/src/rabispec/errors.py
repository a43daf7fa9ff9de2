"""Exception hierarchy shared by the engine and the CLI."""


class RabiSpecError(Exception):
    """Base class for every error raised by rabispec."""


class InvalidParameterError(RabiSpecError, ValueError):
    pass


class DimensionMismatchError(RabiSpecError, ValueError):
    pass


class PropagationError(RabiSpecError, RuntimeError):
    pass


class NoRootError(RabiSpecError, RuntimeError):
    pass


class NoOptimumError(RabiSpecError, RuntimeError):
    pass


class ConfigError(RabiSpecError, ValueError):
    pass
