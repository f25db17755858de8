"""Exception hierarchy shared by the library and the command line."""


class SrotError(Exception):
    """Base class for all errors raised by this package."""


class InstanceError(SrotError, ValueError):
    """A problem instance, plan or vector has inconsistent dimensions or values."""


class ConfigError(SrotError, ValueError):
    """A solver or pipeline configuration is invalid."""


class InputError(SrotError, OSError):
    """An input file could not be read or decoded."""
