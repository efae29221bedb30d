"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SynergyLabError(Exception):
    exit_code = 1


class ConfigError(SynergyLabError):
    exit_code = 2


class DataError(SynergyLabError):
    exit_code = 3


class NumericalError(SynergyLabError):
    exit_code = 4


class InsufficientSupport(NumericalError):
    """Too few observations for an estimate (fit sizes, percentile pools)."""
