"""Exception types shared across the package."""

__all__ = [
    "AwsdeError",
    "ConfigurationError",
    "AssumptionError",
    "StepSizeError",
    "BracketError",
    "InstanceTooLargeError",
]


class AwsdeError(Exception):
    """Base class for package errors."""


class ConfigurationError(AwsdeError):
    """Missing or inconsistent user-supplied constants or options."""


class AssumptionError(AwsdeError):
    """A declared regularity assumption fails on a probe set."""


class StepSizeError(AwsdeError):
    """A step-size guard is violated in strict mode."""


class BracketError(AwsdeError):
    """Root bracketing failed to enclose a sign change."""


class InstanceTooLargeError(AwsdeError):
    """An exact solver received an instance beyond its enumeration cap."""
