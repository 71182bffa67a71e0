"""Exception hierarchy shared across the package."""


class FwmError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FwmError, ValueError):
    """An input lies outside the physical or numerical domain of an operation."""


class ConfigError(FwmError, ValueError):
    """A run configuration file is malformed or inconsistent."""


class StackFormatError(FwmError, ValueError):
    """A frame-stack file does not conform to the FWMSTACK1 format."""


class DegenerateDataError(DomainError):
    """Data carries no usable statistical information (e.g. zero variance)."""


class MergedSpotsError(DomainError):
    """The two readout spots are not spatially resolved on the sensor."""


class WeakSignalError(DomainError):
    """Write-in signal variance does not exceed the read-noise floor."""
