"""Exception hierarchy. All package errors derive from ApuThermError."""


class ApuThermError(Exception):
    """Base class for all aputherm errors."""


class FloorplanSyntaxError(ApuThermError):
    """The floorplan document could not be parsed."""


class FloorplanValidationError(ApuThermError):
    """The floorplan parsed but violates a geometric invariant."""


class ResolutionError(ApuThermError):
    """A block is not covered by any cell at the chosen grid resolution."""


class SolverError(ApuThermError):
    """The steady-state linear solve failed or left a residual above tolerance."""


class InversionError(ApuThermError):
    """Input to the power-map inversion is malformed or out of range."""


class ThermalRunawayError(ApuThermError):
    """The electro-thermal fixed point diverged or exceeded the hard cap."""


class ConfigError(ApuThermError):
    """A configuration or data file is missing, malformed, or inconsistent."""
