"""Exception types shared by the library and the CLI (which maps them to exit codes)."""


class ParisianError(Exception):
    """Base class for all package errors."""


class ParameterError(ParisianError, ValueError):
    """A parameter is outside its domain.  ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InconsistentBranchError(ParisianError):
    """A formula branch was requested that contradicts the parameters."""


class AssemblyError(ParisianError):
    """A limit could not be assembled because a required constant is missing."""

    def __init__(self, constant: str, regime: str):
        super().__init__(f"regime {regime} needs constant {constant!r}")
        self.constant = constant
        self.regime = regime


class SimulationQualityError(ParisianError):
    """Monte Carlo output is unusable (no hits, no plateau, non-finite weights)."""


class InsufficientSamplesError(SimulationQualityError):
    """No weighted classical-ruin hits: the ratio has a zero denominator."""
