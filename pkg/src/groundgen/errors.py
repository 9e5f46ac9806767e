"""Exception hierarchy shared across the toolkit.

Each class maps to one CLI exit code (see cli.EXIT_CODES).
"""


class GroundgenError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(GroundgenError):
    """Malformed input: bad values, non-unitary gates, duplicate controls."""


class LayoutError(ValidationError):
    """Qubit support of an operator falls outside the register layout."""


class ResolutionError(ValidationError):
    """A quantized weight does not fit in its weight register."""


class UnsupportedFormError(ValidationError):
    """Operation requires a projector-sum (spectral) Hamiltonian term."""


class CapacityError(GroundgenError):
    """Requested system exceeds the supported qubit budget."""


class InfeasibleModelError(GroundgenError):
    """No output satisfies the model constraints (empty ground manifold)."""
