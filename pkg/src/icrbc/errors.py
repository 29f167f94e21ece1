"""Exception types raised by the library.

Argument problems are reported as plain ``ValueError``; the classes below
mark failures that callers may want to handle specifically.
"""


class IcrError(Exception):
    """Base class for library-specific failures."""


class InfeasibleNullingError(IcrError, ValueError):
    """Asked to null at least as many independent rows as there are antennas."""


class DegenerateBeamError(IcrError):
    """A projector column chosen as beam is numerically zero."""


class SingularSystemError(IcrError):
    """Linear system is singular within tolerance."""


class PatternInfeasibleError(IcrError, ValueError):
    """CSIT pattern cannot support the two-phase transmission."""


class StructuralViolationError(IcrError):
    """A decoding row does not match any channel row it should be built from."""


class ActiveSetViolationError(IcrError, ValueError):
    """Closed-form region point falls outside the unit box."""


class UnsupportedError(IcrError, NotImplementedError):
    """Requested case is outside what the routine supports."""


class MissingObservationError(IcrError):
    """Receiver is asked to use an observation it never stored."""
