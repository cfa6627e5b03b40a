"""Exception and warning types raised across the package."""


class LyapstabError(Exception):
    """Base class for all package-specific errors."""


class NetworkDataError(LyapstabError):
    """Network description violates the documented schema or its invariants."""


class TopologyError(LyapstabError):
    """Network reduction failed (disconnected island, singular bus block)."""


class SetupError(LyapstabError):
    """Simulation setup failed (e.g. pre-fault equilibrium did not converge)."""


class TraceParseError(LyapstabError):
    """Malformed trace file row.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(TraceParseError):
    """Timestamps within one generator are not strictly increasing."""


class CoverageError(LyapstabError):
    """One or more traces do not cover the required time span."""


class RangeError(LyapstabError):
    """Requested sample times fall outside the source trace span."""


class NoDisturbanceError(LyapstabError):
    """All clearing-instant speeds are zero; there is no event to assess."""


class DegenerateEventError(LyapstabError):
    """No severely disturbed generator remains after excluding the reference."""


class ClassificationRefused(LyapstabError):
    """Initial relative speed too small to classify; the pair is skipped."""


class ClassificationTimeout(LyapstabError):
    """The swing-pattern automaton ran out of data before deciding."""


class PeakSearchTimeout(LyapstabError):
    """No confirmed local maximum found within the allowed observation time."""


class SingularInitError(LyapstabError):
    """Two-point initialisation of the recursive fit has coincident times."""


class NoAssessablePairError(LyapstabError):
    """Every identified generator pair was skipped; no verdict is possible."""


class LyapstabWarning(UserWarning):
    """Non-fatal condition worth surfacing (pair skipped, odd event shape)."""
