"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; plain ValueError/TypeError remain for programming errors.
"""

from __future__ import annotations


class BergtoepError(Exception):
    """Base class for all library specific errors."""


class NotPSD(BergtoepError):
    """A matrix required to be positive semidefinite has a genuinely
    negative eigenvalue (below the clamping tolerance)."""


class SingularSymbol(BergtoepError):
    """A matrix symbol is numerically singular at an evaluation point."""

    def __init__(self, point: complex, det: complex):
        self.point = point
        self.det = det
        super().__init__(
            f"symbol singular at z={point!r} (|det|={abs(det):.3e})")


class NoConvergence(BergtoepError):
    """An iteration hit its cap without meeting the convergence test."""


class NonRealTrace(BergtoepError):
    """A trace that must be real came out with a large imaginary part."""


class BufferTooSmall(BergtoepError):
    """A truncation degree is too small for the requested computation."""


class ComputeBudget(BergtoepError):
    """A computation would exceed the configured operation budget."""


class BadIndex(BergtoepError):
    """Dyadic rectangle indices are outside their admissible range."""


class TouchesBoundary(BergtoepError):
    """The requested quantity is undefined for rectangles meeting the
    unit circle."""


class ZeroDenominator(BergtoepError):
    """A ratio was requested with a vanishing denominator."""


class ThresholdTooLow(BergtoepError):
    """A stopping-time threshold sits below the global average."""


class DepthExhausted(BergtoepError):
    """A dyadic search reached its depth cap with provably unresolved
    branches; carries the partial result."""

    def __init__(self, message: str, partial=None, unresolved=None):
        self.partial = partial
        self.unresolved = unresolved or []
        super().__init__(message)


class NotSubset(BergtoepError):
    """A family of rectangles is not contained in the claimed parent."""


class DivergenceSuspected(BergtoepError):
    """Averages grow geometrically along nested rectangles, indicating a
    non-integrable singularity of the field."""


class SeriesSlowConvergence(BergtoepError):
    """A power series evaluation hit the term cap before its tail bound
    fell under the target."""


class ParseError(BergtoepError):
    """A configuration file is malformed; the message names the field."""


class DimensionMismatch(BergtoepError):
    """Two objects that must share a matrix dimension do not."""


class RangeError(BergtoepError):
    """A configuration value is outside its admissible range."""
