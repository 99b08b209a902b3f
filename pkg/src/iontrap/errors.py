"""Exception types raised by the toolkit."""


class IonTrapError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(IonTrapError, ValueError):
    """Invalid trap dimensions or electrode layout."""


class BoundingBoxTooSmall(GeometryError):
    pass


class GapTooSmallForGrid(GeometryError):
    pass


class NoConvergence(IonTrapError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class OutOfDomain(IonTrapError, ValueError):
    pass


class FitWindowOutsideVacuumRegion(IonTrapError, ValueError):
    pass


class FitWindowSpansGap(IonTrapError, ValueError):
    pass


class RadiusTouchesElectrode(IonTrapError, ValueError):
    pass


class MaxOnBoundary(IonTrapError, RuntimeError):
    pass


class InvalidBranch(IonTrapError, ValueError):
    pass


class OnElectrode(IonTrapError, ValueError):
    pass


class NotAxiallyConfining(IonTrapError, ValueError):
    pass


class UnstableAxis(IonTrapError, ValueError):
    """A net secular frequency is imaginary: the static field overwhelms the RF confinement."""

    def __init__(self, axis, radicand):
        super().__init__(
            f"trap is unstable along {axis}: omega_{axis}^2 = {radicand:.6g} rad^2/s^2"
        )
        self.axis = axis
        self.radicand = radicand


class DegenerateRotation(IonTrapError, ValueError):
    pass


class OutsideHarmonicRegion(IonTrapError, ValueError):
    pass


class DesignFileError(IonTrapError, ValueError):
    """Malformed design file; carries the offending line when known."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class AsymptoticValidityWarning(UserWarning):
    """A closed-form result was requested outside the large-aspect-ratio regime."""
