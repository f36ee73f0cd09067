"""
Error Hierarchy for the Willmore Toolkit

Action:
Defines one exception class per failure mode the pipeline can hit. Every class
derives from WforgeError so the command line front end can catch the whole
family in one place and map it to exit code 1.

Connection:
Imported by every library module (quatlin, grid_calc, immersion,
meancurvsphere, flatfam, mudarboux, sequences) and by wforge.py.

Process:
Errors that concern a single grid vertex carry it in the `vertex` attribute and
append it to the message, so a failing pointwise solve can be located on the
grid without re-running the pipeline.
"""

from typing import Optional, Tuple


class WforgeError(Exception):
    """
    Base class of all toolkit errors.

    Attributes:
        vertex: Grid index (i, j) the error refers to, or None
    """
    def __init__(self, message: str, vertex: Optional[Tuple[int, int]] = None):
        self.vertex = None if vertex is None else (int(vertex[0]), int(vertex[1]))
        if self.vertex is not None:
            message = f"{message} (vertex {self.vertex})"
        super().__init__(message)


# --- Linear algebra ---
class SingularMatrix(WforgeError):
    pass


class NotComplexStructure(WforgeError):
    pass


# --- Grid and surfaces ---
class GridTooSmall(WforgeError):
    pass


class BadSpec(WforgeError):
    pass


class DegenerateDifferential(WforgeError):
    pass


class PointAtInfinity(WforgeError):
    pass


# --- Conformal Gauss map ---
class ConformalityTooPoor(WforgeError):
    pass


class WSolveSingular(WforgeError):
    pass


# --- Flat family and transforms ---
class LambdaZero(WforgeError):
    pass


class NotSimplyConnected(WforgeError):
    pass


class BlowUp(WforgeError):
    pass


class SpanningFailed(WforgeError):
    pass


class TSingular(WforgeError):
    pass


class AminusOneSingular(WforgeError):
    pass


# --- Sequences ---
class HopfFieldZero(WforgeError):
    """Raised when a Hopf field vanishes identically; carries which side."""
    def __init__(self, message: str, side: str = "forward"):
        self.side = side
        super().__init__(message)


class RankAmbiguous(WforgeError):
    pass


class NotWillmore(WforgeError):
    pass


class StepDegenerate(WforgeError):
    pass


class NotClosed(WforgeError):
    pass


# --- Front end ---
class ConfigError(WforgeError):
    """Configuration problem; `line` is the 1-based line in the config file if known."""
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
