"""Exception hierarchy for bodyforge.

Every failure the toolkit can signal deliberately derives from
:class:`BodyForgeError`, so callers can catch one base class. Subclasses
exist wherever two failure modes must be distinguishable programmatically
(the CLI maps them to exit codes, the service to HTTP statuses).
"""


class BodyForgeError(Exception):
    """Base class for all bodyforge errors."""


class ShapeParamsError(BodyForgeError, ValueError):
    """A shape vector is malformed: wrong arity, non-finite, or out of bounds."""


class InvalidAssetError(BodyForgeError, ValueError):
    """An asset's arrays are inconsistent (shape mismatch, bad indices)."""


class AssetNotFoundError(BodyForgeError, FileNotFoundError):
    """Asset file does not exist."""


class AssetSchemaError(BodyForgeError, ValueError):
    """Asset file exists but does not conform to the asset schema."""


class NonClosedMeshError(BodyForgeError, ValueError):
    """Mesh is not closed / not consistently wound."""


class IncompleteAssetError(BodyForgeError, KeyError):
    """A named landmark or ring required for a measurement is missing."""


class UndefinedVolumeError(BodyForgeError, ValueError):
    """Volume requested for an open (non-closed) mesh."""


class InvalidRingError(BodyForgeError, ValueError):
    """A measurement ring has fewer than 3 vertices or repeats a vertex."""


class BinConfigError(BodyForgeError, ValueError):
    """Bad calibration configuration (e.g. non-ascending quantiles)."""


class IncompleteBinsError(BodyForgeError, KeyError):
    """A BinTable does not cover a measurement it is asked about."""


class LexiconError(BodyForgeError, ValueError):
    """Lexicon is malformed or asked about an unknown measurement/level."""


class UnparseableDescriptionError(BodyForgeError, ValueError):
    """Free text contained no recognizable body-shape phrase at all.

    Carries the parse diagnostics so callers can report which spans of the
    input were not understood.
    """

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class JsonlFormatError(BodyForgeError, ValueError):
    """A dataset line is malformed. Carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class MalformedOutputError(BodyForgeError, ValueError):
    """Predicted text contains no bracketed list of decimal numbers."""


class ArityError(MalformedOutputError):
    """Predicted text contains a bracketed number list of the wrong length."""


class SolverNumericalError(BodyForgeError, ArithmeticError):
    """Objective became NaN/inf during optimization."""


class InputError(BodyForgeError, ValueError):
    """Generic bad input to an evaluation entry point (e.g. empty record set)."""
