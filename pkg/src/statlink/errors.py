"""Exception hierarchy for statlink.

Every error is message-only: construction takes a human-readable string and
nothing else, so errors serialize cleanly over the HTTP boundary and tests
can match on type plus substring.
"""

from __future__ import annotations


class StatlinkError(Exception):
    """Base class for all statlink domain errors."""


# --- time keys ---------------------------------------------------------------


class UnparseableTime(StatlinkError):
    """Text does not match any accepted time-key form."""


class OutOfRange(StatlinkError):
    """Time key parsed but the year or sub-period is outside bounds."""


# --- ingestion ---------------------------------------------------------------


class NotText(StatlinkError):
    """Input bytes are not decodable text."""


class MalformedHeader(StatlinkError):
    """Header row is structurally invalid for the detected format."""


class RaggedRow(StatlinkError):
    """A data row disagrees with the header about its shape."""


class UnparseableNumber(StatlinkError):
    """A data cell is neither a missing token nor a readable number."""


class AmbiguousOrientation(StatlinkError):
    """Neither axis of a wide table reads as a time axis."""


class NoParseableTimes(StatlinkError):
    """No header cell on the time axis parses as a time key."""


class EmptyBody(StatlinkError):
    """Table has a header but no data rows."""


class UnknownFormat(StatlinkError):
    """Input matches none of the recognized source formats."""


class MalformedCube(StatlinkError):
    """A canonical cube document is missing fields or internally broken."""


# --- model / slicing ---------------------------------------------------------


class EmptyCube(StatlinkError):
    """Operation requires a cube with at least one area and one period."""


class EmptyTimeRange(StatlinkError):
    """Selection time_from is after time_to."""


class UnknownArea(StatlinkError):
    """Area code not present in the cube."""


class UnknownDimensionMember(StatlinkError):
    """Dimension name or member code not present in the cube."""


# --- acquisition -------------------------------------------------------------


class FetchFailed(StatlinkError):
    """Remote fetch failed and no cached copy exists."""


class BadStatus(FetchFailed):
    """Remote answered with a non-2xx status and no cached copy exists."""


class EmptySelection(StatlinkError):
    """A remote slice was requested with no areas selected."""


class StorageFailure(StatlinkError):
    """Local persistence (cache, catalog, dashboards) failed to write."""


# --- catalog -----------------------------------------------------------------


class UnknownCube(StatlinkError):
    """Cube id not present in the catalog."""


# --- dashboards / linking ----------------------------------------------------


class UnknownDashboard(StatlinkError):
    """Dashboard id not found."""


class UnknownViz(StatlinkError):
    """Visualization id not found on the dashboard."""


class UnknownItem(StatlinkError):
    """Item reference does not resolve to an indexed visualization item."""


class SameViz(StatlinkError):
    """A link rule may not join two items of the same visualization."""


class IncompatibleVizType(StatlinkError):
    """Requested visualization type cannot render the selection."""


class RevisionConflict(StatlinkError):
    """expected_revision does not match the dashboard's current revision."""


class ValidationError(StatlinkError):
    """Request payload is structurally valid JSON but semantically wrong."""
