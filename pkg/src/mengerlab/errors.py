"""Exception hierarchy.

Every error raised by the library derives from :class:`MengerLabError`.
The CLI maps these to exit code 2 and a JSON error record on stderr.
"""


class MengerLabError(Exception):
    """Base class for all library errors."""

    code = "MengerLabError"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


def _make(name, doc):
    cls = type(name, (MengerLabError,), {"__doc__": doc, "code": name})
    return cls


DegenerateInput = _make("DegenerateInput", "Input vectors are numerically linearly dependent.")
DimMismatch = _make("DimMismatch", "Subspaces or points of incompatible dimension.")
TooSteep = _make("TooSteep", "Plane is too steep over the reference plane to be a graph.")
IndexOutOfRange = _make("IndexOutOfRange", "Vertex index outside the simplex.")
DegenerateFace = _make("DegenerateFace", "The face opposite a vertex does not span a flat of full dimension.")
TooFewPoints = _make("TooFewPoints", "Not enough points for the requested simplex.")
TooLargeN = _make("TooLargeN", "Permutation group too large to enumerate.")
BadParams = _make("BadParams", "Invalid parameters.")
EmptyBall = _make("EmptyBall", "The ball contains no atoms.")
TooLarge = _make("TooLarge", "Exact enumeration exceeds the configured tuple cap.")
NoGoodBall = _make("NoGoodBall", "No stopping-set ball is available for a Whitney cube.")
ProjectionNotInjective = _make(
    "ProjectionNotInjective", "Two zero-distance points share a projection onto the reference plane."
)
OutOfDomain = _make("OutOfDomain", "Evaluation point outside the domain of the graph function.")
EmptyMeasure = _make("EmptyMeasure", "Measure has no atoms.")

__all__ = [
    "MengerLabError",
    "DegenerateInput",
    "DimMismatch",
    "TooSteep",
    "IndexOutOfRange",
    "DegenerateFace",
    "TooFewPoints",
    "TooLargeN",
    "BadParams",
    "EmptyBall",
    "TooLarge",
    "NoGoodBall",
    "ProjectionNotInjective",
    "OutOfDomain",
    "EmptyMeasure",
]
