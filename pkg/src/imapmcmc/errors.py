"""Exception hierarchy.

``DataError`` and ``NumericalError`` map to distinct CLI exit codes.
"""


class ImapError(Exception):
    """Base class for package errors."""


class DataError(ImapError, ValueError):
    """Invalid or unusable input data."""


class ZeroVarianceColumn(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has zero sample variance")
        self.name = name


class NumericalError(ImapError, ArithmeticError):
    """A computation failed for numerical reasons."""


class SingularSubmatrix(NumericalError):
    def __init__(self, indices, rcond=0.0, what="correlation"):
        self.indices = tuple(indices)
        self.rcond = rcond
        super().__init__(
            f"singular {what} submatrix over nodes {list(self.indices)} "
            f"(reciprocal condition estimate {rcond:.3g})"
        )


class NotAdjacent(ImapError, ValueError):
    """Two permutations do not differ by a single adjacent transposition."""


class EmptyTrace(ImapError, ValueError):
    pass


class ZeroVariance(ImapError, ValueError):
    pass


class DegenerateTruth(ImapError, ValueError):
    """The reference graph has no positives or no negatives."""


class TooLarge(ImapError, ValueError):
    pass
