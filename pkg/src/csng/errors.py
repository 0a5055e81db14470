"""Exception types shared across the package."""


class CsngError(Exception):
    """Base class for every error raised by this package."""


class MalformedFileError(CsngError):
    """File does not parse under the expected format (bad magic, bad JSON, ...)."""


class EmptyDatasetError(CsngError):
    """No valid line survived loading."""


class NonFiniteCoordinateError(MalformedFileError):
    """A vertex coordinate or speed is NaN or infinite."""


class NotLoadedError(CsngError):
    """Operation requires lines but the dataset has none."""


class NotDecomposedError(CsngError):
    """Operation requires segments but the dataset was never decomposed."""


class OutOfBoundsError(CsngError):
    """Grid field sampled outside its bounds."""


class NoValidSeedsError(CsngError):
    """Every seed produced a trace with fewer than 2 vertices."""


class EmptyInputError(CsngError):
    """An index build got an empty segment list."""


class InvalidIdError(CsngError):
    """Segment or node id outside the valid range."""


class ZeroWeightGraphError(CsngError):
    """Modularity is undefined on a graph with zero total weight."""


class NotALeafError(CsngError):
    """Split requested on an internal community node."""


class SingletonNodeError(CsngError):
    """Split requested on a community with fewer than 2 members."""


class UnknownIdError(CsngError):
    """Community node id not present in the tree."""


class NotMergeableError(CsngError):
    """Merge rejected: the nodes' parents are not on a common hierarchical path.

    Carries the offending parent pair so callers can report it.
    """

    def __init__(self, parent_a: int, parent_b: int):
        self.parent_a = parent_a
        self.parent_b = parent_b
        super().__init__(
            f"parents {parent_a} and {parent_b} are not on a common hierarchical path"
        )


class InconsistentInputsError(CsngError):
    """Tree and graph do not describe the same segment universe."""


class DimTooLargeError(CsngError):
    """PCA dimension exceeds min(rows, cols)."""


class KTooLargeError(CsngError):
    """k-means k exceeds the number of rows."""


class UniverseMismatchError(CsngError):
    """Two assignments do not cover the same ids."""
