"""Exception hierarchy for the branchrange toolkit.

Every error raised by the library derives from :class:`BranchRangeError` so
callers (and the CLI) can catch toolkit failures without swallowing
programming errors.
"""


class BranchRangeError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(BranchRangeError):
    """Two arrays or an array and a camera rig disagree on width/height."""


class ZeroOrNegativeDisparity(BranchRangeError):
    """A scalar disparity <= 0 cannot be converted to a depth."""


class NonPositiveDepth(BranchRangeError):
    """A scalar depth <= 0 cannot be back-projected."""


class WindowTooLarge(BranchRangeError):
    """A matching window does not fit the image (or the census code width)."""


class ParseError(BranchRangeError):
    """A config, mask, or scene file could not be parsed."""


class EmptyMask(BranchRangeError):
    """A segmentation mask contains no branch pixels."""


class DegenerateMask(BranchRangeError):
    """A mask's traced boundary has fewer than 3 points."""


class TooFewPoints(BranchRangeError):
    """Fewer than 3 sampled points were supplied to the estimator."""


class EmptyInput(BranchRangeError):
    """A statistical reduction received an empty value list."""


class NoValidDepths(BranchRangeError):
    """Every depth lookup hit an invalid (zero) depth pixel."""


class InvalidSceneSpec(BranchRangeError):
    """A synthetic scene description violates its geometric constraints."""
