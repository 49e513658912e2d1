"""Exception and warning types shared across the package."""


class SeqmarkError(Exception):
    """Base class for all errors raised by this package."""


class EmptyTraceError(SeqmarkError):
    """A trace file or corpus contained no usable tokens."""


class UnknownTokenError(SeqmarkError):
    """A token outside the alphabet was seen and no OTHER bucket exists."""


class AlphabetMismatchError(SeqmarkError):
    """Sequences or matrices refer to incompatible alphabets."""


class ZeroProbabilityError(SeqmarkError):
    """A model assigns probability zero to a sequence (strict scoring only)."""


class InstanceTooLargeError(SeqmarkError):
    """A brute-force oracle was asked to enumerate an infeasible instance."""


class DegenerateDataError(SeqmarkError):
    """Training input is too small or too uniform to fit a model."""


class FileFormatError(SeqmarkError):
    """A persisted model/alphabet/matrix file does not match its format."""


class DegenerateStateWarning(UserWarning):
    """A state had zero expected occupancy during re-estimation; its rows
    were left unchanged for that iteration."""
