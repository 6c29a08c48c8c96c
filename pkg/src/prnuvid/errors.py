"""Exception hierarchy shared across the package."""


class PrnuVidError(Exception):
    """Base class for all package errors."""


class RejectedInputError(PrnuVidError):
    """Input violates a documented precondition (bad dims, NaN score, ...)."""


class DimensionMismatchError(RejectedInputError):
    """Operands that must share a shape do not."""


class DegenerateInputError(RejectedInputError):
    """Input is technically valid but has no usable signal (e.g. constant plane in NCC)."""


class FormatError(PrnuVidError):
    """A binary or text artifact does not conform to its documented format."""


class TruncatedFileError(FormatError):
    """File ended before the declared payload was complete."""


class ChecksumError(FormatError):
    """Stored checksum does not match the payload."""


class ParseError(PrnuVidError):
    """H.264 bitstream syntax violation.

    Carries enough position info to locate the offending syntax element.
    """

    def __init__(self, message, bit_offset=None, mb_addr=None):
        if bit_offset is not None:
            message = f"{message} (bit offset {bit_offset})"
        if mb_addr is not None:
            message = f"{message} (macroblock {mb_addr})"
        super().__init__(message)
        self.bit_offset = bit_offset
        self.mb_addr = mb_addr


class UnsupportedFeatureError(PrnuVidError):
    """Stream uses an H.264 tool outside the supported subset (FMO, interlace, ...)."""


class UnsupportedEntropyError(UnsupportedFeatureError):
    """CABAC stream hit the native parser; use a residual trace instead."""
