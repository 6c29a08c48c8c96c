"""Compression-aware PRNU fingerprinting and source attribution for H.264 video."""

__version__ = "0.1.0"

from . import codecsim, evalharness, fingerprint, matcher, noise, y4m  # noqa: F401
from .errors import PrnuVidError  # noqa: F401
