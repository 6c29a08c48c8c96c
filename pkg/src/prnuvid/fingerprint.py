"""Streaming maximum-likelihood PRNU fingerprint estimation.

Two estimator variants share one accumulator:

* unmasked: F = sum(W_k * I_k) / sum(I_k^2)
* masked (compression-aware): F = sum(W_k * I_k * M_k) / (sum((I_k * M_k)^2) + 1)

where the +1 per cell stands in for the all-ones regularization matrix and
guarantees a finite result at pixels never covered by any mask.

Accumulators use Kahan-compensated sums so that sharded accumulation merged
in any order matches a sequential pass to well under 1e-9.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    FormatError,
    RejectedInputError,
    TruncatedFileError,
)
from .formats import (
    CHECKSUM_LEN,
    atomic_write,
    payload_checksum,
    read_exact,
    verify_checksum,
)
from .noise import postprocess_residual

FINGERPRINT_MAGIC = b"PRNUFP1\x00"

UNMASKED_DENOM_FLOOR = 1e-12


class _KahanSum:
    """Elementwise compensated summation over a fixed-shape matrix."""

    __slots__ = ("total", "comp")

    def __init__(self, shape):
        self.total = np.zeros(shape, dtype=np.float64)
        self.comp = np.zeros(shape, dtype=np.float64)

    def add(self, values):
        y = values - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t

    def add_sum(self, other: "_KahanSum"):
        self.add(other.total)
        self.add(-other.comp)


@dataclass
class FingerprintAccumulator:
    """Running numerator/denominator sums of the ML estimator."""

    height: int
    width: int
    masked_mode: bool
    frames_seen: int = 0
    _num: _KahanSum = field(default=None, repr=False)
    _den: _KahanSum = field(default=None, repr=False)

    def __post_init__(self):
        if self._num is None:
            self._num = _KahanSum((self.height, self.width))
        if self._den is None:
            self._den = _KahanSum((self.height, self.width))

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def numerator(self):
        return self._num.total.copy()

    @property
    def denominator(self):
        return self._den.total.copy()


def new_accumulator(height, width, masked_mode=False):
    return FingerprintAccumulator(height=height, width=width, masked_mode=masked_mode)


def accumulate(acc, frame, residual, mask=None):
    """Add one frame's contribution in place and return the accumulator."""
    frame = np.asarray(frame, dtype=np.float64)
    residual = np.asarray(residual, dtype=np.float64)
    if frame.shape != acc.shape or residual.shape != acc.shape:
        raise DimensionMismatchError(
            f"frame {frame.shape} / residual {residual.shape} vs accumulator {acc.shape}"
        )
    if acc.masked_mode:
        if mask is None:
            raise RejectedInputError("masked accumulator requires a mask")
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != acc.shape:
            raise DimensionMismatchError(f"mask {mask.shape} vs accumulator {acc.shape}")
        masked_frame = frame * mask
    else:
        if mask is not None:
            raise RejectedInputError("mask supplied to an unmasked accumulator")
        masked_frame = frame
    acc._num.add(residual * masked_frame)
    acc._den.add(masked_frame * masked_frame)
    acc.frames_seen += 1
    return acc


def merge(a, b):
    """Combine two accumulators built from disjoint frame shards."""
    if a.shape != b.shape or a.masked_mode != b.masked_mode:
        raise DimensionMismatchError("accumulator dims/mode mismatch in merge")
    out = new_accumulator(a.height, a.width, a.masked_mode)
    out.frames_seen = a.frames_seen + b.frames_seen
    out._num.add_sum(a._num)
    out._num.add_sum(b._num)
    out._den.add_sum(a._den)
    out._den.add_sum(b._den)
    return out


@dataclass(frozen=True)
class Fingerprint:
    """Finalized fingerprint plane (float64 in memory, float32 on disk)."""

    plane: np.ndarray
    masked_mode: bool
    frames_used: int
    source_label: str = ""
    guarded_pixels: int = 0

    @property
    def shape(self):
        return self.plane.shape


def finalize(acc, postprocess=True, source_label=""):
    """Divide the running sums and apply the standard post-processing.

    Masked mode divides by denominator + 1; unmasked mode floors the
    denominator at a tiny epsilon and reports how many pixels needed it.
    """
    if acc.frames_seen < 1:
        raise RejectedInputError("cannot finalize an empty accumulator")
    num = acc._num.total
    den = acc._den.total
    guarded = 0
    if acc.masked_mode:
        plane = num / (den + 1.0)
    else:
        guarded = int(np.count_nonzero(den < UNMASKED_DENOM_FLOOR))
        plane = num / np.maximum(den, UNMASKED_DENOM_FLOOR)
    if postprocess:
        plane = postprocess_residual(plane)
    if not np.all(np.isfinite(plane)):
        raise FormatError("finalized fingerprint contains non-finite values")
    return Fingerprint(
        plane=plane.astype(np.float64),
        masked_mode=acc.masked_mode,
        frames_used=acc.frames_seen,
        source_label=source_label,
        guarded_pixels=guarded,
    )


def _encode(fp: Fingerprint) -> bytes:
    h, w = fp.plane.shape
    header = struct.pack(
        "<IIB3xI", w, h, 1 if fp.masked_mode else 0, fp.frames_used
    )
    body = fp.plane.astype("<f4").tobytes(order="C")
    payload = header + body
    return FINGERPRINT_MAGIC + payload + payload_checksum(payload)


def save_fingerprint(fp: Fingerprint, path):
    atomic_write(path, _encode(fp))


def load_fingerprint(path) -> Fingerprint:
    with open(path, "rb") as fh:
        magic = read_exact(fh, len(FINGERPRINT_MAGIC), "magic")
        if magic != FINGERPRINT_MAGIC:
            raise FormatError(f"bad fingerprint magic {magic!r}")
        header = read_exact(fh, 16, "fingerprint header")
        w, h, masked, frames_used = struct.unpack("<IIB3xI", header)
        if w == 0 or h == 0 or w * h > 2**31:
            raise FormatError(f"implausible fingerprint dimensions {w}x{h}")
        body = read_exact(fh, 4 * w * h, "fingerprint plane")
        stored = read_exact(fh, CHECKSUM_LEN, "checksum")
        if fh.read(1):
            raise FormatError("trailing bytes after fingerprint checksum")
    verify_checksum(header + body, stored, "fingerprint file")
    plane = np.frombuffer(body, dtype="<f4").reshape(h, w)
    return Fingerprint(
        plane=plane.copy(),
        masked_mode=bool(masked),
        frames_used=frames_used,
    )
