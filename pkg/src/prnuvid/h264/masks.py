"""Mask construction from residual maps and the PRNUMK1 mask file format."""

import struct

import numpy as np

from ..errors import FormatError
from ..formats import (
    CHECKSUM_LEN,
    atomic_write,
    payload_checksum,
    read_exact,
    verify_checksum,
)
from .types import FRAME_TYPES, BlockResidualMap, FrameMask

MASK_MAGIC = b"PRNUMK1\x00"


def build_masks(maps):
    """Expand block grids to pixel resolution: 1 iff nonzero_ac >= 1."""
    out = []
    for m in maps:
        bits = (m.nonzero_ac > 0).astype(np.uint8)
        pix = np.repeat(np.repeat(bits, 4, axis=0), 4, axis=1)
        out.append(
            FrameMask(
                width=m.width,
                height=m.height,
                frame_type=m.frame_type,
                bits=pix[: m.height, : m.width],
            )
        )
    return out


def mask_stats(masks):
    """Per-frame and aggregate coverage ratios."""
    per_frame = [m.coverage() for m in masks]
    if per_frame:
        agg = {
            "mean": float(np.mean(per_frame)),
            "min": float(np.min(per_frame)),
            "max": float(np.max(per_frame)),
        }
    else:
        agg = {"mean": 0.0, "min": 0.0, "max": 0.0}
    return per_frame, agg


def _encode(masks):
    if not masks:
        raise FormatError("refusing to write an empty mask file")
    w, h = masks[0].width, masks[0].height
    parts = [struct.pack("<III", w, h, len(masks))]
    for m in masks:
        if (m.width, m.height) != (w, h):
            raise FormatError("mask dimensions change mid-sequence")
        if m.frame_type not in FRAME_TYPES:
            raise FormatError(f"bad frame type {m.frame_type!r}")
        parts.append(m.frame_type.encode("ascii"))
        packed = np.packbits(m.bits.astype(np.uint8), axis=1)  # pad rows to bytes
        parts.append(packed.tobytes(order="C"))
    payload = b"".join(parts)
    return MASK_MAGIC + payload + payload_checksum(payload)


def save_masks(masks, path):
    atomic_write(path, _encode(masks))


def load_masks(path):
    with open(path, "rb") as fh:
        magic = read_exact(fh, len(MASK_MAGIC), "magic")
        if magic != MASK_MAGIC:
            raise FormatError(f"bad mask magic {magic!r}")
        header = read_exact(fh, 12, "mask header")
        w, h, count = struct.unpack("<III", header)
        if w == 0 or h == 0 or count == 0 or w * h > 2**31:
            raise FormatError(f"implausible mask header {w}x{h}x{count}")
        row_bytes = (w + 7) // 8
        payload_parts = [header]
        masks = []
        for _ in range(count):
            ft = read_exact(fh, 1, "frame type")
            if ft.decode("ascii", "replace") not in FRAME_TYPES:
                raise FormatError(f"bad frame type byte {ft!r}")
            body = read_exact(fh, row_bytes * h, "mask rows")
            payload_parts.append(ft)
            payload_parts.append(body)
            rows = np.frombuffer(body, dtype=np.uint8).reshape(h, row_bytes)
            bits = np.unpackbits(rows, axis=1)[:, :w]
            masks.append(
                FrameMask(width=w, height=h, frame_type=ft.decode("ascii"),
                          bits=bits.astype(np.uint8))
            )
        stored = read_exact(fh, CHECKSUM_LEN, "checksum")
        if fh.read(1):
            raise FormatError("trailing bytes after mask checksum")
    verify_checksum(b"".join(payload_parts), stored, "mask file")
    return masks
