"""YUV4MPEG2 frame-sequence reader and writer.

Only the luma plane is consumed; chroma planes are sized from the C
colorspace tag and skipped. The writer emits C420jpeg with flat mid-gray
chroma, which is enough to carry decoded luma between tools losslessly.
"""

import numpy as np

from .errors import FormatError, TruncatedFileError
from .formats import atomic_write

Y4M_MAGIC = b"YUV4MPEG2"

# chroma bytes per frame as a fraction of luma bytes, by colorspace family
_CHROMA_RATIO = {
    "420": 0.5,
    "411": 0.5,
    "422": 1.0,
    "444": 2.0,
    "mono": 0.0,
}


def _chroma_bytes(colorspace, width, height):
    key = "mono" if colorspace.startswith("mono") else colorspace[:3]
    if key not in _CHROMA_RATIO:
        raise FormatError(f"unsupported YUV4MPEG2 colorspace C{colorspace}")
    return int(width * height * _CHROMA_RATIO[key])


def _read_line(fh, what, limit=512):
    out = bytearray()
    while len(out) < limit:
        b = fh.read(1)
        if not b:
            raise TruncatedFileError(f"EOF while reading {what}")
        if b == b"\n":
            return bytes(out)
        out += b
    raise FormatError(f"{what} exceeds {limit} bytes without newline")


def read_y4m(path):
    """Read luma planes from a YUV4MPEG2 file.

    Returns (frames, width, height) where frames is a list of uint8
    height x width arrays.
    """
    with open(path, "rb") as fh:
        header = _read_line(fh, "stream header")
        fields = header.split(b" ")
        if fields[0] != Y4M_MAGIC:
            raise FormatError(f"bad YUV4MPEG2 magic {fields[0]!r}")
        width = height = None
        colorspace = "420jpeg"
        for field in fields[1:]:
            if not field:
                continue
            tag, value = chr(field[0]), field[1:].decode("ascii", "replace")
            if tag == "W":
                width = int(value)
            elif tag == "H":
                height = int(value)
            elif tag == "C":
                colorspace = value
            elif tag == "I" and value not in ("p", "?"):
                raise FormatError("interlaced YUV4MPEG2 input is not supported")
        if not width or not height or width <= 0 or height <= 0:
            raise FormatError("YUV4MPEG2 header lacks valid W/H fields")
        skip = _chroma_bytes(colorspace, width, height)
        frames = []
        while True:
            first = fh.read(1)
            if not first:
                break
            marker = first + fh.read(4)
            if marker != b"FRAME":
                raise FormatError(
                    f"expected FRAME marker at frame {len(frames)}, got {marker!r}"
                )
            _read_line(fh, f"frame {len(frames)} header")  # optional params
            luma = fh.read(width * height)
            if len(luma) != width * height:
                raise TruncatedFileError(
                    f"frame {len(frames)}: luma plane truncated "
                    f"({len(luma)}/{width * height} bytes)"
                )
            chroma = fh.read(skip)
            if len(chroma) != skip:
                raise TruncatedFileError(
                    f"frame {len(frames)}: chroma planes truncated"
                )
            frames.append(
                np.frombuffer(luma, dtype=np.uint8).reshape(height, width).copy()
            )
    if not frames:
        raise FormatError("YUV4MPEG2 file contains no frames")
    return frames, width, height


def write_y4m(path, frames, fps=(25, 1)):
    """Write uint8 luma planes as C420jpeg with flat chroma."""
    frames = [np.asarray(f) for f in frames]
    if not frames:
        raise FormatError("refusing to write an empty YUV4MPEG2 file")
    h, w = frames[0].shape
    if w % 2 or h % 2:
        raise FormatError(f"4:2:0 output needs even dimensions, got {w}x{h}")
    chroma = bytes([128]) * ((w // 2) * (h // 2) * 2)
    parts = [f"YUV4MPEG2 W{w} H{h} F{fps[0]}:{fps[1]} Ip A1:1 C420jpeg\n".encode()]
    for i, frame in enumerate(frames):
        if frame.shape != (h, w):
            raise FormatError(f"frame {i} shape {frame.shape} differs from {h}x{w}")
        plane = np.clip(np.rint(frame.astype(np.float64)), 0, 255).astype(np.uint8)
        parts.append(b"FRAME\n")
        parts.append(plane.tobytes(order="C"))
        parts.append(chroma)
    atomic_write(path, b"".join(parts))
