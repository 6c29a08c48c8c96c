"""Residual trace files: the CABAC bridge format.

UTF-8, LF line endings. Header line "PRNUTRACE 1 <width> <height>", then one
line per surviving block: "frame_idx frame_type block_row block_col count".
'#' starts a comment. Every frame index in [0, frame_count) must appear at
least once; emit_trace writes a zero-count (0,0) line for frames with no
surviving coefficients so the frame type is always recorded.
"""

import numpy as np

from ..errors import FormatError
from ..formats import atomic_write
from .types import FRAME_TYPES, BlockResidualMap

TRACE_HEADER = "PRNUTRACE 1"


def emit_trace(maps, path=None):
    """Render residual maps as trace text; write to path if given."""
    if not maps:
        raise FormatError("refusing to emit an empty trace")
    w, h = maps[0].width, maps[0].height
    lines = [f"{TRACE_HEADER} {w} {h}"]
    for m in maps:
        if (m.width, m.height) != (w, h):
            raise FormatError("trace dimensions change mid-sequence")
        rows, cols = np.nonzero(m.nonzero_ac)
        if rows.size == 0:
            lines.append(f"{m.frame_index} {m.frame_type} 0 0 0")
            continue
        for r, c in zip(rows.tolist(), cols.tolist()):
            lines.append(
                f"{m.frame_index} {m.frame_type} {r} {c} {int(m.nonzero_ac[r, c])}"
            )
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write(path, text.encode("utf-8"))
    return text


def ingest_trace(source, info=None):
    """Parse a trace (path or text) into BlockResidualMap sequence.

    If info (StreamInfo) is given, the trace's dimensions and frame count are
    checked against it and a mismatch is a hard error.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source and "\n" not in source \
            and not source.startswith(TRACE_HEADER):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source
    lines = text.split("\n")
    header = None
    entries = {}
    frame_types = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 4 or " ".join(parts[:2]) != TRACE_HEADER:
                raise FormatError(f"line {lineno}: bad trace header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric trace dimensions")
            if header[0] <= 0 or header[1] <= 0:
                raise FormatError(f"line {lineno}: non-positive trace dimensions")
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            fidx, brow, bcol, count = (
                int(parts[0]), int(parts[2]), int(parts[3]), int(parts[4])
            )
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric field")
        ftype = parts[1]
        if ftype not in FRAME_TYPES:
            raise FormatError(f"line {lineno}: bad frame type {ftype!r}")
        if fidx < 0 or brow < 0 or bcol < 0 or count < 0:
            raise FormatError(f"line {lineno}: negative value")
        w, h = header
        gh, gw = (h + 3) // 4, (w + 3) // 4
        if brow >= gh or bcol >= gw:
            raise FormatError(
                f"line {lineno}: block ({brow},{bcol}) outside {gh}x{gw} grid"
            )
        if frame_types.setdefault(fidx, ftype) != ftype:
            raise FormatError(f"line {lineno}: frame {fidx} changes type")
        entries.setdefault(fidx, []).append((brow, bcol, count))
    if header is None:
        raise FormatError("trace has no header line")
    w, h = header
    if not entries:
        raise FormatError("trace declares no frames")
    frame_count = max(entries) + 1
    missing = [i for i in range(frame_count) if i not in entries]
    if missing:
        raise FormatError(f"trace missing frames {missing[:8]}")
    if info is not None:
        if (info.width, info.height) != (w, h):
            raise FormatError(
                f"trace dimensions {w}x{h} vs stream {info.width}x{info.height}"
            )
        if info.frame_count and info.frame_count != frame_count:
            raise FormatError(
                f"trace has {frame_count} frames, stream has {info.frame_count}"
            )
    gh, gw = (h + 3) // 4, (w + 3) // 4
    maps = []
    for fidx in range(frame_count):
        grid = np.zeros((gh, gw), dtype=np.int32)
        for brow, bcol, count in entries[fidx]:
            grid[brow, bcol] = count
        maps.append(
            BlockResidualMap(
                frame_index=fidx,
                frame_type=frame_types[fidx],
                width=w,
                height=h,
                nonzero_ac=grid,
            )
        )
    return maps
