"""H.264 residual-syntax analysis: find blocks whose quantized prediction
residue kept at least one nonzero AC coefficient, and turn that into
per-frame pixel masks."""

from .types import BlockResidualMap, FrameMask, StreamInfo
from .masks import build_masks, mask_stats, save_masks, load_masks
from .trace import emit_trace, ingest_trace
from .nal import split_annexb
from .parser import parse_stream, parse_annexb, analyze_file
from .mp4 import demux_mp4


__all__ = [
    "BlockResidualMap", "FrameMask", "StreamInfo",
    "build_masks", "mask_stats", "save_masks", "load_masks",
    "emit_trace", "ingest_trace", "split_annexb", "demux_mp4",
    "parse_stream", "parse_annexb", "analyze_file",
]
