"""Shared data carriers for residual analysis."""

from dataclasses import dataclass

import numpy as np

FRAME_TYPE_I = "I"
FRAME_TYPE_P = "P"
FRAME_TYPE_B = "B"
FRAME_TYPES = (FRAME_TYPE_I, FRAME_TYPE_P, FRAME_TYPE_B)

# macroblock kind codes for the per-block grid
MB_INTRA = 0
MB_INTER = 1
MB_SKIP = 2
MB_PCM = 3

PROFILE_BASELINE = "Baseline"
PROFILE_CONSTRAINED_BASELINE = "ConstrainedBaseline"
PROFILE_MAIN = "Main"
PROFILE_HIGH = "High"

ENTROPY_CAVLC = "CAVLC"
ENTROPY_CABAC = "CABAC"

CONTAINER_ANNEXB = "AnnexB"
CONTAINER_MP4 = "MP4"


@dataclass
class StreamInfo:
    profile: str
    entropy_mode: str
    width: int
    height: int
    frame_count: int = 0
    container: str = CONTAINER_ANNEXB


@dataclass
class BlockResidualMap:
    """Per-frame grid of 4x4-luma-block residual survival records."""

    frame_index: int
    frame_type: str
    width: int
    height: int
    nonzero_ac: np.ndarray        # int grid, ceil(h/4) x ceil(w/4)
    transform_size: np.ndarray = None  # 4 or 8 per cell
    mb_kind: np.ndarray = None         # MB_* per cell

    def __post_init__(self):
        gh = (self.height + 3) // 4
        gw = (self.width + 3) // 4
        if self.nonzero_ac.shape != (gh, gw):
            raise ValueError(
                f"grid {self.nonzero_ac.shape} does not cover {self.width}x{self.height}"
            )
        if self.transform_size is None:
            self.transform_size = np.full((gh, gw), 4, dtype=np.int16)
        if self.mb_kind is None:
            self.mb_kind = np.full((gh, gw), MB_INTRA, dtype=np.uint8)


@dataclass
class FrameMask:
    """Binary pixel mask: 1 where the covering block kept >=1 nonzero AC."""

    width: int
    height: int
    frame_type: str
    bits: np.ndarray  # uint8 {0,1}, height x width

    def coverage(self):
        return float(self.bits.mean()) if self.bits.size else 0.0
