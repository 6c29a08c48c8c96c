"""ISO-BMFF demuxing of AVC tracks."""

import os

import numpy as np
import pytest

from prnuvid.errors import FormatError, TruncatedFileError
from prnuvid.h264 import analyze_file, ingest_trace
from prnuvid.h264.mp4 import demux_mp4, looks_like_mp4
from prnuvid.h264.nal import NAL_PPS, NAL_SLICE_IDR, NAL_SPS
from prnuvid.h264.types import CONTAINER_MP4

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
MP4_FIXTURE = os.path.join(FIXTURE_DIR, "single_idr_48x48.mp4")


def _fixture_bytes():
    with open(MP4_FIXTURE, "rb") as fh:
        return fh.read()


class TestDemux:
    def test_fixture_nal_sequence(self):
        nals, info = demux_mp4(_fixture_bytes())
        assert [n.nal_type for n in nals] == [NAL_SPS, NAL_PPS, NAL_SLICE_IDR]
        assert info.container == CONTAINER_MP4
        assert (info.width, info.height) == (48, 48)

    def test_fixture_matches_trace(self):
        info, maps = analyze_file(MP4_FIXTURE)
        trace_maps = ingest_trace(
            os.path.join(FIXTURE_DIR, "single_idr_48x48.trace"))
        assert len(maps) == len(trace_maps) == 1
        assert maps[0].frame_type == trace_maps[0].frame_type
        assert np.array_equal(maps[0].nonzero_ac, trace_maps[0].nonzero_ac)
        assert info.frame_count == 1

    def test_looks_like_mp4(self):
        assert looks_like_mp4(_fixture_bytes())
        assert not looks_like_mp4(b"\x00\x00\x00\x01\x67")
        assert not looks_like_mp4(b"")


class TestRejection:
    def test_annexb_input_is_container_mismatch(self):
        with open(os.path.join(FIXTURE_DIR, "i_only_64x64.264"), "rb") as fh:
            data = fh.read()
        with pytest.raises(FormatError) as exc:
            demux_mp4(data)
        assert "Annex-B" in str(exc.value)

    def test_empty_file(self):
        with pytest.raises(TruncatedFileError):
            demux_mp4(b"")

    def test_garbage_bytes(self):
        with pytest.raises(FormatError):
            demux_mp4(b"\xde\xad\xbe\xef" * 8)

    def test_truncated_mdat(self):
        data = _fixture_bytes()
        with pytest.raises(TruncatedFileError):
            demux_mp4(data[:-16])

    def test_missing_moov(self):
        data = _fixture_bytes()
        # corrupt the moov type so the box walk cannot find it
        mutated = data.replace(b"moov", b"mooX", 1)
        with pytest.raises(FormatError):
            demux_mp4(mutated)
