"""Mask construction, the binary mask format, and the residual trace format."""

import numpy as np
import pytest

from prnuvid.errors import ChecksumError, FormatError, TruncatedFileError
from prnuvid.h264 import (
    build_masks,
    emit_trace,
    ingest_trace,
    load_masks,
    mask_stats,
    save_masks,
)
from prnuvid.h264.types import BlockResidualMap, FrameMask, StreamInfo


def _map(grid, w, h, idx=0, ftype="I"):
    return BlockResidualMap(frame_index=idx, frame_type=ftype, width=w,
                            height=h, nonzero_ac=np.asarray(grid,
                                                            dtype=np.int32))


class TestBuildMasks:
    def test_single_block_expands_to_16_pixels(self):
        grid = np.zeros((4, 4), dtype=np.int32)
        grid[1, 2] = 3
        mask = build_masks([_map(grid, 16, 16)])[0]
        assert mask.bits.shape == (16, 16)
        assert int(mask.bits.sum()) == 16
        assert np.all(mask.bits[4:8, 8:12] == 1)

    def test_count_threshold_is_one(self):
        grid = np.zeros((2, 2), dtype=np.int32)
        grid[0, 0] = 1
        grid[1, 1] = 100
        mask = build_masks([_map(grid, 8, 8)])[0]
        assert np.all(mask.bits[:4, :4] == 1)
        assert np.all(mask.bits[4:, 4:] == 1)
        assert not np.any(mask.bits[:4, 4:])

    def test_non_multiple_of_four_dimensions_cropped(self):
        grid = np.ones((3, 4), dtype=np.int32)  # covers 10x14 pixels
        mask = build_masks([_map(grid, 14, 10)])[0]
        assert mask.bits.shape == (10, 14)
        assert np.all(mask.bits == 1)

    def test_stats(self):
        a = FrameMask(width=8, height=8, frame_type="I",
                      bits=np.ones((8, 8), dtype=np.uint8))
        b = FrameMask(width=8, height=8, frame_type="P",
                      bits=np.zeros((8, 8), dtype=np.uint8))
        per_frame, agg = mask_stats([a, b])
        assert per_frame == [1.0, 0.0]
        assert agg == {"mean": 0.5, "min": 0.0, "max": 1.0}
        assert mask_stats([])[1]["mean"] == 0.0


class TestMaskPersistence:
    def _sample(self):
        rng = np.random.default_rng(70)
        return [
            FrameMask(width=14, height=10, frame_type=ft,
                      bits=rng.integers(0, 2, size=(10, 14)).astype(np.uint8))
            for ft in ("I", "P", "P")
        ]

    def test_round_trip(self, tmp_path):
        masks = self._sample()
        path = tmp_path / "m.prnumk"
        save_masks(masks, path)
        back = load_masks(path)
        assert len(back) == len(masks)
        for a, b in zip(masks, back):
            assert a.frame_type == b.frame_type
            assert np.array_equal(a.bits, b.bits)

    def test_empty_list_refused(self, tmp_path):
        with pytest.raises(FormatError):
            save_masks([], tmp_path / "m.prnumk")

    def test_truncation_is_structured(self, tmp_path):
        path = tmp_path / "m.prnumk"
        save_masks(self._sample(), path)
        data = path.read_bytes()
        for cut in (3, 10, 25, len(data) - 2):
            bad = tmp_path / "cut.prnumk"
            bad.write_bytes(data[:cut])
            with pytest.raises(TruncatedFileError):
                load_masks(bad)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "m.prnumk"
        save_masks(self._sample(), path)
        data = bytearray(path.read_bytes())
        data[1] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_masks(path)

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "m.prnumk"
        save_masks(self._sample(), path)
        data = bytearray(path.read_bytes())
        data[-12] ^= 0x10  # inside the last mask body
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumError):
            load_masks(path)


class TestTrace:
    def _maps(self):
        g0 = np.zeros((4, 4), dtype=np.int32)
        g0[0, 1] = 2
        g0[3, 3] = 7
        g1 = np.zeros((4, 4), dtype=np.int32)  # fully skipped frame
        g2 = np.zeros((4, 4), dtype=np.int32)
        g2[2, 0] = 1
        return [
            _map(g0, 16, 16, 0, "I"),
            _map(g1, 16, 16, 1, "P"),
            _map(g2, 16, 16, 2, "P"),
        ]

    def test_emit_ingest_round_trip(self, tmp_path):
        maps = self._maps()
        path = str(tmp_path / "t.trace")
        emit_trace(maps, path)
        back = ingest_trace(path)
        assert len(back) == 3
        for a, b in zip(maps, back):
            assert a.frame_type == b.frame_type
            assert np.array_equal(a.nonzero_ac, b.nonzero_ac)

    def test_text_round_trip_and_comments(self):
        text = emit_trace(self._maps())
        assert text.startswith("PRNUTRACE 1 16 16\n")
        commented = "# leading comment\n" + text.replace(
            "\n0 I 3 3 7\n", "\n0 I 3 3 7 # inline comment\n")
        back = ingest_trace(commented)
        assert back[0].nonzero_ac[3, 3] == 7

    def test_zero_count_line_preserves_frame_type(self):
        back = ingest_trace(emit_trace(self._maps()))
        assert back[1].frame_type == "P"
        assert not np.any(back[1].nonzero_ac)

    def test_info_validation(self):
        text = emit_trace(self._maps())
        good = StreamInfo(profile="High", entropy_mode="CABAC", width=16,
                          height=16, frame_count=3)
        assert len(ingest_trace(text, good)) == 3
        wrong_dims = StreamInfo(profile="High", entropy_mode="CABAC",
                                width=32, height=16, frame_count=3)
        with pytest.raises(FormatError):
            ingest_trace(text, wrong_dims)
        wrong_count = StreamInfo(profile="High", entropy_mode="CABAC",
                                 width=16, height=16, frame_count=5)
        with pytest.raises(FormatError):
            ingest_trace(text, wrong_count)

    @pytest.mark.parametrize("text", [
        "",
        "PRNUTRACE 2 16 16\n0 I 0 0 1\n",
        "PRNUTRACE 1 16\n0 I 0 0 1\n",
        "PRNUTRACE 1 0 16\n0 I 0 0 1\n",
        "PRNUTRACE 1 16 16\n",                    # no frames
        "PRNUTRACE 1 16 16\n0 I 0 0\n",           # short line
        "PRNUTRACE 1 16 16\n0 X 0 0 1\n",         # bad frame type
        "PRNUTRACE 1 16 16\n0 I 9 0 1\n",         # block outside grid
        "PRNUTRACE 1 16 16\n0 I 0 0 -1\n",        # negative count
        "PRNUTRACE 1 16 16\n0 I a 0 1\n",         # non-numeric field
        "PRNUTRACE 1 16 16\n2 I 0 0 1\n",         # frames 0 and 1 missing
        "PRNUTRACE 1 16 16\n0 I 0 0 1\n0 P 1 1 1\n",  # frame changes type
    ])
    def test_malformed_traces_rejected(self, text):
        with pytest.raises(FormatError):
            ingest_trace(text)

    def test_empty_map_list_refused(self):
        with pytest.raises(FormatError):
            emit_trace([])
