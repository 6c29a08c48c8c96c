"""Bitstream parser checked against fixture traces, an independent encoder,
and a reference decoder."""

import os

import numpy as np
import pytest

from prnuvid.errors import (
    ParseError,
    PrnuVidError,
    UnsupportedEntropyError,
)
from prnuvid.h264 import analyze_file, ingest_trace, parse_annexb
from prnuvid.h264.types import (
    ENTROPY_CAVLC,
    FRAME_TYPE_I,
    FRAME_TYPE_P,
    MB_PCM,
    MB_SKIP,
    PROFILE_CONSTRAINED_BASELINE,
    PROFILE_HIGH,
)

from h264_writer import BitWriter, MacroblockSpec, StreamWriter, nal_unit
from refdecode import decode_luma, have_decoder

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")

ANNEXB_FIXTURES = (
    "i_only_64x64",
    "ippp_64x64",
    "t8_64x64",
    "crop_56x48",
)


def _assert_maps_match_trace(maps, trace_maps):
    assert len(maps) == len(trace_maps)
    for got, want in zip(maps, trace_maps):
        assert got.frame_type == want.frame_type, got.frame_index
        assert np.array_equal(got.nonzero_ac, want.nonzero_ac), got.frame_index


class TestFixtureFidelity:
    @pytest.mark.parametrize("name", ANNEXB_FIXTURES)
    def test_annexb_fixture_matches_trace(self, name):
        info, maps = analyze_file(os.path.join(FIXTURE_DIR, name + ".264"))
        trace_maps = ingest_trace(os.path.join(FIXTURE_DIR, name + ".trace"))
        _assert_maps_match_trace(maps, trace_maps)
        assert info.entropy_mode == ENTROPY_CAVLC
        assert info.frame_count == len(maps)

    def test_crop_fixture_dimensions(self):
        info, maps = analyze_file(os.path.join(FIXTURE_DIR, "crop_56x48.264"))
        assert (info.width, info.height) == (56, 48)
        assert maps[0].nonzero_ac.shape == (12, 14)

    def test_t8_fixture_is_high_profile(self):
        info, maps = analyze_file(os.path.join(FIXTURE_DIR, "t8_64x64.264"))
        assert info.profile == PROFILE_HIGH
        assert any(np.any(m.transform_size == 8) for m in maps)

    def test_baseline_profile_reported(self):
        info, _ = analyze_file(os.path.join(FIXTURE_DIR, "i_only_64x64.264"))
        assert info.profile == PROFILE_CONSTRAINED_BASELINE


def _rand_coeffs(rng, density, n=16, amp=5):
    c = [0] * n
    for i in range(n):
        if rng.random() < density:
            v = int(rng.integers(1, amp))
            c[i] = v if rng.random() < 0.5 else -v
    return c


class TestWriterCrossCheck:
    def _build_stream(self):
        rng = np.random.default_rng(60)
        sw = StreamWriter(32, 32, qp=26)
        sw.add_frame(
            [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                     dtype=np.uint8)),
             MacroblockSpec("i4",
                            luma=[_rand_coeffs(rng, 0.3) for _ in range(16)]),
             MacroblockSpec("i16",
                            luma=[_rand_coeffs(rng, 0.2, 15) for _ in range(16)]),
             MacroblockSpec("i16", luma=[[0] * 15] * 16)], "I")
        sw.add_frame(
            [MacroblockSpec("skip"),
             MacroblockSpec("p",
                            luma=[_rand_coeffs(rng, 0.3) for _ in range(16)]),
             MacroblockSpec("p", luma=[[0] * 16] * 16),
             MacroblockSpec("pi4",
                            luma=[_rand_coeffs(rng, 0.2) for _ in range(16)])],
            "P")
        return sw

    def test_parser_agrees_with_encoder_truth(self):
        sw = self._build_stream()
        info, maps = parse_annexb(sw.annexb())
        truth = sw.truth_grids()
        assert [m.frame_type for m in maps] == [t[0] for t in truth]
        for m, (_, grid) in zip(maps, truth):
            assert np.array_equal(m.nonzero_ac, grid)

    @pytest.mark.skipif(not have_decoder(), reason="no reference decoder")
    def test_encoder_is_pixel_exact_vs_reference_decoder(self):
        sw = self._build_stream()
        frames = decode_luma(sw.annexb())
        assert len(frames) == len(sw.recon_frames)
        for got, want in zip(frames, sw.recon_frames):
            assert np.array_equal(got, want.astype(np.uint8))

    def test_pcm_macroblock_counts_as_fully_coded(self):
        rng = np.random.default_rng(61)
        sw = StreamWriter(16, 16, qp=26)
        sw.add_frame([MacroblockSpec(
            "pcm", luma=rng.integers(0, 256, (16, 16), dtype=np.uint8))], "I")
        _, maps = parse_annexb(sw.annexb())
        assert np.all(maps[0].nonzero_ac == 16)
        assert np.all(maps[0].mb_kind == MB_PCM)

    def test_all_skip_p_frame(self):
        rng = np.random.default_rng(62)
        sw = StreamWriter(32, 32, qp=26)
        sw.add_frame(
            [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                     dtype=np.uint8))
             for _ in range(4)], "I")
        sw.add_frame([MacroblockSpec("skip")] * 4, "P")
        _, maps = parse_annexb(sw.annexb())
        assert maps[1].frame_type == FRAME_TYPE_P
        assert not np.any(maps[1].nonzero_ac)
        assert np.all(maps[1].mb_kind == MB_SKIP)
        assert maps[0].frame_type == FRAME_TYPE_I


def _cabac_stream():
    """SPS + PPS with CABAC flagged + one slice NAL."""
    w = BitWriter()
    w.u(8, 66)
    w.u(8, 0xC0)
    w.u(8, 20)
    w.ue(0)
    w.ue(0)  # log2_max_frame_num_minus4
    w.ue(2)  # pic_order_cnt_type
    w.ue(1)
    w.u(1, 0)
    w.ue(0)  # 1 MB wide
    w.ue(0)  # 1 MB high
    w.u(1, 1)
    w.u(1, 1)
    w.u(1, 0)
    w.u(1, 0)
    w.trailing()
    sps = nal_unit(7, 3, w.bytes())
    w = BitWriter()
    w.ue(0)
    w.ue(0)
    w.u(1, 1)  # entropy_coding_mode_flag: CABAC
    w.u(1, 0)
    w.ue(0)
    w.ue(0)
    w.ue(0)
    w.u(1, 0)
    w.u(2, 0)
    w.se(0)
    w.se(0)
    w.se(0)
    w.u(1, 0)
    w.u(1, 0)
    w.u(1, 0)
    w.trailing()
    pps = nal_unit(8, 3, w.bytes())
    w = BitWriter()
    w.ue(0)  # first_mb_in_slice
    w.ue(7)  # slice_type: all-I
    w.ue(0)  # pps_id
    w.trailing()
    slc = nal_unit(5, 3, w.bytes())
    return sps + pps + slc


class TestUnsupportedAndInvalid:
    def test_cabac_raises_with_trace_remediation(self):
        with pytest.raises(UnsupportedEntropyError) as exc:
            parse_annexb(_cabac_stream())
        assert "ingest_trace" in str(exc.value)

    def test_no_start_code(self):
        with pytest.raises(ParseError):
            parse_annexb(b"\xff" * 64)

    def test_empty_stream(self):
        with pytest.raises(ParseError):
            parse_annexb(b"")

    def test_stream_without_pictures(self):
        sw = StreamWriter(16, 16, qp=26)
        with pytest.raises(ParseError):
            parse_annexb(sw.annexb())  # SPS + PPS only

    def test_truncated_slice_payload(self):
        with open(os.path.join(FIXTURE_DIR, "i_only_64x64.264"), "rb") as fh:
            data = fh.read()
        with pytest.raises(PrnuVidError):
            parse_annexb(data[: len(data) // 2])

    def test_byte_mutations_never_crash(self):
        with open(os.path.join(FIXTURE_DIR, "ippp_64x64.264"), "rb") as fh:
            data = bytearray(fh.read())
        rng = np.random.default_rng(63)
        survived = 0
        for _ in range(150):
            mutated = bytearray(data)
            for _ in range(int(rng.integers(1, 4))):
                mutated[int(rng.integers(0, len(mutated)))] = int(
                    rng.integers(0, 256))
            try:
                parse_annexb(bytes(mutated))
                survived += 1
            except PrnuVidError:
                pass
        # most mutations should be rejected as structured errors
        assert survived < 150
