"""YUV4MPEG2 reading and writing."""

import numpy as np
import pytest

from prnuvid.errors import FormatError, TruncatedFileError
from prnuvid.y4m import read_y4m, write_y4m


def _frames(n=3, h=16, w=24, seed=80):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, size=(h, w), dtype=np.uint8)
            for _ in range(n)]


class TestRoundTrip:
    def test_luma_preserved_exactly(self, tmp_path):
        frames = _frames()
        path = tmp_path / "v.y4m"
        write_y4m(path, frames)
        back, w, h = read_y4m(path)
        assert (w, h) == (24, 16)
        assert len(back) == len(frames)
        for a, b in zip(frames, back):
            assert np.array_equal(a, b)

    def test_other_colorspaces_skip_correct_chroma(self, tmp_path):
        luma = _frames(1)[0]
        for cs, ratio in (("422", 1.0), ("444", 2.0), ("mono", 0.0)):
            path = tmp_path / f"v_{cs}.y4m"
            chroma = bytes([128]) * int(luma.size * ratio)
            data = (f"YUV4MPEG2 W24 H16 F25:1 C{cs}\n".encode()
                    + b"FRAME\n" + luma.tobytes() + chroma)
            path.write_bytes(data)
            back, _, _ = read_y4m(path)
            assert np.array_equal(back[0], luma)

    def test_write_rejects_odd_dimensions(self, tmp_path):
        with pytest.raises(FormatError):
            write_y4m(tmp_path / "v.y4m", [np.zeros((15, 24), dtype=np.uint8)])

    def test_write_rejects_empty_sequence(self, tmp_path):
        with pytest.raises(FormatError):
            write_y4m(tmp_path / "v.y4m", [])


class TestRejection:
    def _valid_bytes(self):
        frames = _frames(2)
        import io
        import os
        import tempfile
        fd, path = tempfile.mkstemp(suffix=".y4m")
        os.close(fd)
        try:
            write_y4m(path, frames)
            with open(path, "rb") as fh:
                return fh.read()
        finally:
            os.unlink(path)

    def test_bad_magic(self, tmp_path):
        data = self._valid_bytes()
        path = tmp_path / "v.y4m"
        path.write_bytes(b"JUNKMPEG2" + data[9:])
        with pytest.raises(FormatError):
            read_y4m(path)

    def test_interlaced_rejected(self, tmp_path):
        data = self._valid_bytes().replace(b" Ip ", b" It ", 1)
        path = tmp_path / "v.y4m"
        path.write_bytes(data)
        with pytest.raises(FormatError) as exc:
            read_y4m(path)
        assert "interlaced" in str(exc.value)

    def test_missing_dimensions(self, tmp_path):
        path = tmp_path / "v.y4m"
        path.write_bytes(b"YUV4MPEG2 F25:1\nFRAME\n" + bytes(16))
        with pytest.raises(FormatError):
            read_y4m(path)

    def test_truncated_luma(self, tmp_path):
        data = self._valid_bytes()
        path = tmp_path / "v.y4m"
        path.write_bytes(data[: len(data) - 500])
        with pytest.raises(TruncatedFileError):
            read_y4m(path)

    def test_bad_frame_marker(self, tmp_path):
        data = self._valid_bytes().replace(b"FRAME\n", b"FRUME\n", 1)
        path = tmp_path / "v.y4m"
        path.write_bytes(data)
        with pytest.raises(FormatError):
            read_y4m(path)

    def test_no_frames(self, tmp_path):
        path = tmp_path / "v.y4m"
        path.write_bytes(b"YUV4MPEG2 W24 H16 F25:1 C420jpeg\n")
        with pytest.raises(FormatError):
            read_y4m(path)

    def test_unknown_colorspace(self, tmp_path):
        path = tmp_path / "v.y4m"
        path.write_bytes(b"YUV4MPEG2 W24 H16 C999\nFRAME\n" + bytes(16 * 24))
        with pytest.raises(FormatError):
            read_y4m(path)
