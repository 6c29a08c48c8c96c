"""Minimal ISO-BMFF (MP4/MOV/3GP) demuxer for AVC video tracks.

Extracts SPS/PPS from the decoder configuration record and converts the
length-prefixed samples of the first AVC video track into a NAL sequence in
decode order. Only what mask extraction needs; no audio, no edit lists.
"""

import struct

from ..errors import FormatError, ParseError, TruncatedFileError
from .nal import Nal, nals_from_length_prefixed, unescape_rbsp
from .parser import _stream_info_from_nals
from .types import CONTAINER_MP4

_TOP_LEVEL_BOXES = {
    b"ftyp", b"moov", b"mdat", b"free", b"skip", b"wide", b"styp", b"moof",
    b"pdin", b"uuid", b"meta", b"sidx",
}


def looks_like_mp4(data: bytes) -> bool:
    if len(data) < 8:
        return False
    size = int.from_bytes(data[:4], "big")
    return data[4:8] in _TOP_LEVEL_BOXES and (size == 0 or size == 1 or size >= 8)


def _iter_boxes(data, start, end, path=""):
    pos = start
    while pos < end:
        if pos + 8 > end:
            raise TruncatedFileError(f"truncated box header at offset {pos}"
                                     f" (inside {path or 'file'})")
        size = int.from_bytes(data[pos:pos + 4], "big")
        btype = data[pos + 4:pos + 8]
        body = pos + 8
        if size == 1:
            if pos + 16 > end:
                raise TruncatedFileError(f"truncated 64-bit box at {pos}")
            size = int.from_bytes(data[pos + 8:pos + 16], "big")
            body = pos + 16
        elif size == 0:
            size = end - pos
        if size < body - pos or pos + size > end:
            raise TruncatedFileError(
                f"box {btype!r} at offset {pos} claims {size} bytes but only "
                f"{end - pos} remain"
            )
        yield btype, body, pos + size
        pos += size


def _find_box(data, start, end, btype, path):
    for t, body, bend in _iter_boxes(data, start, end, path):
        if t == btype:
            return body, bend
    raise FormatError(f"required box {btype.decode('ascii', 'replace')!r} "
                      f"missing under {path or 'file root'}")


def _parse_avcc(data, start, end):
    """AVCDecoderConfigurationRecord -> (length_size, [sps bytes], [pps bytes])."""
    if end - start < 7:
        raise TruncatedFileError("decoder configuration record too short")
    pos = start
    version = data[pos]
    if version != 1:
        raise FormatError(f"unsupported AVC configuration version {version}")
    length_size = (data[pos + 4] & 3) + 1
    num_sps = data[pos + 5] & 31
    pos += 6
    sps_list = []
    for _ in range(num_sps):
        if pos + 2 > end:
            raise TruncatedFileError("truncated SPS entry in configuration")
        ln = struct.unpack_from(">H", data, pos)[0]
        pos += 2
        if pos + ln > end:
            raise TruncatedFileError("truncated SPS payload in configuration")
        sps_list.append(data[pos:pos + ln])
        pos += ln
    if pos >= end:
        raise TruncatedFileError("configuration record ends before PPS count")
    num_pps = data[pos]
    pos += 1
    pps_list = []
    for _ in range(num_pps):
        if pos + 2 > end:
            raise TruncatedFileError("truncated PPS entry in configuration")
        ln = struct.unpack_from(">H", data, pos)[0]
        pos += 2
        if pos + ln > end:
            raise TruncatedFileError("truncated PPS payload in configuration")
        pps_list.append(data[pos:pos + ln])
        pos += ln
    if not sps_list or not pps_list:
        raise FormatError("configuration record carries no SPS/PPS")
    return length_size, sps_list, pps_list


def _read_u32_table(data, body, bend, skip, what):
    pos = body + skip
    if pos + 4 > bend:
        raise TruncatedFileError(f"truncated {what} box")
    count = int.from_bytes(data[pos:pos + 4], "big")
    pos += 4
    if pos + 4 * count > bend:
        raise TruncatedFileError(f"{what} box shorter than its entry count")
    return list(struct.unpack_from(f">{count}I", data, pos)), pos


def _video_sample_table(data, trak_body, trak_end):
    mdia, mdia_end = _find_box(data, trak_body, trak_end, b"mdia", "trak")
    hdlr, hdlr_end = _find_box(data, mdia, mdia_end, b"hdlr", "mdia")
    if hdlr_end - hdlr < 12 or data[hdlr + 8:hdlr + 12] != b"vide":
        return None
    minf, minf_end = _find_box(data, mdia, mdia_end, b"minf", "mdia")
    stbl, stbl_end = _find_box(data, minf, minf_end, b"stbl", "minf")
    return stbl, stbl_end


def demux_mp4(data: bytes):
    """Demux the first AVC video track. Returns (nals, StreamInfo)."""
    if not data:
        raise TruncatedFileError("empty file: expected 8 bytes of box header")
    if data[:4] in (b"\x00\x00\x00\x01",) or data[:3] == b"\x00\x00\x01":
        raise FormatError(
            "start code detected: this is an Annex-B elementary stream, "
            "not an ISO-BMFF container"
        )
    if not looks_like_mp4(data):
        raise FormatError("no recognizable ISO-BMFF box structure")
    end = len(data)
    moov, moov_end = _find_box(data, 0, end, b"moov", "")

    stbl = None
    for t, body, bend in _iter_boxes(data, moov, moov_end, "moov"):
        if t == b"trak":
            found = _video_sample_table(data, body, bend)
            if found is not None:
                stbl, stbl_end = found
                break
    if stbl is None:
        raise FormatError("no video track in moov")

    # sample description: must be an AVC entry carrying avcC
    stsd, stsd_end = _find_box(data, stbl, stbl_end, b"stsd", "stbl")
    entry_start = stsd + 8  # version/flags + entry_count
    codec = None
    avcc = None
    for t, body, bend in _iter_boxes(data, entry_start, stsd_end, "stsd"):
        codec = t.decode("ascii", "replace")
        if t in (b"avc1", b"avc3"):
            # VisualSampleEntry: 78 bytes of fixed fields before child boxes
            for t2, b2, e2 in _iter_boxes(data, body + 78, bend, codec):
                if t2 == b"avcC":
                    avcc = (b2, e2)
                    break
        break
    if codec not in ("avc1", "avc3"):
        raise FormatError(f"unsupported codec {codec!r}: only AVC is handled")
    if avcc is None:
        raise FormatError("AVC sample entry has no decoder configuration")
    length_size, sps_list, pps_list = _parse_avcc(data, *avcc)

    sizes_body, sizes_end = _find_box(data, stbl, stbl_end, b"stsz", "stbl")
    if sizes_end - sizes_body < 12:
        raise TruncatedFileError("truncated stsz box")
    fixed_size = int.from_bytes(data[sizes_body + 4:sizes_body + 8], "big")
    sample_count = int.from_bytes(data[sizes_body + 8:sizes_body + 12], "big")
    if fixed_size:
        sizes = [fixed_size] * sample_count
    else:
        if sizes_body + 12 + 4 * sample_count > sizes_end:
            raise TruncatedFileError("stsz shorter than its sample count")
        sizes = list(struct.unpack_from(f">{sample_count}I", data,
                                        sizes_body + 12))

    try:
        stco_body, stco_end = _find_box(data, stbl, stbl_end, b"stco", "stbl")
        offsets, _ = _read_u32_table(data, stco_body, stco_end, 4, "stco")
    except FormatError:
        co64_body, co64_end = _find_box(data, stbl, stbl_end, b"co64", "stbl")
        pos = co64_body + 4
        count = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        if pos + 8 * count > co64_end:
            raise TruncatedFileError("co64 shorter than its entry count")
        offsets = list(struct.unpack_from(f">{count}Q", data, pos))

    stsc_body, stsc_end = _find_box(data, stbl, stbl_end, b"stsc", "stbl")
    pos = stsc_body + 4
    if pos + 4 > stsc_end:
        raise TruncatedFileError("truncated stsc box")
    stsc_count = int.from_bytes(data[pos:pos + 4], "big")
    pos += 4
    if pos + 12 * stsc_count > stsc_end:
        raise TruncatedFileError("stsc shorter than its entry count")
    stsc = [struct.unpack_from(">3I", data, pos + 12 * i)
            for i in range(stsc_count)]

    # walk chunks, slicing samples out of mdat by offset
    nals = [Nal(nal_type=7, nal_ref_idc=3, rbsp=unescape_rbsp(s[1:]))
            for s in sps_list]
    nals += [Nal(nal_type=8, nal_ref_idc=3, rbsp=unescape_rbsp(p[1:]))
             for p in pps_list]
    sample = 0
    n_chunks = len(offsets)
    for i, (first_chunk, per_chunk, _desc) in enumerate(stsc):
        last_chunk = stsc[i + 1][0] - 1 if i + 1 < len(stsc) else n_chunks
        for chunk in range(first_chunk, last_chunk + 1):
            if chunk - 1 >= n_chunks:
                raise FormatError("stsc references a chunk beyond stco")
            off = offsets[chunk - 1]
            for _ in range(per_chunk):
                if sample >= sample_count:
                    break
                size = sizes[sample]
                if off + size > len(data):
                    raise TruncatedFileError(
                        f"sample {sample} extends past end of file "
                        "(truncated mdat)"
                    )
                try:
                    nals.extend(
                        nals_from_length_prefixed(data[off:off + size],
                                                  length_size)
                    )
                except ParseError as exc:
                    raise FormatError(f"sample {sample}: {exc}") from exc
                off += size
                sample += 1
    if sample != sample_count:
        raise FormatError(
            f"chunk map covers {sample} of {sample_count} samples"
        )

    info = _stream_info_from_nals(nals, CONTAINER_MP4)
    return nals, info
