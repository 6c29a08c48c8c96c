"""Annex-B framing and RBSP emulation-prevention handling."""

from dataclasses import dataclass

from ..errors import ParseError

NAL_SLICE_NON_IDR = 1
NAL_SLICE_IDR = 5
NAL_SEI = 6
NAL_SPS = 7
NAL_PPS = 8
NAL_AUD = 9

VCL_TYPES = (NAL_SLICE_NON_IDR, NAL_SLICE_IDR)


@dataclass
class Nal:
    nal_type: int
    nal_ref_idc: int
    rbsp: bytes


def unescape_rbsp(data: bytes) -> bytes:
    """Strip emulation-prevention 0x03 bytes (00 00 03 -> 00 00)."""
    if b"\x00\x00\x03" not in data:
        return data
    out = bytearray()
    zeros = 0
    i = 0
    n = len(data)
    while i < n:
        b = data[i]
        if zeros >= 2 and b == 3:
            zeros = 0
            i += 1
            continue
        out.append(b)
        zeros = zeros + 1 if b == 0 else 0
        i += 1
    return bytes(out)


def escape_rbsp(data: bytes) -> bytes:
    """Insert emulation-prevention bytes (writer-side helper)."""
    out = bytearray()
    zeros = 0
    for b in data:
        if zeros >= 2 and b <= 3:
            out.append(3)
            zeros = 0
        out.append(b)
        zeros = zeros + 1 if b == 0 else 0
    return bytes(out)


def _parse_nal_bytes(raw: bytes) -> Nal:
    if not raw:
        raise ParseError("empty NAL unit")
    header = raw[0]
    if header & 0x80:
        raise ParseError("forbidden_zero_bit set in NAL header")
    return Nal(
        nal_type=header & 0x1F,
        nal_ref_idc=(header >> 5) & 3,
        rbsp=unescape_rbsp(raw[1:]),
    )


def split_annexb(data: bytes):
    """Split a start-code-delimited elementary stream into NAL units."""
    if not data:
        raise ParseError("empty stream")
    n = len(data)
    # locate first start code
    first = data.find(b"\x00\x00\x01")
    if first == -1:
        raise ParseError("no Annex-B start code found")
    if data[:first].strip(b"\x00"):
        raise ParseError("garbage before first start code")
    nals = []
    pos = first + 3
    while pos < n:
        nxt = data.find(b"\x00\x00\x01", pos)
        if nxt == -1:
            chunk = data[pos:]
            pos = n
        else:
            chunk = data[pos:nxt]
            pos = nxt + 3
        # trailing zero of a 4-byte start code belongs to the delimiter
        chunk = chunk.rstrip(b"\x00") or chunk
        if chunk:
            nals.append(_parse_nal_bytes(chunk))
    if not nals:
        raise ParseError("stream contains no NAL units")
    return nals


def nals_from_length_prefixed(data: bytes, length_size: int):
    """Split MP4-style length-prefixed sample data into NAL units."""
    nals = []
    pos = 0
    n = len(data)
    while pos < n:
        if pos + length_size > n:
            raise ParseError("truncated NAL length prefix in sample")
        ln = int.from_bytes(data[pos:pos + length_size], "big")
        pos += length_size
        if ln == 0 or pos + ln > n:
            raise ParseError(f"bad NAL length {ln} in sample")
        nals.append(_parse_nal_bytes(data[pos:pos + ln]))
        pos += ln
    return nals
