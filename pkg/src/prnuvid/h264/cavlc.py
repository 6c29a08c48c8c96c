"""CAVLC entropy decoding for 4x4 residual blocks.

Code tables are keyed the same way throughout: value = table[index], where a
zero length marks an unused (total_coeff, trailing_ones) combination. All
codes are read MSB-first.
"""

from ..errors import ParseError

_COEFF_TOKEN_LEN = (
    (
        1, 0, 0, 0, 6, 2, 0, 0, 8, 6, 3, 0, 9, 8, 7, 5,
        10, 9, 8, 6, 11, 10, 9, 7, 13, 11, 10, 8, 13, 13, 11, 9,
        13, 13, 13, 10, 14, 14, 13, 11, 14, 14, 14, 13, 15, 15, 14, 14,
        15, 15, 15, 14, 16, 15, 15, 15, 16, 16, 16, 15, 16, 16, 16, 16,
        16, 16, 16, 16,
    ),
    (
        2, 0, 0, 0, 6, 2, 0, 0, 6, 5, 3, 0, 7, 6, 6, 4,
        8, 6, 6, 4, 8, 7, 7, 5, 9, 8, 8, 6, 11, 9, 9, 6,
        11, 11, 11, 7, 12, 11, 11, 9, 12, 12, 12, 11, 12, 12, 12, 11,
        13, 13, 13, 12, 13, 13, 13, 13, 13, 14, 13, 13, 14, 14, 14, 13,
        14, 14, 14, 14,
    ),
    (
        4, 0, 0, 0, 6, 4, 0, 0, 6, 5, 4, 0, 6, 5, 5, 4,
        7, 5, 5, 4, 7, 5, 5, 4, 7, 6, 6, 4, 7, 6, 6, 4,
        8, 7, 7, 5, 8, 8, 7, 6, 9, 8, 8, 7, 9, 9, 8, 8,
        9, 9, 9, 8, 10, 9, 9, 9, 10, 10, 10, 10, 10, 10, 10, 10,
        10, 10, 10, 10,
    ),
    (
        6, 0, 0, 0, 6, 6, 0, 0, 6, 6, 6, 0, 6, 6, 6, 6,
        6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6,
        6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6,
        6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6,
        6, 6, 6, 6,
    ),
)

_COEFF_TOKEN_BITS = (
    (
        1, 0, 0, 0, 5, 1, 0, 0, 7, 4, 1, 0, 7, 6, 5, 3,
        7, 6, 5, 3, 7, 6, 5, 4, 15, 6, 5, 4, 11, 14, 5, 4,
        8, 10, 13, 4, 15, 14, 9, 4, 11, 10, 13, 12, 15, 14, 9, 12,
        11, 10, 13, 8, 15, 1, 9, 12, 11, 14, 13, 8, 7, 10, 9, 12,
        4, 6, 5, 8,
    ),
    (
        3, 0, 0, 0, 11, 2, 0, 0, 7, 7, 3, 0, 7, 10, 9, 5,
        7, 6, 5, 4, 4, 6, 5, 6, 7, 6, 5, 8, 15, 6, 5, 4,
        11, 14, 13, 4, 15, 10, 9, 4, 11, 14, 13, 12, 8, 10, 9, 8,
        15, 14, 13, 12, 11, 10, 9, 12, 7, 11, 6, 8, 9, 8, 10, 1,
        7, 6, 5, 4,
    ),
    (
        15, 0, 0, 0, 15, 14, 0, 0, 11, 15, 13, 0, 8, 12, 14, 12,
        15, 10, 11, 11, 11, 8, 9, 10, 9, 14, 13, 9, 8, 10, 9, 8,
        15, 14, 13, 13, 11, 14, 10, 12, 15, 10, 13, 12, 11, 14, 9, 12,
        8, 10, 13, 8, 13, 7, 9, 12, 9, 12, 11, 10, 5, 8, 7, 6,
        1, 4, 3, 2,
    ),
    (
        3, 0, 0, 0, 0, 1, 0, 0, 4, 5, 6, 0, 8, 9, 10, 11,
        12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27,
        28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43,
        44, 45, 46, 47, 48, 49, 50, 51, 52, 53, 54, 55, 56, 57, 58, 59,
        60, 61, 62, 63,
    ),
)

_CHROMA_DC_COEFF_TOKEN_LEN = (
    2, 0, 0, 0, 6, 1, 0, 0, 6, 6, 3, 0, 6, 7, 7, 6,
    6, 8, 8, 7,
)

_CHROMA_DC_COEFF_TOKEN_BITS = (
    1, 0, 0, 0, 7, 1, 0, 0, 4, 6, 1, 0, 3, 3, 2, 5,
    2, 3, 2, 0,
)

_TOTAL_ZEROS_LEN = (
    (1, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 9),
    (3, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 6, 6, 6, 6, 0),
    (4, 3, 3, 3, 4, 4, 3, 3, 4, 5, 5, 6, 5, 6, 0, 0),
    (5, 3, 4, 4, 3, 3, 3, 4, 3, 4, 5, 5, 5, 0, 0, 0),
    (4, 4, 4, 3, 3, 3, 3, 3, 4, 5, 4, 5, 0, 0, 0, 0),
    (6, 5, 3, 3, 3, 3, 3, 3, 4, 3, 6, 0, 0, 0, 0, 0),
    (6, 5, 3, 3, 3, 2, 3, 4, 3, 6, 0, 0, 0, 0, 0, 0),
    (6, 4, 5, 3, 2, 2, 3, 3, 6, 0, 0, 0, 0, 0, 0, 0),
    (6, 6, 4, 2, 2, 3, 2, 5, 0, 0, 0, 0, 0, 0, 0, 0),
    (5, 5, 3, 2, 2, 2, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (4, 4, 3, 3, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (4, 4, 2, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 3, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (2, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
)

_TOTAL_ZEROS_BITS = (
    (1, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 1),
    (7, 6, 5, 4, 3, 5, 4, 3, 2, 3, 2, 3, 2, 1, 0, 0),
    (5, 7, 6, 5, 4, 3, 4, 3, 2, 3, 2, 1, 1, 0, 0, 0),
    (3, 7, 5, 4, 6, 5, 4, 3, 3, 2, 2, 1, 0, 0, 0, 0),
    (5, 4, 3, 7, 6, 5, 4, 3, 2, 1, 1, 0, 0, 0, 0, 0),
    (1, 1, 7, 6, 5, 4, 3, 2, 1, 1, 0, 0, 0, 0, 0, 0),
    (1, 1, 5, 4, 3, 3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0),
    (1, 1, 1, 3, 3, 2, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0),
    (1, 0, 1, 3, 2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0),
    (1, 0, 1, 3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 1, 2, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
)

_CHROMA_DC_TOTAL_ZEROS_LEN = (
    (1, 2, 3, 3),
    (1, 2, 2, 0),
    (1, 1, 0, 0),
)

_CHROMA_DC_TOTAL_ZEROS_BITS = (
    (1, 1, 1, 0),
    (1, 1, 0, 0),
    (1, 0, 0, 0),
)

_RUN_BEFORE_LEN = (
    (1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (1, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (2, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (2, 2, 2, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (2, 2, 3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (2, 3, 3, 3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 3, 3, 3, 3, 3, 3, 4, 5, 6, 7, 8, 9, 10, 11, 0),
)

_RUN_BEFORE_BITS = (
    (1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 2, 3, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (3, 0, 1, 3, 2, 5, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    (7, 6, 5, 4, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0),
)

GOLOMB_TO_INTRA_CBP = (
    47, 31, 15, 0, 23, 27, 29, 30, 7, 11, 13, 14, 39, 43, 45, 46,
    16, 3, 5, 10, 12, 19, 21, 26, 28, 35, 37, 42, 44, 1, 2, 4,
    8, 17, 18, 20, 24, 6, 9, 22, 25, 32, 33, 34, 36, 40, 38, 41,
)

GOLOMB_TO_INTER_CBP = (
    0, 16, 1, 2, 4, 8, 32, 3, 5, 10, 12, 15, 47, 7, 11, 13,
    14, 6, 9, 31, 35, 37, 42, 44, 33, 34, 36, 40, 39, 43, 45, 46,
    17, 18, 20, 24, 19, 21, 26, 28, 23, 27, 29, 30, 22, 25, 38, 41,
)


def _build_prefix_map(lengths, bits, values):
    """Map (code_length, code_bits) -> value for a canonical VLC table."""
    out = {}
    for ln, code, val in zip(lengths, bits, values):
        if ln == 0:
            continue
        key = (ln, code)
        if key in out:
            raise AssertionError(f"duplicate code {key}")
        out[key] = val
    return out


def _coeff_token_values():
    vals = []
    for total in range(17):
        for ones in range(4):
            vals.append((total, ones))
    return vals


_COEFF_TOKEN_MAPS = tuple(
    _build_prefix_map(_COEFF_TOKEN_LEN[i], _COEFF_TOKEN_BITS[i],
                      _coeff_token_values())
    for i in range(4)
)
_CHROMA_DC_COEFF_TOKEN_MAP = _build_prefix_map(
    _CHROMA_DC_COEFF_TOKEN_LEN,
    _CHROMA_DC_COEFF_TOKEN_BITS,
    [(total, ones) for total in range(5) for ones in range(4)],
)
_TOTAL_ZEROS_MAPS = tuple(
    _build_prefix_map(_TOTAL_ZEROS_LEN[i], _TOTAL_ZEROS_BITS[i], range(16))
    for i in range(15)
)
_CHROMA_DC_TOTAL_ZEROS_MAPS = tuple(
    _build_prefix_map(_CHROMA_DC_TOTAL_ZEROS_LEN[i],
                      _CHROMA_DC_TOTAL_ZEROS_BITS[i], range(4))
    for i in range(3)
)
_RUN_BEFORE_MAPS = tuple(
    _build_prefix_map(_RUN_BEFORE_LEN[i], _RUN_BEFORE_BITS[i], range(16))
    for i in range(7)
)

_MAX_CODE_LEN = 16


def _read_vlc(r, table, what):
    data = r.data
    pos = r.pos
    nbits = r.nbits
    get = table.get
    code = 0
    for length in range(1, _MAX_CODE_LEN + 1):
        if pos >= nbits:
            r.pos = pos
            raise ParseError("read past end of RBSP", bit_offset=pos)
        code = (code << 1) | ((data[pos >> 3] >> (7 - (pos & 7))) & 1)
        pos += 1
        val = get((length, code))
        if val is not None:
            r.pos = pos
            return val
    r.pos = pos
    raise ParseError(f"invalid {what} code", bit_offset=pos)


def decode_coeff_token(r, nc):
    """Return (total_coeff, trailing_ones). nc < 0 selects the chroma DC table."""
    if nc < 0:
        return _read_vlc(r, _CHROMA_DC_COEFF_TOKEN_MAP, "chroma DC coeff_token")
    if nc < 2:
        table = _COEFF_TOKEN_MAPS[0]
    elif nc < 4:
        table = _COEFF_TOKEN_MAPS[1]
    elif nc < 8:
        table = _COEFF_TOKEN_MAPS[2]
    else:
        code = r.u(6)
        if code == 3:
            return 0, 0
        return (code >> 2) + 1, code & 3
    return _read_vlc(r, table, "coeff_token")


def _decode_level_prefix(r):
    data = r.data
    pos = r.pos
    nbits = r.nbits
    zeros = 0
    while True:
        if pos >= nbits:
            r.pos = pos
            raise ParseError("read past end of RBSP", bit_offset=pos)
        bit = (data[pos >> 3] >> (7 - (pos & 7))) & 1
        pos += 1
        if bit:
            r.pos = pos
            return zeros
        zeros += 1
        if zeros > 32:
            r.pos = pos
            raise ParseError("level_prefix too long", bit_offset=pos)


def decode_total_zeros(r, total_coeff, max_num_coeff):
    if max_num_coeff == 4:  # chroma DC 2x2 block
        return _read_vlc(r, _CHROMA_DC_TOTAL_ZEROS_MAPS[total_coeff - 1],
                         "chroma DC total_zeros")
    return _read_vlc(r, _TOTAL_ZEROS_MAPS[total_coeff - 1], "total_zeros")


def decode_run_before(r, zeros_left):
    return _read_vlc(r, _RUN_BEFORE_MAPS[min(zeros_left, 7) - 1], "run_before")


def residual_block(r, nc, max_num_coeff):
    """Decode one CAVLC residual block.

    Returns (coeffs, total_coeff) where coeffs has max_num_coeff entries in
    scan order (lowest frequency first).
    """
    total_coeff, trailing_ones = decode_coeff_token(r, nc)
    coeffs = [0] * max_num_coeff
    if total_coeff == 0:
        return coeffs, 0
    if total_coeff > max_num_coeff:
        raise ParseError(
            f"coeff_token yields {total_coeff} coefficients in a "
            f"{max_num_coeff}-coefficient block",
            bit_offset=r.pos,
        )

    suffix_length = 1 if total_coeff > 10 and trailing_ones < 3 else 0
    levels = []
    for i in range(total_coeff):
        if i < trailing_ones:
            levels.append(1 - 2 * r.u(1))
            continue
        prefix = _decode_level_prefix(r)
        level_code = min(15, prefix) << suffix_length
        if suffix_length > 0 or prefix >= 14:
            size = suffix_length
            if prefix == 14 and suffix_length == 0:
                size = 4
            elif prefix >= 15:
                size = prefix - 3
            level_code += r.u(size)
        if prefix >= 15 and suffix_length == 0:
            level_code += 15
        if prefix >= 16:
            level_code += (1 << (prefix - 3)) - 4096
        if i == trailing_ones and trailing_ones < 3:
            level_code += 2
        if level_code % 2 == 0:
            level = (level_code + 2) >> 1
        else:
            level = -((level_code + 1) >> 1)
        if suffix_length == 0:
            suffix_length = 1
        if abs(level) > (3 << (suffix_length - 1)) and suffix_length < 6:
            suffix_length += 1
        levels.append(level)

    if total_coeff < max_num_coeff:
        total_zeros = decode_total_zeros(r, total_coeff, max_num_coeff)
    else:
        total_zeros = 0
    if total_coeff + total_zeros > max_num_coeff:
        raise ParseError("total_zeros exceeds block capacity", bit_offset=r.pos)

    runs = []
    zeros_left = total_zeros
    for i in range(total_coeff - 1):
        if zeros_left > 0:
            run = decode_run_before(r, zeros_left)
            if run > zeros_left:
                raise ParseError("run_before exceeds zeros remaining",
                                 bit_offset=r.pos)
        else:
            run = 0
        runs.append(run)
        zeros_left -= run
    runs.append(zeros_left)

    # levels[0] is the highest-frequency coefficient
    pos = -1
    for i in range(total_coeff - 1, -1, -1):
        pos += runs[i] + 1
        coeffs[pos] = levels[i]
    return coeffs, total_coeff
