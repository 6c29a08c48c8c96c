"""Residual-syntax parser for CAVLC H.264 streams.

Parses slice headers and full macroblock syntax (prediction fields are read
to keep bit alignment, their values discarded) and records, per 4x4 luma
block, how many quantized AC coefficients survived. No pixel reconstruction.
"""

import numpy as np

from ..errors import ParseError, UnsupportedEntropyError, UnsupportedFeatureError
from .bits import BitReader
from .cavlc import GOLOMB_TO_INTER_CBP, GOLOMB_TO_INTRA_CBP, residual_block
from .nal import (
    NAL_PPS,
    NAL_SLICE_IDR,
    NAL_SPS,
    VCL_TYPES,
    split_annexb,
)
from .paramsets import parse_pps, parse_sps
from .types import (
    CONTAINER_ANNEXB,
    ENTROPY_CABAC,
    ENTROPY_CAVLC,
    FRAME_TYPE_B,
    FRAME_TYPE_I,
    FRAME_TYPE_P,
    MB_INTER,
    MB_INTRA,
    MB_PCM,
    MB_SKIP,
    BlockResidualMap,
    StreamInfo,
)

SLICE_P = 0
SLICE_B = 1
SLICE_I = 2

_SLICE_TYPE_NAMES = {0: "P", 1: "B", 2: "I", 3: "SP", 4: "SI"}

# 4x4 luma block index -> (row, col) offset inside the MB, in 4x4 units.
# Quadrants scan in raster order, blocks inside a quadrant likewise.
_BLK_POS = tuple(
    (((i >> 2) >> 1) * 2 + ((i & 3) >> 1), ((i >> 2) & 1) * 2 + (i & 1))
    for i in range(16)
)

# B macroblock partition usage per mb_type 0..21 ("D" = direct, no syntax).
_B_PARTS = (
    (),
    ("L0",), ("L1",), ("BI",),
    ("L0", "L0"), ("L0", "L0"), ("L1", "L1"), ("L1", "L1"),
    ("L0", "L1"), ("L0", "L1"), ("L1", "L0"), ("L1", "L0"),
    ("L0", "BI"), ("L0", "BI"), ("L1", "BI"), ("L1", "BI"),
    ("BI", "L0"), ("BI", "L0"), ("BI", "L1"), ("BI", "L1"),
    ("BI", "BI"), ("BI", "BI"),
)

# B sub-macroblock types: (part_count, lists). None lists = direct.
_B_SUB = (
    (4, None),
    (1, "L0"), (1, "L1"), (1, "BI"),
    (2, "L0"), (2, "L0"), (2, "L1"), (2, "L1"), (2, "BI"), (2, "BI"),
    (4, "L0"), (4, "L1"), (4, "BI"),
)

_P_SUB_PARTS = (1, 2, 2, 4)


def _intra_mb_info(t):
    """Split an intra mb_type into (kind, cbp_luma, cbp_chroma).

    kind: 'NxN', '16x16' or 'PCM'. For 16x16 the coded block pattern is
    implied by the type rather than carried as a separate element.
    """
    if t == 0:
        return "NxN", None, None
    if t == 25:
        return "PCM", None, None
    if t > 25:
        raise ParseError(f"intra mb_type {t} out of range")
    idx = t - 1
    cbp_luma = 15 if idx >= 12 else 0
    cbp_chroma = (idx % 12) // 4
    return "16x16", cbp_luma, cbp_chroma


class _SliceHeader:
    __slots__ = (
        "first_mb", "slice_type", "pps", "sps", "frame_num", "poc_lsb",
        "idr", "num_ref_l0", "num_ref_l1", "qp", "slice_id", "redundant",
    )


class _PictureState:
    """Mutable per-picture grids shared by the slices of one frame."""

    def __init__(self, sps):
        mbw, mbh = sps.pic_width_in_mbs, sps.pic_height_in_mbs
        self.mbw = mbw
        self.mbh = mbh
        # total_coeff per 4x4 block, -1 = not decoded yet
        self.tc_luma = np.full((4 * mbh, 4 * mbw), -1, dtype=np.int16)
        self.tc_cb = np.full((2 * mbh, 2 * mbw), -1, dtype=np.int16)
        self.tc_cr = np.full((2 * mbh, 2 * mbw), -1, dtype=np.int16)
        self.mb_slice = np.full((mbh, mbw), -1, dtype=np.int32)
        self.nonzero = np.zeros((4 * mbh, 4 * mbw), dtype=np.int16)
        self.tsize = np.full((4 * mbh, 4 * mbw), 4, dtype=np.int16)
        self.kind = np.full((4 * mbh, 4 * mbw), MB_INTRA, dtype=np.uint8)
        self.decoded_mbs = 0
        self.slice_types = []
        self.poc = 0
        self.idr = False
        self.frame_num = 0


class _SliceDecoder:
    """Parses slice_data for one slice into the picture grids."""

    def __init__(self, r, header, pic, slice_id):
        self.r = r
        self.h = header
        self.pic = pic
        self.slice_id = slice_id
        self.sps = header.sps
        self.pps = header.pps
        self.qp = header.qp

    # -- neighbour contexts ------------------------------------------------

    def _nc(self, grid, slice_grid, y, x, scale):
        pic = self.pic
        na = nb = -1
        if x > 0 and grid[y, x - 1] >= 0:
            if slice_grid[y // scale, (x - 1) // scale] == self.slice_id:
                na = int(grid[y, x - 1])
        if y > 0 and grid[y - 1, x] >= 0:
            if slice_grid[(y - 1) // scale, x // scale] == self.slice_id:
                nb = int(grid[y - 1, x])
        if na >= 0 and nb >= 0:
            return (na + nb + 1) >> 1
        if na >= 0:
            return na
        if nb >= 0:
            return nb
        return 0

    def nc_luma(self, y, x):
        return self._nc(self.pic.tc_luma, self.pic.mb_slice, y, x, 4)

    def nc_chroma(self, comp, y, x):
        grid = self.pic.tc_cb if comp == 0 else self.pic.tc_cr
        return self._nc(grid, self.pic.mb_slice, y, x, 2)

    # -- macroblock pieces -------------------------------------------------

    def _err(self, msg, mb_addr):
        return ParseError(msg, bit_offset=self.r.pos, mb_addr=mb_addr)

    def _read_cbp(self, mb_addr, intra):
        code = self.r.ue()
        if code > 47:
            raise self._err(f"coded_block_pattern code {code} out of range",
                            mb_addr)
        table = GOLOMB_TO_INTRA_CBP if intra else GOLOMB_TO_INTER_CBP
        return table[code]

    def _read_qp_delta(self, mb_addr):
        delta = self.r.se()
        if delta < -26 or delta > 25:
            raise self._err(f"mb_qp_delta {delta} out of range", mb_addr)
        self.qp = (self.qp + delta + 52) % 52

    def _ref_idx(self, num_ref):
        if num_ref > 1:
            self.r.te(num_ref - 1)

    def _mvd(self):
        self.r.se()
        self.r.se()

    def _mark_mb(self, mb_addr, kind, tc_val, count, tsize):
        pic = self.pic
        my, mx = divmod(mb_addr, pic.mbw)
        pic.mb_slice[my, mx] = self.slice_id
        y0, x0 = 4 * my, 4 * mx
        pic.tc_luma[y0:y0 + 4, x0:x0 + 4] = tc_val
        pic.tc_cb[2 * my:2 * my + 2, 2 * mx:2 * mx + 2] = tc_val
        pic.tc_cr[2 * my:2 * my + 2, 2 * mx:2 * mx + 2] = tc_val
        pic.nonzero[y0:y0 + 4, x0:x0 + 4] = count
        pic.tsize[y0:y0 + 4, x0:x0 + 4] = tsize
        pic.kind[y0:y0 + 4, x0:x0 + 4] = kind
        pic.decoded_mbs += 1

    def _parse_pcm(self, mb_addr):
        r = self.r
        r.byte_align()
        if r.pos + 384 * 8 > r.nbits:
            raise self._err("truncated I_PCM payload", mb_addr)
        r.pos += 384 * 8  # 256 luma + 128 chroma samples, 8 bits each
        self._mark_mb(mb_addr, MB_PCM, 16, 16, 4)

    def _parse_chroma_pred_mode(self):
        mode = self.r.ue()  # intra_chroma_pred_mode
        if mode > 3:
            raise ParseError(f"intra_chroma_pred_mode {mode} out of range",
                             bit_offset=self.r.pos)

    def _parse_intra_pred(self, transform8):
        r = self.r
        n = 4 if transform8 else 16
        for _ in range(n):
            if not r.flag():  # prev_intra_pred_mode_flag
                r.u(3)  # rem_intra_pred_mode
        self._parse_chroma_pred_mode()

    def _parse_inter_pred(self, mb_addr, mb_type, slice_b):
        """Read motion syntax; returns True if all partitions are >= 8x8."""
        r = self.r
        l0, l1 = self.h.num_ref_l0, self.h.num_ref_l1
        if not slice_b:
            if mb_type == 0:  # 16x16
                self._ref_idx(l0)
                self._mvd()
                return True
            if mb_type in (1, 2):  # 16x8 / 8x16
                self._ref_idx(l0)
                self._ref_idx(l0)
                self._mvd()
                self._mvd()
                return True
            # P_8x8 (3) / P_8x8ref0 (4)
            subs = []
            for _ in range(4):
                st = r.ue()
                if st > 3:
                    raise self._err(f"P sub_mb_type {st} out of range", mb_addr)
                subs.append(st)
            if mb_type != 4:
                for _ in range(4):
                    self._ref_idx(l0)
            for st in subs:
                for _ in range(_P_SUB_PARTS[st]):
                    self._mvd()
            return all(st == 0 for st in subs)
        # B slice
        if mb_type == 0:  # B_Direct_16x16
            return bool(self.sps.direct_8x8_inference_flag)
        if mb_type < 22:
            parts = _B_PARTS[mb_type]
            for p in parts:
                if p in ("L0", "BI"):
                    self._ref_idx(l0)
            for p in parts:
                if p in ("L1", "BI"):
                    self._ref_idx(l1)
            for p in parts:
                if p in ("L0", "BI"):
                    self._mvd()
            for p in parts:
                if p in ("L1", "BI"):
                    self._mvd()
            return True
        # B_8x8
        subs = []
        for _ in range(4):
            st = r.ue()
            if st > 12:
                raise self._err(f"B sub_mb_type {st} out of range", mb_addr)
            subs.append(st)
        for st in subs:
            if _B_SUB[st][1] in ("L0", "BI"):
                self._ref_idx(l0)
        for st in subs:
            if _B_SUB[st][1] in ("L1", "BI"):
                self._ref_idx(l1)
        for st in subs:
            nparts, lists = _B_SUB[st]
            if lists in ("L0", "BI"):
                for _ in range(nparts):
                    self._mvd()
        for st in subs:
            nparts, lists = _B_SUB[st]
            if lists in ("L1", "BI"):
                for _ in range(nparts):
                    self._mvd()
        ok8 = True
        for st in subs:
            nparts, lists = _B_SUB[st]
            if lists is None:
                ok8 = ok8 and bool(self.sps.direct_8x8_inference_flag)
            else:
                ok8 = ok8 and nparts == 1
        return ok8

    def _parse_residual(self, mb_addr, intra16, cbp_luma, cbp_chroma,
                        transform8):
        r = self.r
        pic = self.pic
        my, mx = divmod(mb_addr, pic.mbw)
        by0, bx0 = 4 * my, 4 * mx
        if intra16:
            nc = self.nc_luma(by0, bx0)
            residual_block(r, nc, 16)  # DC levels, not counted as AC
        for i8 in range(4):
            cells = [_BLK_POS[4 * i8 + b] for b in range(4)]
            if not (cbp_luma >> i8) & 1:
                for dy, dx in cells:
                    pic.tc_luma[by0 + dy, bx0 + dx] = 0
                continue
            if transform8:
                total_ac = 0
                for b, (dy, dx) in enumerate(cells):
                    y, x = by0 + dy, bx0 + dx
                    coeffs, tc = residual_block(r, self.nc_luma(y, x), 16)
                    pic.tc_luma[y, x] = tc
                    # interleaved scan: sub-block b, index i sits at 8x8
                    # scan position 4*i + b; only position 0 is DC
                    ac = sum(1 for c in coeffs if c)
                    if b == 0 and coeffs[0]:
                        ac -= 1
                    total_ac += ac
                for dy, dx in cells:
                    pic.nonzero[by0 + dy, bx0 + dx] = total_ac
            else:
                for dy, dx in cells:
                    y, x = by0 + dy, bx0 + dx
                    nc = self.nc_luma(y, x)
                    if intra16:
                        coeffs, tc = residual_block(r, nc, 15)
                        ac = sum(1 for c in coeffs if c)
                    else:
                        coeffs, tc = residual_block(r, nc, 16)
                        ac = sum(1 for c in coeffs[1:] if c)
                    pic.tc_luma[y, x] = tc
                    pic.nonzero[y, x] = ac
        # chroma 4:2:0: DC then AC; chroma never contributes to masks
        cy0, cx0 = 2 * my, 2 * mx
        if cbp_chroma:
            for _ in range(2):
                residual_block(r, -1, 4)
        for comp in range(2):
            grid = pic.tc_cb if comp == 0 else pic.tc_cr
            for b in range(4):
                y, x = cy0 + (b >> 1), cx0 + (b & 1)
                if cbp_chroma & 2:
                    _, tc = residual_block(r, self.nc_chroma(comp, y, x), 15)
                    grid[y, x] = tc
                else:
                    grid[y, x] = 0

    def parse_mb(self, mb_addr, slice_type):
        r = self.r
        pic = self.pic
        my, mx = divmod(mb_addr, pic.mbw)
        pic.mb_slice[my, mx] = self.slice_id  # current MB counts as in-slice
        mb_type = r.ue()
        intra_type = None
        slice_b = slice_type == SLICE_B
        if slice_type == SLICE_I:
            intra_type = mb_type
        elif slice_b:
            if mb_type > 48:
                raise self._err(f"B mb_type {mb_type} out of range", mb_addr)
            if mb_type >= 23:
                intra_type = mb_type - 23
        else:
            if mb_type > 30:
                raise self._err(f"P mb_type {mb_type} out of range", mb_addr)
            if mb_type >= 5:
                intra_type = mb_type - 5

        if intra_type is not None:
            kind_hint, cbp_luma, cbp_chroma = _intra_mb_info(intra_type)
            if kind_hint == "PCM":
                self._parse_pcm(mb_addr)
                return
            transform8 = False
            if kind_hint == "NxN":
                if self.pps.transform_8x8_mode_flag:
                    transform8 = bool(r.flag())
                self._parse_intra_pred(transform8)
                cbp = self._read_cbp(mb_addr, intra=True)
                cbp_luma, cbp_chroma = cbp & 15, cbp >> 4
                intra16 = False
            else:
                self._parse_chroma_pred_mode()
                intra16 = True
            if cbp_chroma > 2:
                raise self._err("chroma CBP out of range", mb_addr)
            if cbp_luma or cbp_chroma or intra16:
                self._read_qp_delta(mb_addr)
                self._parse_residual(mb_addr, intra16, cbp_luma, cbp_chroma,
                                     transform8)
            else:
                self._parse_residual(mb_addr, False, 0, 0, False)
            self._finish_mb(mb_addr, MB_INTRA, 8 if transform8 else 4)
            return

        big_parts = self._parse_inter_pred(mb_addr, mb_type, slice_b)
        cbp = self._read_cbp(mb_addr, intra=False)
        cbp_luma, cbp_chroma = cbp & 15, cbp >> 4
        if cbp_chroma > 2:
            raise self._err("chroma CBP out of range", mb_addr)
        transform8 = False
        if self.pps.transform_8x8_mode_flag and cbp_luma and big_parts:
            transform8 = bool(r.flag())
        if cbp_luma or cbp_chroma:
            self._read_qp_delta(mb_addr)
        self._parse_residual(mb_addr, False, cbp_luma, cbp_chroma, transform8)
        self._finish_mb(mb_addr, MB_INTER, 8 if transform8 else 4)

    def _finish_mb(self, mb_addr, kind, tsize):
        pic = self.pic
        my, mx = divmod(mb_addr, pic.mbw)
        y0, x0 = 4 * my, 4 * mx
        pic.tsize[y0:y0 + 4, x0:x0 + 4] = tsize
        pic.kind[y0:y0 + 4, x0:x0 + 4] = kind
        pic.decoded_mbs += 1

    def mark_skip(self, mb_addr):
        self._mark_mb(mb_addr, MB_SKIP, 0, 0, 4)


def _parse_slice_header(nal, sps_map, pps_map, slice_id):
    r = BitReader(nal.rbsp)
    h = _SliceHeader()
    h.slice_id = slice_id
    h.idr = nal.nal_type == NAL_SLICE_IDR
    h.first_mb = r.ue()
    st = r.ue()
    if st > 9:
        raise ParseError(f"slice_type {st} out of range", bit_offset=r.pos)
    st %= 5
    if st in (3, 4):
        raise UnsupportedFeatureError(
            f"{_SLICE_TYPE_NAMES[st]} slices are not supported"
        )
    h.slice_type = st
    pps_id = r.ue()
    pps = pps_map.get(pps_id)
    if pps is None:
        raise ParseError(f"slice references unknown PPS {pps_id}",
                         bit_offset=r.pos)
    sps = sps_map.get(pps.sps_id)
    if sps is None:
        raise ParseError(f"PPS {pps_id} references unknown SPS {pps.sps_id}",
                         bit_offset=r.pos)
    if pps.entropy_coding_mode_flag:
        raise UnsupportedEntropyError(
            "stream uses CABAC entropy coding; decode it with an instrumented "
            "reference decoder and feed the residual trace to ingest_trace"
        )
    h.pps = pps
    h.sps = sps
    h.frame_num = r.u(sps.log2_max_frame_num)
    if h.idr:
        r.ue()  # idr_pic_id
    h.poc_lsb = 0
    if sps.pic_order_cnt_type == 0:
        h.poc_lsb = r.u(sps.log2_max_pic_order_cnt_lsb)
        if pps.bottom_field_pic_order_in_frame_present_flag:
            r.se()  # delta_pic_order_cnt_bottom
    elif sps.pic_order_cnt_type == 1:
        if not sps.delta_pic_order_always_zero_flag:
            r.se()
            if pps.bottom_field_pic_order_in_frame_present_flag:
                r.se()
    h.redundant = 0
    if pps.redundant_pic_cnt_present_flag:
        h.redundant = r.ue()
    if st == SLICE_B:
        r.flag()  # direct_spatial_mv_pred_flag
    h.num_ref_l0 = pps.num_ref_idx_l0_default
    h.num_ref_l1 = pps.num_ref_idx_l1_default
    if st in (SLICE_P, SLICE_B):
        if r.flag():  # num_ref_idx_active_override_flag
            h.num_ref_l0 = r.ue() + 1
            if st == SLICE_B:
                h.num_ref_l1 = r.ue() + 1
        if h.num_ref_l0 > 32 or h.num_ref_l1 > 32:
            raise ParseError("num_ref_idx_active out of range",
                             bit_offset=r.pos)
        # ref_pic_list_modification
        lists = 2 if st == SLICE_B else 1
        for _ in range(lists):
            if r.flag():
                for _ in range(64):
                    idc = r.ue()
                    if idc == 3:
                        break
                    if idc > 3:
                        raise ParseError(
                            f"modification_of_pic_nums_idc {idc} invalid",
                            bit_offset=r.pos)
                    r.ue()
                else:
                    raise ParseError("unterminated ref list modification",
                                     bit_offset=r.pos)
    if (pps.weighted_pred_flag and st == SLICE_P) or (
            pps.weighted_bipred_idc == 1 and st == SLICE_B):
        r.ue()  # luma_log2_weight_denom
        r.ue()  # chroma_log2_weight_denom
        counts = [h.num_ref_l0] + ([h.num_ref_l1] if st == SLICE_B else [])
        for n in counts:
            for _ in range(n):
                if r.flag():
                    r.se()
                    r.se()
                if r.flag():
                    for _ in range(4):
                        r.se()
    if nal.nal_ref_idc:
        if h.idr:
            r.flag()  # no_output_of_prior_pics_flag
            r.flag()  # long_term_reference_flag
        elif r.flag():  # adaptive_ref_pic_marking_mode_flag
            for _ in range(64):
                op = r.ue()
                if op == 0:
                    break
                if op > 6:
                    raise ParseError(f"memory management op {op} invalid",
                                     bit_offset=r.pos)
                if op in (1, 2, 4, 6):
                    r.ue()
                elif op == 3:
                    r.ue()
                    r.ue()
            else:
                raise ParseError("unterminated ref pic marking",
                                 bit_offset=r.pos)
    qp = pps.pic_init_qp + r.se()
    if qp < 0 or qp > 51:
        raise ParseError(f"slice QP {qp} out of range", bit_offset=r.pos)
    h.qp = qp
    if pps.deblocking_filter_control_present_flag:
        idc = r.ue()
        if idc > 2:
            raise ParseError("disable_deblocking_filter_idc out of range",
                             bit_offset=r.pos)
        if idc != 1:
            r.se()
            r.se()
    return h, r


def _parse_slice_data(r, h, pic, slice_id):
    dec = _SliceDecoder(r, h, pic, slice_id)
    pic_size = pic.mbw * pic.mbh
    if h.first_mb != pic.decoded_mbs:
        raise ParseError(
            f"slice starts at MB {h.first_mb}, expected {pic.decoded_mbs} "
            "(gaps and ASO are not supported)",
            bit_offset=r.pos, mb_addr=h.first_mb)
    mb = h.first_mb
    if h.slice_type == SLICE_I:
        while True:
            if mb >= pic_size:
                raise ParseError("macroblocks beyond picture end",
                                 bit_offset=r.pos, mb_addr=mb)
            dec.parse_mb(mb, h.slice_type)
            mb += 1
            if not r.more_rbsp_data():
                break
    else:
        while True:
            skip_run = r.ue()
            if mb + skip_run > pic_size:
                raise ParseError(f"mb_skip_run {skip_run} overruns picture",
                                 bit_offset=r.pos, mb_addr=mb)
            for _ in range(skip_run):
                dec.mark_skip(mb)
                mb += 1
            if not r.more_rbsp_data():
                break
            if mb >= pic_size:
                raise ParseError("macroblocks beyond picture end",
                                 bit_offset=r.pos, mb_addr=mb)
            dec.parse_mb(mb, h.slice_type)
            mb += 1
            if not r.more_rbsp_data():
                break


def _frame_type(slice_types):
    if SLICE_B in slice_types:
        return FRAME_TYPE_B
    if SLICE_P in slice_types:
        return FRAME_TYPE_P
    return FRAME_TYPE_I


def _finalize_pic(pic, sps, maps_raw):
    if pic.decoded_mbs != pic.mbw * pic.mbh:
        raise ParseError(
            f"picture incomplete: {pic.decoded_mbs} of "
            f"{pic.mbw * pic.mbh} macroblocks decoded"
        )
    maps_raw.append((pic, _frame_type(pic.slice_types)))


class _PocTracker:
    """Presentation-order keys for pictures (types 0 and 2)."""

    def __init__(self):
        self.prev_msb = 0
        self.prev_lsb = 0
        self.order = 0

    def key(self, sps, pic):
        self.order += 1
        if sps.pic_order_cnt_type != 0:
            return (0, self.order)
        max_lsb = 1 << sps.log2_max_pic_order_cnt_lsb
        if pic.idr:
            self.prev_msb = 0
            self.prev_lsb = 0
        lsb = pic.poc
        msb = self.prev_msb
        if lsb < self.prev_lsb and self.prev_lsb - lsb >= max_lsb // 2:
            msb += max_lsb
        elif lsb > self.prev_lsb and lsb - self.prev_lsb > max_lsb // 2:
            msb -= max_lsb
        self.prev_msb = msb
        self.prev_lsb = lsb
        return (msb + lsb, self.order)


def parse_stream(nals, info=None):
    """Parse a NAL sequence into per-frame block residual maps.

    If info is given its profile/entropy/dimension fields are filled in and
    checked; frame_count is set on return.
    """
    sps_map = {}
    pps_map = {}
    maps_raw = []
    pic = None
    cur_sps = None
    slice_id = 0
    for nal in nals:
        if nal.nal_type == NAL_SPS:
            sps = parse_sps(nal.rbsp)
            sps_map[sps.sps_id] = sps
        elif nal.nal_type == NAL_PPS:
            pps = parse_pps(nal.rbsp)
            pps_map[pps.pps_id] = pps
        elif nal.nal_type in VCL_TYPES:
            h, r = _parse_slice_header(nal, sps_map, pps_map, slice_id)
            slice_id += 1
            if h.redundant:
                continue  # redundant slices duplicate the primary picture
            if h.first_mb == 0:
                if pic is not None:
                    _finalize_pic(pic, cur_sps, maps_raw)
                pic = _PictureState(h.sps)
                pic.poc = h.poc_lsb
                pic.idr = h.idr
                pic.frame_num = h.frame_num
                cur_sps = h.sps
            elif pic is None:
                raise ParseError("slice continues a picture that never started",
                                 mb_addr=h.first_mb)
            pic.slice_types.append(h.slice_type)
            _parse_slice_data(r, h, pic, h.slice_id)
        # SEI/AUD/filler are legal and carry nothing we need
    if pic is not None:
        _finalize_pic(pic, cur_sps, maps_raw)
    if not maps_raw:
        raise ParseError("stream contains no coded pictures")

    sps = cur_sps
    if info is not None:
        if (info.width, info.height) != (sps.width, sps.height):
            raise ParseError(
                f"container says {info.width}x{info.height}, "
                f"SPS says {sps.width}x{sps.height}"
            )
        info.profile = sps.profile
        info.entropy_mode = ENTROPY_CAVLC

    # presentation order (pictures with B slices decode out of order)
    tracker = _PocTracker()
    keyed = [(tracker.key(sps, p), p, ft) for p, ft in maps_raw]
    keyed.sort(key=lambda t: t[0])

    gh = (sps.height + 3) // 4
    gw = (sps.width + 3) // 4
    r0 = sps.crop_top // 4
    c0 = sps.crop_left // 4
    maps = []
    for idx, (_, p, ftype) in enumerate(keyed):
        maps.append(
            BlockResidualMap(
                frame_index=idx,
                frame_type=ftype,
                width=sps.width,
                height=sps.height,
                nonzero_ac=np.ascontiguousarray(
                    p.nonzero[r0:r0 + gh, c0:c0 + gw], dtype=np.int32),
                transform_size=np.ascontiguousarray(
                    p.tsize[r0:r0 + gh, c0:c0 + gw]),
                mb_kind=np.ascontiguousarray(p.kind[r0:r0 + gh, c0:c0 + gw]),
            )
        )
    if info is not None:
        info.frame_count = len(maps)
    return maps


def _stream_info_from_nals(nals, container):
    for nal in nals:
        if nal.nal_type == NAL_SPS:
            sps = parse_sps(nal.rbsp)
            entropy = ENTROPY_CAVLC
            for n2 in nals:
                if n2.nal_type == NAL_PPS:
                    if parse_pps(n2.rbsp).entropy_coding_mode_flag:
                        entropy = ENTROPY_CABAC
                    break
            return StreamInfo(
                profile=sps.profile,
                entropy_mode=entropy,
                width=sps.width,
                height=sps.height,
                container=container,
            )
    raise ParseError("stream has no SPS")


def parse_annexb(source):
    """Parse an Annex-B elementary stream (bytes or file path)."""
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    nals = split_annexb(data)
    info = _stream_info_from_nals(nals, CONTAINER_ANNEXB)
    maps = parse_stream(nals, info)
    return info, maps


def analyze_file(path):
    """Detect the container of an H.264 file and parse it.

    Returns (StreamInfo, maps). MP4/MOV/3GP files are demuxed first;
    everything else must be a start-code delimited elementary stream.
    """
    from .mp4 import demux_mp4, looks_like_mp4

    with open(path, "rb") as fh:
        data = fh.read()
    if looks_like_mp4(data):
        nals, info = demux_mp4(data)
        maps = parse_stream(nals, info)
        info.frame_count = len(maps)
        return info, maps
    return parse_annexb(data)
