"""SPS and PPS parsing (the subset needed for residual analysis)."""

from dataclasses import dataclass, field

from ..errors import ParseError, UnsupportedFeatureError
from .bits import BitReader
from .types import (
    PROFILE_BASELINE,
    PROFILE_CONSTRAINED_BASELINE,
    PROFILE_HIGH,
    PROFILE_MAIN,
)

_PROFILE_NAMES = {
    66: PROFILE_BASELINE,
    77: PROFILE_MAIN,
    100: PROFILE_HIGH,
}


@dataclass
class Sps:
    sps_id: int
    profile_idc: int
    profile: str
    chroma_format_idc: int
    log2_max_frame_num: int
    pic_order_cnt_type: int
    log2_max_pic_order_cnt_lsb: int
    delta_pic_order_always_zero_flag: int
    max_num_ref_frames: int
    pic_width_in_mbs: int
    pic_height_in_mbs: int
    width: int
    height: int
    frame_mbs_only_flag: int
    direct_8x8_inference_flag: int
    crop_left: int = 0   # luma samples trimmed from the left edge
    crop_top: int = 0


@dataclass
class Pps:
    pps_id: int
    sps_id: int
    entropy_coding_mode_flag: int
    bottom_field_pic_order_in_frame_present_flag: int
    num_ref_idx_l0_default: int
    num_ref_idx_l1_default: int
    weighted_pred_flag: int
    weighted_bipred_idc: int
    pic_init_qp: int
    chroma_qp_index_offset: int
    deblocking_filter_control_present_flag: int
    constrained_intra_pred_flag: int
    redundant_pic_cnt_present_flag: int
    transform_8x8_mode_flag: int = 0


def _skip_scaling_list(r: BitReader, size):
    last = 8
    nxt = 8
    for _ in range(size):
        if nxt != 0:
            nxt = (last + r.se() + 256) % 256
        if nxt != 0:
            last = nxt


def parse_sps(rbsp: bytes) -> Sps:
    r = BitReader(rbsp)
    profile_idc = r.u(8)
    constraint_set = r.u(8)
    r.u(8)  # level_idc
    sps_id = r.ue()
    chroma_format_idc = 1
    if profile_idc in (100, 110, 122, 244, 44, 83, 86, 118, 128, 138, 139, 134, 135):
        chroma_format_idc = r.ue()
        if chroma_format_idc == 3:
            r.flag()  # separate_colour_plane_flag
        if chroma_format_idc != 1:
            raise UnsupportedFeatureError(
                f"chroma_format_idc {chroma_format_idc}; only 4:2:0 is supported"
            )
        bit_depth_luma = r.ue() + 8
        bit_depth_chroma = r.ue() + 8
        if bit_depth_luma != 8 or bit_depth_chroma != 8:
            raise UnsupportedFeatureError("only 8-bit streams are supported")
        r.flag()  # qpprime_y_zero_transform_bypass_flag
        if r.flag():  # seq_scaling_matrix_present_flag
            for i in range(8):
                if r.flag():
                    _skip_scaling_list(r, 16 if i < 6 else 64)
    profile = _PROFILE_NAMES.get(profile_idc)
    if profile is None:
        raise UnsupportedFeatureError(f"unsupported profile_idc {profile_idc}")
    if profile_idc == 66 and (constraint_set & 0x40):  # constraint_set1_flag
        profile = PROFILE_CONSTRAINED_BASELINE
    log2_max_frame_num = r.ue() + 4
    if log2_max_frame_num > 16:
        raise ParseError("log2_max_frame_num out of range", bit_offset=r.pos)
    pic_order_cnt_type = r.ue()
    log2_max_poc_lsb = 0
    delta_pic_order_always_zero_flag = 0
    if pic_order_cnt_type == 0:
        log2_max_poc_lsb = r.ue() + 4
        if log2_max_poc_lsb > 16:
            raise ParseError("log2_max_pic_order_cnt_lsb out of range",
                             bit_offset=r.pos)
    elif pic_order_cnt_type == 1:
        delta_pic_order_always_zero_flag = r.flag()
        r.se()  # offset_for_non_ref_pic
        r.se()  # offset_for_top_to_bottom_field
        for _ in range(r.ue()):
            r.se()
    elif pic_order_cnt_type != 2:
        raise ParseError(f"bad pic_order_cnt_type {pic_order_cnt_type}",
                         bit_offset=r.pos)
    max_num_ref_frames = r.ue()
    r.flag()  # gaps_in_frame_num_value_allowed_flag
    pic_width_in_mbs = r.ue() + 1
    pic_height_in_map_units = r.ue() + 1
    frame_mbs_only_flag = r.flag()
    if not frame_mbs_only_flag:
        raise UnsupportedFeatureError("interlaced (field/MBAFF) coding not supported")
    direct_8x8 = r.flag()
    width = pic_width_in_mbs * 16
    height = pic_height_in_map_units * 16
    crop_left = crop_top = 0
    if r.flag():  # frame_cropping_flag
        left, right, top, bottom = r.ue(), r.ue(), r.ue(), r.ue()
        # 4:2:0 frame cropping units: 2 horizontally, 2 vertically
        width -= 2 * (left + right)
        height -= 2 * (top + bottom)
        crop_left = 2 * left
        crop_top = 2 * top
        if crop_left % 4 or crop_top % 4:
            raise UnsupportedFeatureError(
                "left/top cropping that misaligns the 4x4 block grid "
                "is not supported"
            )
    if width <= 0 or height <= 0:
        raise ParseError("cropped dimensions are non-positive", bit_offset=r.pos)
    # VUI (if present) carries nothing we need; stop here.
    return Sps(
        sps_id=sps_id,
        profile_idc=profile_idc,
        profile=profile,
        chroma_format_idc=chroma_format_idc,
        log2_max_frame_num=log2_max_frame_num,
        pic_order_cnt_type=pic_order_cnt_type,
        log2_max_pic_order_cnt_lsb=log2_max_poc_lsb,
        delta_pic_order_always_zero_flag=delta_pic_order_always_zero_flag,
        max_num_ref_frames=max_num_ref_frames,
        pic_width_in_mbs=pic_width_in_mbs,
        pic_height_in_mbs=pic_height_in_map_units,
        width=width,
        height=height,
        frame_mbs_only_flag=frame_mbs_only_flag,
        direct_8x8_inference_flag=direct_8x8,
        crop_left=crop_left,
        crop_top=crop_top,
    )


def parse_pps(rbsp: bytes) -> Pps:
    r = BitReader(rbsp)
    pps_id = r.ue()
    sps_id = r.ue()
    entropy_coding_mode_flag = r.flag()
    bottom_field = r.flag()
    num_slice_groups = r.ue() + 1
    if num_slice_groups != 1:
        raise UnsupportedFeatureError("FMO/ASO (slice groups) not supported")
    num_ref_idx_l0 = r.ue() + 1
    num_ref_idx_l1 = r.ue() + 1
    weighted_pred_flag = r.flag()
    weighted_bipred_idc = r.u(2)
    pic_init_qp = r.se() + 26
    r.se()  # pic_init_qs
    chroma_qp_index_offset = r.se()
    deblocking = r.flag()
    constrained_intra = r.flag()
    redundant = r.flag()
    transform_8x8 = 0
    if r.more_rbsp_data():
        transform_8x8 = r.flag()
        if r.flag():  # pic_scaling_matrix_present_flag
            count = 6 + (2 if transform_8x8 else 0)
            for i in range(count):
                if r.flag():
                    _skip_scaling_list(r, 16 if i < 6 else 64)
        r.se()  # second_chroma_qp_index_offset
    return Pps(
        pps_id=pps_id,
        sps_id=sps_id,
        entropy_coding_mode_flag=entropy_coding_mode_flag,
        bottom_field_pic_order_in_frame_present_flag=bottom_field,
        num_ref_idx_l0_default=num_ref_idx_l0,
        num_ref_idx_l1_default=num_ref_idx_l1,
        weighted_pred_flag=weighted_pred_flag,
        weighted_bipred_idc=weighted_bipred_idc,
        pic_init_qp=pic_init_qp,
        chroma_qp_index_offset=chroma_qp_index_offset,
        deblocking_filter_control_present_flag=deblocking,
        constrained_intra_pred_flag=constrained_intra,
        redundant_pic_cnt_present_flag=redundant,
        transform_8x8_mode_flag=transform_8x8,
    )
