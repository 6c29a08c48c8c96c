"""Build the committed H.264 fixture corpus under tests/fixtures/.

Every stream is written by tests/h264_writer.py, checked pixel-exact against
an independent reference decode (OpenCV/FFmpeg), and stored together with the
writer's ground-truth residual trace. Run from the repository root:

    python3 tools/make_fixtures.py
"""

import os
import struct
import sys

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "tests"))

from h264_writer import MacroblockSpec, StreamWriter  # noqa: E402
from refdecode import decode_luma  # noqa: E402

FIXTURE_DIR = os.path.join(ROOT, "tests", "fixtures")


def rand_coeffs(rng, density, n=16, amp=6):
    c = [0] * n
    for i in range(n):
        if rng.random() < density:
            v = int(rng.integers(1, amp))
            c[i] = v if rng.random() < 0.5 else -v
    return c


def write_trace(path, width, height, truth):
    lines = [f"PRNUTRACE 1 {width} {height}"]
    for fidx, (ftype, grid) in enumerate(truth):
        rows, cols = np.nonzero(grid)
        if rows.size == 0:
            lines.append(f"{fidx} {ftype} 0 0 0")
            continue
        for r, c in zip(rows.tolist(), cols.tolist()):
            lines.append(f"{fidx} {ftype} {r} {c} {int(grid[r, c])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def validate(name, sw):
    frames = decode_luma(sw.annexb())
    if len(frames) != len(sw.recon_frames):
        raise SystemExit(f"{name}: decoder returned {len(frames)} frames, "
                         f"writer produced {len(sw.recon_frames)}")
    for i, fr in enumerate(frames):
        ref = sw.recon_frames[i].astype(np.uint8)
        if not np.array_equal(fr, ref):
            diff = int(np.abs(fr.astype(int) - ref.astype(int)).max())
            raise SystemExit(f"{name}: frame {i} not pixel-exact "
                             f"(max diff {diff})")
    print(f"{name}: {len(frames)} frames pixel-exact vs reference decoder")


def save(name, sw):
    validate(name, sw)
    with open(os.path.join(FIXTURE_DIR, name + ".264"), "wb") as fh:
        fh.write(sw.annexb())
    write_trace(os.path.join(FIXTURE_DIR, name + ".trace"),
                sw.width, sw.height, sw.truth_grids())


def chroma_spec(rng):
    return (
        [int(rng.integers(-2, 3)) for _ in range(4)],
        [int(rng.integers(-2, 3)) for _ in range(4)],
        [rand_coeffs(rng, 0.2, 15, 3) for _ in range(4)],
        [rand_coeffs(rng, 0.2, 15, 3) for _ in range(4)],
    )


def build_i_only():
    rng = np.random.default_rng(2024)
    sw = StreamWriter(64, 64, qp=28)
    # frame 0: raw PCM content
    sw.add_frame(
        [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                 dtype=np.uint8))
         for _ in range(16)], "I")
    # frame 1: intra 4x4 / 16x16 mixture with chroma residue and QP deltas
    specs = []
    for addr in range(16):
        k = addr % 4
        if k == 0:
            specs.append(MacroblockSpec(
                "i4", luma=[rand_coeffs(rng, 0.3) for _ in range(16)],
                chroma=chroma_spec(rng) if addr == 4 else None))
        elif k == 1:
            specs.append(MacroblockSpec(
                "i16", luma=[rand_coeffs(rng, 0.2, 15, 4) for _ in range(16)],
                qp_delta=1 if addr == 5 else 0))
        elif k == 2:
            specs.append(MacroblockSpec("i16", luma=[[0] * 15] * 16))
        else:
            specs.append(MacroblockSpec(
                "i4", luma=[[0] * 16] * 16,
                qp_delta=0))
    sw.add_frame(specs, "I")
    # frame 2: sparse intra residue, some empty MBs
    specs = []
    for addr in range(16):
        if addr % 3 == 0:
            specs.append(MacroblockSpec(
                "i4", luma=[rand_coeffs(rng, 0.1, 16, 3) for _ in range(16)]))
        else:
            specs.append(MacroblockSpec("i16", luma=[[0] * 15] * 16))
    sw.add_frame(specs, "I")
    save("i_only_64x64", sw)


def build_ippp():
    rng = np.random.default_rng(4095)
    sw = StreamWriter(64, 64, qp=26)
    sw.add_frame(
        [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                 dtype=np.uint8))
         for _ in range(16)], "I")
    # QP sweep across P frames via qp_delta on the first coded MB
    for f, delta in enumerate((0, 2, 2, -3)):
        specs = []
        first_coded = True
        for addr in range(16):
            k = (addr + f) % 4
            if k == 0:
                specs.append(MacroblockSpec("skip"))
                continue
            qd = delta if first_coded else 0
            if k == 1:
                specs.append(MacroblockSpec(
                    "p", luma=[rand_coeffs(rng, 0.35) for _ in range(16)],
                    chroma=chroma_spec(rng) if addr == 9 else None,
                    qp_delta=qd))
                first_coded = False
            elif k == 2:
                specs.append(MacroblockSpec("p", luma=[[0] * 16] * 16))
            else:
                specs.append(MacroblockSpec(
                    "pi4",
                    luma=[rand_coeffs(rng, 0.25, 16, 4) for _ in range(16)],
                    qp_delta=qd))
                first_coded = False
        sw.add_frame(specs, "P")
    save("ippp_64x64", sw)


def build_t8():
    rng = np.random.default_rng(777)
    sw = StreamWriter(64, 64, qp=30, transform8=True)
    sw.add_frame(
        [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                 dtype=np.uint8))
         for _ in range(16)], "I")
    for f in range(2):
        specs = []
        for addr in range(16):
            k = (addr + f) % 4
            if k == 0:
                specs.append(MacroblockSpec("skip"))
            elif k == 1:
                specs.append(MacroblockSpec(
                    "p8", luma=[rand_coeffs(rng, 0.15, 64, 5)
                                for _ in range(4)]))
            elif k == 2:
                specs.append(MacroblockSpec(
                    "p", luma=[rand_coeffs(rng, 0.3) for _ in range(16)]))
            else:
                specs.append(MacroblockSpec(
                    "p8", luma=[[0] * 64,
                                rand_coeffs(rng, 0.2, 64, 4),
                                [0] * 64,
                                rand_coeffs(rng, 0.1, 64, 3)]))
        sw.add_frame(specs, "P")
    save("t8_64x64", sw)


def build_cropped():
    rng = np.random.default_rng(31)
    sw = StreamWriter(56, 48, qp=26)  # coded 64x48, cropped right
    nmb = sw.mbw * sw.mbh
    sw.add_frame(
        [MacroblockSpec("pcm", luma=rng.integers(0, 256, (16, 16),
                                                 dtype=np.uint8))
         for _ in range(nmb)], "I")
    specs = []
    for addr in range(nmb):
        if addr % 2:
            specs.append(MacroblockSpec("skip"))
        else:
            specs.append(MacroblockSpec(
                "p", luma=[rand_coeffs(rng, 0.3) for _ in range(16)]))
    sw.add_frame(specs, "P")
    save("crop_56x48", sw)


# ---------------------------------------------------------------------------
# minimal ISO-BMFF muxer for the MP4 fixture


def _box(btype, payload):
    return struct.pack(">I", 8 + len(payload)) + btype + payload


def _full_box(btype, version, flags, payload):
    return _box(btype, struct.pack(">B3s", version,
                                   flags.to_bytes(3, "big")) + payload)


def mux_mp4(sps, pps, samples, width, height):
    """Wrap length-prefixed AVC samples in a minimal MP4."""
    avcc = (
        bytes([1, sps[1], sps[2], sps[3], 0xFF, 0xE1])
        + struct.pack(">H", len(sps)) + sps
        + bytes([1]) + struct.pack(">H", len(pps)) + pps
    )
    avc1 = _box(
        b"avc1",
        b"\x00" * 6 + struct.pack(">H", 1)          # reserved + data_ref_idx
        + b"\x00" * 16                               # pre-defined/reserved
        + struct.pack(">HH", width, height)
        + struct.pack(">II", 0x00480000, 0x00480000)  # 72 dpi
        + b"\x00" * 4 + struct.pack(">H", 1)          # frame_count
        + b"\x00" * 32                                # compressorname
        + struct.pack(">Hh", 24, -1)                  # depth, pre_defined
        + _box(b"avcC", avcc),
    )
    stsd = _full_box(b"stsd", 0, 0, struct.pack(">I", 1) + avc1)
    n = len(samples)
    stts = _full_box(b"stts", 0, 0, struct.pack(">III", 1, n, 1000))
    stsc = _full_box(b"stsc", 0, 0, struct.pack(">IIII", 1, 1, n, 1))
    # a sample is the length-prefixed NAL, so +4 per NAL
    sizes = b"".join(struct.pack(">I", len(s) + 4) for s in samples)
    stsz = _full_box(b"stsz", 0, 0, struct.pack(">II", 0, n) + sizes)
    # mdat directly follows moov; compute offset after moov is assembled
    placeholder = _full_box(b"stco", 0, 0, struct.pack(">II", 1, 0))
    stbl = _box(b"stbl", stsd + stts + stsc + stsz + placeholder)
    url = _full_box(b"url ", 0, 1, b"")
    dref = _full_box(b"dref", 0, 0, struct.pack(">I", 1) + url)
    dinf = _box(b"dinf", dref)
    vmhd = _full_box(b"vmhd", 0, 1, b"\x00" * 8)
    minf = _box(b"minf", vmhd + dinf + stbl)
    hdlr = _full_box(b"hdlr", 0, 0,
                     b"\x00" * 4 + b"vide" + b"\x00" * 12 + b"video\x00")
    mdhd = _full_box(b"mdhd", 0, 0,
                     struct.pack(">IIIIHH", 0, 0, 1000, n * 1000, 0x55C4, 0))
    mdia = _box(b"mdia", mdhd + hdlr + minf)
    tkhd = _full_box(b"tkhd", 0, 7,
                     struct.pack(">IIIII", 0, 0, 1, 0, n * 1000)
                     + b"\x00" * 16
                     + struct.pack(">9i", 0x10000, 0, 0, 0, 0x10000, 0, 0, 0,
                                   0x40000000)
                     + struct.pack(">II", width << 16, height << 16))
    trak = _box(b"trak", tkhd + mdia)
    mvhd = _full_box(b"mvhd", 0, 0,
                     struct.pack(">IIII", 0, 0, 1000, n * 1000)
                     + struct.pack(">IH", 0x00010000, 0x0100) + b"\x00" * 10
                     + struct.pack(">9i", 0x10000, 0, 0, 0, 0x10000, 0, 0, 0,
                                   0x40000000)
                     + b"\x00" * 24 + struct.pack(">I", 2))
    ftyp = _box(b"ftyp", b"isom" + struct.pack(">I", 512) + b"isomavc1")
    mdat_payload = b"".join(
        struct.pack(">I", len(s)) + s for s in samples
    )
    # two passes: moov size is stable once stco is patched in place
    moov = _box(b"moov", mvhd + trak)
    mdat_offset = len(ftyp) + len(moov) + 8
    stco = _full_box(b"stco", 0, 0, struct.pack(">II", 1, mdat_offset))
    moov = moov.replace(placeholder, stco, 1)
    return ftyp + moov + _box(b"mdat", mdat_payload)


def build_mp4():
    rng = np.random.default_rng(99)
    sw = StreamWriter(48, 48, qp=26)
    specs = []
    for addr in range(9):
        if addr % 2:
            specs.append(MacroblockSpec(
                "i4", luma=[rand_coeffs(rng, 0.3) for _ in range(16)]))
        else:
            specs.append(MacroblockSpec(
                "pcm", luma=rng.integers(0, 256, (16, 16), dtype=np.uint8)))
    sw.add_frame(specs, "I")
    validate("single_idr_mp4 (elementary)", sw)
    # strip Annex-B start codes; samples are length-prefixed in MP4
    chunks = [c[4:] for c in sw.chunks]  # start code is always 4 bytes here
    sps_nal, pps_nal, idr_nal = chunks
    data = mux_mp4(sps_nal, pps_nal, [idr_nal], 48, 48)
    frames = decode_luma(data, suffix=".mp4")
    ref = sw.recon_frames[0].astype(np.uint8)
    if len(frames) != 1 or not np.array_equal(frames[0], ref):
        raise SystemExit("single_idr_mp4: container decode not pixel-exact")
    print("single_idr_mp4: container decode pixel-exact")
    with open(os.path.join(FIXTURE_DIR, "single_idr_48x48.mp4"), "wb") as fh:
        fh.write(data)
    write_trace(os.path.join(FIXTURE_DIR, "single_idr_48x48.trace"),
                48, 48, sw.truth_grids())


def main():
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    build_i_only()
    build_ippp()
    build_t8()
    build_cropped()
    build_mp4()
    print("fixture corpus written to", FIXTURE_DIR)


if __name__ == "__main__":
    main()
