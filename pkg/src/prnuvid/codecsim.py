"""Synthetic sensor + codec simulator used as ground-truth oracle.

Generates frames from the multiplicative sensor model
I = scene + scene*K + temporal noise, then pushes them through a simplified
block codec: predict (co-located block for P frames, DC-from-decoded-border
for I frames), DCT the residue, uniformly quantize, dequantize, inverse
transform, add back. Per-block nonzero quantized AC counts and the derived
pixel masks are recorded during encoding, so every downstream mask/estimator
claim can be checked against known ground truth without real cameras.

The transform is the orthonormal real DCT, not the H.264 integer core: the
simulator realizes the encode/decode block algebra and mask semantics, while
bit-level H.264 behavior is the bitstream parser's fixture oracle.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DimensionMismatchError, RejectedInputError
from .h264.types import BlockResidualMap, FrameMask, FRAME_TYPE_I, FRAME_TYPE_P


@dataclass(frozen=True)
class SensorModel:
    height: int
    width: int
    prnu_std: float = 0.02
    temporal_noise_std: float = 2.0
    seed: int = 0

    def prnu(self):
        """The device's fixed multiplicative PRNU matrix K."""
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.prnu_std, size=(self.height, self.width))


@dataclass(frozen=True)
class SimCodecParams:
    qp: float = 8.0
    block_size: int = 4
    gop: str = "IPPPPPPP"
    intra_dc_prediction: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.qp <= 0:
            raise RejectedInputError("qp must be positive")
        if self.block_size not in (4, 8):
            raise RejectedInputError("block_size must be 4 or 8")
        if not self.gop or self.gop[0] != "I" or set(self.gop) - {"I", "P"}:
            raise RejectedInputError("gop must be nonempty, start with I, use only I/P")


@dataclass
class SimStream:
    decoded_frames: list          # float64 planes
    ground_truth_masks: list      # FrameMask per frame
    residual_maps: list           # BlockResidualMap per frame
    true_prnu: np.ndarray = None


def synth_frame(model: SensorModel, scene, frame_index=0):
    """One sensor output frame: scene + scene*K + temporal noise, clipped."""
    scene = np.asarray(scene, dtype=np.float64)
    if scene.shape != (model.height, model.width):
        raise DimensionMismatchError(
            f"scene {scene.shape} vs sensor {(model.height, model.width)}"
        )
    k = model.prnu()
    rng = np.random.default_rng((model.seed, 0xF0A3, frame_index))
    noise = rng.normal(0.0, model.temporal_noise_std, size=scene.shape)
    return np.clip(scene + scene * k + noise, 0.0, 255.0)


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _dc_predictor(decoded, r, c, b):
    """Mean of the left and top decoded borders; 128 when neither exists."""
    samples = []
    if c > 0:
        samples.append(decoded[r:r + b, c - 1])
    if r > 0:
        samples.append(decoded[r - 1, c:c + b])
    if not samples:
        return 128.0
    return float(np.concatenate(samples).mean())


def encode_decode(frames, params: SimCodecParams = SimCodecParams()):
    """Run frames through the simplified codec; returns a SimStream."""
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if not frames:
        raise RejectedInputError("no frames")
    h, w = frames[0].shape
    b = params.block_size
    if h % b or w % b:
        raise RejectedInputError(f"frame dims {h}x{w} not divisible by {b}")
    grid_h, grid_w = (h + 3) // 4, (w + 3) // 4
    sub = b // 4  # 4x4 grid cells covered per block side
    decoded_frames = []
    masks = []
    maps = []
    prev_decoded = None
    for idx, frame in enumerate(frames):
        if frame.shape != (h, w):
            raise DimensionMismatchError("frame size changed mid-stream")
        ftype = params.gop[idx % len(params.gop)]
        is_intra = ftype == "I" or prev_decoded is None
        decoded = np.zeros_like(frame)
        counts = np.zeros((grid_h, grid_w), dtype=np.int32)
        for r in range(0, h, b):
            for c in range(0, w, b):
                cur = frame[r:r + b, c:c + b]
                if is_intra:
                    if params.intra_dc_prediction:
                        ref = np.full((b, b), _dc_predictor(decoded, r, c, b))
                    else:
                        ref = np.full((b, b), 128.0)
                else:
                    ref = prev_decoded[r:r + b, c:c + b]
                residue = cur - ref
                coefs = dctn(residue, type=2, norm="ortho")
                q = _round_half_away(coefs / params.qp)
                n_ac = int(np.count_nonzero(q)) - int(q[0, 0] != 0)
                dequant = q * params.qp
                decoded[r:r + b, c:c + b] = ref + idctn(dequant, type=2, norm="ortho")
                gr, gc = r // 4, c // 4
                counts[gr:gr + sub, gc:gc + sub] = n_ac
        frame_type = FRAME_TYPE_I if is_intra else FRAME_TYPE_P
        maps.append(
            BlockResidualMap(
                frame_index=idx,
                frame_type=frame_type,
                width=w,
                height=h,
                nonzero_ac=counts,
                transform_size=np.full(counts.shape, b, dtype=np.int16),
            )
        )
        masks.append(
            FrameMask(width=w, height=h, frame_type=frame_type,
                      bits=_expand_mask(counts, h, w))
        )
        decoded_frames.append(decoded)
        prev_decoded = decoded
    return SimStream(decoded_frames=decoded_frames, ground_truth_masks=masks,
                     residual_maps=maps)


def _expand_mask(counts, h, w):
    bits = (counts > 0).astype(np.uint8)
    return np.repeat(np.repeat(bits, 4, axis=0), 4, axis=1)[:h, :w]


def make_scene(height, width, seed, smoothness=8.0, base=128.0, contrast=40.0):
    """Low-frequency random scene content in [0, 255]."""
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    field_ = gaussian_filter(rng.normal(size=(height, width)), smoothness,
                             mode="wrap")
    field_ /= max(field_.std(), 1e-12)
    return np.clip(base + contrast * field_, 0.0, 255.0)


def simulate_device(model: SensorModel, params: SimCodecParams, n_frames,
                    scene_seed=0, scene_drift=0.35):
    """Frames of a slowly changing scene through the codec, with ground truth.

    scene_drift blends a fresh random scene into the previous one each frame,
    producing the moderate inter-frame change that leaves a mixture of coded
    and skipped-residual blocks at mid quantization.
    """
    scenes = []
    scene = make_scene(model.height, model.width, (scene_seed, 0))
    for i in range(n_frames):
        if i > 0:
            fresh = make_scene(model.height, model.width, (scene_seed, i))
            scene = (1.0 - scene_drift) * scene + scene_drift * fresh
        scenes.append(scene)
    frames = [synth_frame(model, s, i) for i, s in enumerate(scenes)]
    stream = encode_decode(frames, params)
    stream.true_prnu = model.prnu()
    return stream


def mask_coverage(masks):
    total = sum(int(m.bits.sum()) for m in masks)
    denom = sum(m.bits.size for m in masks)
    return total / denom if denom else 0.0


def survival_experiment(model: SensorModel, params: SimCodecParams, n_frames,
                        scene_seed=0):
    """Estimate the PRNU from masked / zero-mask / all blocks and compare.

    Returns a dict with the three correlations against the true PRNU and the
    mask coverage. For high quantization the masked estimate should beat the
    all-blocks estimate, which should beat the zero-mask-only estimate.
    """
    from . import fingerprint as fp
    from .noise import extract_noise

    if n_frames < 20:
        raise RejectedInputError("survival experiment needs at least 20 frames")
    stream = simulate_device(model, params, n_frames, scene_seed=scene_seed)
    acc_masked = fp.new_accumulator(model.height, model.width, masked_mode=True)
    acc_inverse = fp.new_accumulator(model.height, model.width, masked_mode=True)
    acc_all = fp.new_accumulator(model.height, model.width, masked_mode=False)
    for frame, mask in zip(stream.decoded_frames, stream.ground_truth_masks):
        residual = extract_noise(frame)
        fp.accumulate(acc_masked, frame, residual, mask.bits)
        fp.accumulate(acc_inverse, frame, residual, 1 - mask.bits)
        fp.accumulate(acc_all, frame, residual)
    k = stream.true_prnu

    def corr(acc):
        est = fp.finalize(acc, postprocess=True).plane.astype(np.float64)
        if est.std() == 0.0:
            return 0.0
        return float(np.corrcoef(est.ravel(), k.ravel())[0, 1])

    return {
        "corr_masked": corr(acc_masked),
        "corr_zero_mask": corr(acc_inverse),
        "corr_all": corr(acc_all),
        "coverage": mask_coverage(stream.ground_truth_masks),
    }
