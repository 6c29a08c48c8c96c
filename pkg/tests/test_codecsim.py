"""Sensor/codec simulator semantics checked against hand-computed oracles."""

import numpy as np
import pytest
from scipy.fft import dctn, idctn

from prnuvid.codecsim import (
    SensorModel,
    SimCodecParams,
    encode_decode,
    make_scene,
    mask_coverage,
    simulate_device,
    survival_experiment,
    synth_frame,
)
from prnuvid.errors import DimensionMismatchError, RejectedInputError
from prnuvid.h264.types import FRAME_TYPE_I, FRAME_TYPE_P


class TestSensorModel:
    def test_zero_prnu_degenerate(self):
        model = SensorModel(height=16, width=16, prnu_std=0.0,
                            temporal_noise_std=0.0, seed=1)
        assert not np.any(model.prnu())
        scene = make_scene(16, 16, 1)
        assert np.abs(synth_frame(model, scene) - scene).max() < 1e-12

    def test_zero_scene_gives_clipped_noise(self):
        model = SensorModel(height=16, width=16, prnu_std=0.1,
                            temporal_noise_std=3.0, seed=2)
        frame = synth_frame(model, np.zeros((16, 16)))
        assert frame.min() >= 0.0
        # scene*K term vanishes, so only the additive noise remains
        assert frame.max() <= 3.0 * 6

    def test_prnu_recoverable_from_uncompressed_frames(self):
        model = SensorModel(height=32, width=32, prnu_std=0.05,
                            temporal_noise_std=0.5, seed=3)
        scene = np.full((32, 32), 128.0)
        est = np.zeros((32, 32))
        n = 200
        for i in range(n):
            est += (synth_frame(model, scene, i) - scene) / scene
        est /= n
        r = np.corrcoef(est.ravel(), model.prnu().ravel())[0, 1]
        assert r > 0.95

    def test_same_seed_same_frame(self):
        model = SensorModel(height=16, width=16, seed=4)
        scene = make_scene(16, 16, 4)
        a = synth_frame(model, scene, 7)
        b = synth_frame(model, scene, 7)
        assert a.tobytes() == b.tobytes()

    def test_different_frame_index_different_noise(self):
        model = SensorModel(height=16, width=16, seed=5)
        scene = make_scene(16, 16, 5)
        assert np.any(synth_frame(model, scene, 0) != synth_frame(model, scene, 1))

    def test_scene_shape_mismatch(self):
        model = SensorModel(height=16, width=16, seed=6)
        with pytest.raises(DimensionMismatchError):
            synth_frame(model, np.zeros((16, 17)))


class TestParamsValidation:
    def test_bad_qp(self):
        with pytest.raises(RejectedInputError):
            SimCodecParams(qp=0)

    def test_bad_block_size(self):
        with pytest.raises(RejectedInputError):
            SimCodecParams(block_size=16)

    def test_bad_gop(self):
        for gop in ("", "PIP", "IBP"):
            with pytest.raises(RejectedInputError):
                SimCodecParams(gop=gop)

    def test_empty_frames_rejected(self):
        with pytest.raises(RejectedInputError):
            encode_decode([])

    def test_indivisible_dims_rejected(self):
        with pytest.raises(RejectedInputError):
            encode_decode([np.zeros((10, 16))], SimCodecParams(block_size=4))

    def test_size_change_mid_stream_rejected(self):
        with pytest.raises(DimensionMismatchError):
            encode_decode([np.zeros((16, 16)), np.zeros((16, 20))])


class TestEncodeDecode:
    def test_intra_frame_matches_scalar_reference(self):
        # with DC prediction off every I block predicts from flat 128,
        # so the whole frame has a closed-form per-block reconstruction
        rng = np.random.default_rng(7)
        frame = np.clip(128 + 25 * rng.standard_normal((16, 16)), 0, 255)
        qp = 6.0
        params = SimCodecParams(qp=qp, block_size=4, gop="I",
                                intra_dc_prediction=False)
        stream = encode_decode([frame], params)
        want = np.zeros_like(frame)
        for r in range(0, 16, 4):
            for c in range(0, 16, 4):
                coefs = dctn(frame[r:r + 4, c:c + 4] - 128.0, type=2,
                             norm="ortho")
                q = np.sign(coefs) * np.floor(np.abs(coefs) / qp + 0.5)
                want[r:r + 4, c:c + 4] = 128.0 + idctn(q * qp, type=2,
                                                       norm="ortho")
        assert np.abs(stream.decoded_frames[0] - want).max() < 1e-9

    def test_tiny_qp_near_lossless(self):
        rng = np.random.default_rng(8)
        frame = np.clip(128 + 20 * rng.standard_normal((16, 16)), 0, 255)
        stream = encode_decode([frame], SimCodecParams(qp=1e-4, gop="I"))
        assert np.abs(stream.decoded_frames[0] - frame).max() < 1e-3

    def test_constant_frame_has_dc_only_blocks(self):
        # constant input leaves a constant per-block residue, so all AC
        # coefficients quantize to zero and the mask is empty
        frame = np.full((16, 16), 200.0)
        stream = encode_decode([frame], SimCodecParams(
            qp=4.0, gop="I", intra_dc_prediction=False))
        assert not np.any(stream.residual_maps[0].nonzero_ac)
        assert not np.any(stream.ground_truth_masks[0].bits)

    def test_identical_p_frame_fully_skipped(self):
        rng = np.random.default_rng(9)
        frame = np.clip(128 + 20 * rng.standard_normal((16, 16)), 0, 255)
        stream = encode_decode([frame, frame.copy()], SimCodecParams(qp=8.0))
        p_map = stream.residual_maps[1]
        assert p_map.frame_type == FRAME_TYPE_P
        assert not np.any(p_map.nonzero_ac)
        assert not np.any(stream.ground_truth_masks[1].bits)
        # a skipped frame reproduces the previous decoded frame exactly
        assert np.abs(stream.decoded_frames[1]
                      - stream.decoded_frames[0]).max() < 1e-9

    def test_frame_types_follow_gop(self):
        frames = [np.full((8, 8), 128.0)] * 5
        stream = encode_decode(frames, SimCodecParams(gop="IPP"))
        types = [m.frame_type for m in stream.residual_maps]
        assert types == [FRAME_TYPE_I, FRAME_TYPE_P, FRAME_TYPE_P,
                         FRAME_TYPE_I, FRAME_TYPE_P]

    def test_mask_consistent_with_residual_map(self):
        model = SensorModel(height=32, width=32, seed=10)
        stream = simulate_device(model, SimCodecParams(qp=12.0), 6,
                                 scene_seed=10)
        for mask, rmap in zip(stream.ground_truth_masks,
                              stream.residual_maps):
            expanded = np.repeat(
                np.repeat((rmap.nonzero_ac > 0).astype(np.uint8), 4, axis=0),
                4, axis=1)
            assert np.array_equal(mask.bits, expanded)
            assert mask.frame_type == rmap.frame_type

    def test_block8_grid_cells_cover_blocks(self):
        rng = np.random.default_rng(11)
        frame = np.clip(128 + 30 * rng.standard_normal((16, 16)), 0, 255)
        stream = encode_decode([frame], SimCodecParams(qp=4.0, block_size=8,
                                                       gop="I"))
        counts = stream.residual_maps[0].nonzero_ac
        assert counts.shape == (4, 4)
        # each 8x8 block fills a 2x2 patch of 4x4 grid cells uniformly
        for gr in range(0, 4, 2):
            for gc in range(0, 4, 2):
                patch = counts[gr:gr + 2, gc:gc + 2]
                assert np.all(patch == patch[0, 0])
        assert np.all(stream.residual_maps[0].transform_size == 8)

    def test_determinism(self):
        model = SensorModel(height=32, width=32, seed=12)
        a = simulate_device(model, SimCodecParams(qp=10.0), 5, scene_seed=12)
        b = simulate_device(model, SimCodecParams(qp=10.0), 5, scene_seed=12)
        for fa, fb in zip(a.decoded_frames, b.decoded_frames):
            assert fa.tobytes() == fb.tobytes()
        for ma, mb in zip(a.ground_truth_masks, b.ground_truth_masks):
            assert np.array_equal(ma.bits, mb.bits)


class TestCoverage:
    def test_coverage_monotone_in_qp(self):
        model = SensorModel(height=32, width=32, seed=13)
        covs = []
        for qp in (2.0, 8.0, 32.0, 128.0):
            stream = simulate_device(model, SimCodecParams(qp=qp), 8,
                                     scene_seed=13)
            covs.append(mask_coverage(stream.ground_truth_masks))
        assert all(a >= b for a, b in zip(covs, covs[1:]))
        assert covs[0] > covs[-1]

    def test_coverage_bounds_and_empty(self):
        assert mask_coverage([]) == 0.0
        model = SensorModel(height=16, width=16, seed=14)
        stream = simulate_device(model, SimCodecParams(qp=6.0), 4,
                                 scene_seed=14)
        cov = mask_coverage(stream.ground_truth_masks)
        assert 0.0 <= cov <= 1.0


class TestSurvival:
    def test_minimum_frames_enforced(self):
        model = SensorModel(height=16, width=16, seed=15)
        with pytest.raises(RejectedInputError):
            survival_experiment(model, SimCodecParams(), 10)

    def test_prnu_identity_changes_output(self):
        scene = make_scene(16, 16, 16)
        a = synth_frame(SensorModel(height=16, width=16, prnu_std=0.05,
                                    temporal_noise_std=0.0, seed=16), scene)
        b = synth_frame(SensorModel(height=16, width=16, prnu_std=0.05,
                                    temporal_noise_std=0.0, seed=17), scene)
        assert np.abs(a - b).max() > 0.1
