"""NCC/PCE matching against brute-force evaluation of the definitions."""

import math

import numpy as np
import pytest

from prnuvid.errors import DegenerateInputError, RejectedInputError
from prnuvid.matcher import (
    PceParams,
    decide,
    link_videos,
    match,
    ncc,
    pce,
)


def ncc_brute(f, w):
    """Direct double-loop circular normalized cross-correlation."""
    f = np.asarray(f, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    m, n = f.shape
    fc = f - f.mean()
    wc = w - w.mean()
    denom = np.linalg.norm(fc) * np.linalg.norm(wc)
    out = np.zeros((m, n))
    for r in range(m):
        for c in range(n):
            acc = 0.0
            for i in range(m):
                for j in range(n):
                    acc += fc[i, j] * wc[(i + r) % m, (j + c) % n]
            out[r, c] = acc / denom
    return out


def pce_brute(values, peak_rc, half):
    m, n = values.shape
    total = 0.0
    count = 0
    for r in range(m):
        for c in range(n):
            dr = min((r - peak_rc[0]) % m, (peak_rc[0] - r) % m)
            dc = min((c - peak_rc[1]) % n, (peak_rc[1] - c) % n)
            if dr <= half and dc <= half:
                continue
            total += values[r, c] ** 2
            count += 1
    return values[peak_rc] ** 2 / (total / count)


class TestNcc:
    def test_self_correlation_is_one(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((16, 16))
        s = ncc(f, f)
        assert abs(s.values[0, 0] - 1.0) <= 1e-9
        assert s.peak_location == (1, 1)

    def test_negated_input(self):
        rng = np.random.default_rng(2)
        f = rng.standard_normal((16, 16))
        s = ncc(f, -f)
        assert abs(s.values[0, 0] + 1.0) <= 1e-9

    def test_circular_shift_peak_location(self):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((16, 16))
        w = np.roll(f, (3, 5), axis=(0, 1))
        s = ncc(f, w)
        assert s.peak_location == (4, 6)
        assert abs(s.peak_value - 1.0) <= 1e-9

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            f = rng.standard_normal((8, 8))
            w = rng.standard_normal((8, 8))
            fast = ncc(f, w).values
            slow = ncc_brute(f, w)
            assert np.abs(fast - slow).max() <= 1e-6

    def test_constant_input_rejected(self):
        with pytest.raises(DegenerateInputError):
            ncc(np.ones((8, 8)), np.random.default_rng(5).normal(size=(8, 8)))

    def test_surface_bounded(self):
        rng = np.random.default_rng(6)
        s = ncc(rng.standard_normal((12, 12)), rng.standard_normal((12, 12)))
        assert np.abs(s.values).max() <= 1.0 + 1e-9


class TestPce:
    def test_closed_form_2500(self):
        values = np.full((64, 64), 0.01)
        values[0, 0] = 0.5
        from prnuvid.matcher import NccSurface

        s = NccSurface(values=values, peak_location=(1, 1), peak_value=0.5)
        got = pce(s, PceParams(exclusion_half_width=5))
        assert abs(got - 2500.0) <= 1e-6

    def test_all_equal_gives_one(self):
        from prnuvid.matcher import NccSurface

        values = np.full((32, 32), 0.2)
        s = NccSurface(values=values, peak_location=(1, 1), peak_value=0.2)
        assert abs(pce(s, PceParams()) - 1.0) < 1e-12

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            f = rng.standard_normal((16, 16))
            w = rng.standard_normal((16, 16))
            s = ncc(f, w)
            peak_rc = (s.peak_location[0] - 1, s.peak_location[1] - 1)
            want = pce_brute(s.values, peak_rc, 1)
            got = pce(s, PceParams(exclusion_half_width=1))
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_exclusion_region_must_fit(self):
        from prnuvid.matcher import NccSurface

        s = NccSurface(values=np.zeros((8, 8)), peak_location=(1, 1),
                       peak_value=0.0)
        with pytest.raises(RejectedInputError):
            pce(s, PceParams(exclusion_half_width=4))

    def test_zero_off_peak_energy_is_inf(self):
        from prnuvid.matcher import NccSurface

        values = np.zeros((32, 32))
        values[0, 0] = 1.0
        s = NccSurface(values=values, peak_location=(1, 1), peak_value=1.0)
        assert math.isinf(pce(s, PceParams()))

    def test_aligned_not_above_free_search(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            f = rng.standard_normal((16, 16))
            w = rng.standard_normal((16, 16))
            s = ncc(f, w)
            free = pce(s, PceParams(exclusion_half_width=2))
            aligned = pce(s, PceParams(exclusion_half_width=2,
                                       aligned_mode=True))
            assert aligned <= free + 1e-9

    def test_scale_and_offset_invariance(self):
        rng = np.random.default_rng(9)
        f = rng.standard_normal((16, 16))
        w = rng.standard_normal((16, 16))
        base = pce(ncc(f, w), PceParams(exclusion_half_width=2))
        scaled = pce(ncc(3.5 * f, 0.2 * w), PceParams(exclusion_half_width=2))
        shifted = pce(ncc(f + 7.0, w - 4.0), PceParams(exclusion_half_width=2))
        assert abs(scaled - base) <= 1e-9 * max(1.0, abs(base))
        assert abs(shifted - base) <= 1e-6 * max(1.0, abs(base))

    def test_signed_mode_carries_sign(self):
        rng = np.random.default_rng(10)
        f = rng.standard_normal((16, 16))
        s = ncc(f, -f)
        assert pce(s, PceParams(aligned_mode=True, signed_mode=True)) < 0


class TestDecide:
    def test_above_threshold(self):
        assert decide(60.0, 50.0).decision == "H1"

    def test_strict_inequality(self):
        assert decide(50.0, 50.0).decision == "H0"

    def test_nan_rejected(self):
        with pytest.raises(RejectedInputError):
            decide(float("nan"))

    def test_monotonicity(self):
        rng = np.random.default_rng(11)
        vals = np.sort(rng.uniform(0, 100, size=50))
        decisions = [decide(v, 50.0).decision for v in vals]
        first_h1 = next((i for i, d in enumerate(decisions) if d == "H1"),
                        len(decisions))
        assert all(d == "H1" for d in decisions[first_h1:])


class TestLinkVideos:
    def _device_fingerprints(self, seed, n=30):
        from prnuvid import fingerprint as fpm
        from prnuvid.codecsim import SensorModel, make_scene, synth_frame
        from prnuvid.noise import extract_noise

        model = SensorModel(height=64, width=64, prnu_std=0.05,
                            temporal_noise_std=1.0, seed=seed)
        halves = []
        for half in range(2):
            acc = fpm.new_accumulator(64, 64)
            for i in range(n // 2):
                idx = half * (n // 2) + i
                frame = synth_frame(model, make_scene(64, 64, (seed, idx)), idx)
                fpm.accumulate(acc, frame, extract_noise(frame))
            halves.append(fpm.finalize(acc))
        return halves

    def test_same_device_links(self):
        a, b = self._device_fingerprints(21)
        assert link_videos(a, b).decision == "H1"

    def test_different_devices_do_not_link(self):
        a, _ = self._device_fingerprints(22)
        b, _ = self._device_fingerprints(23)
        assert link_videos(a, b).decision == "H0"

    def test_self_match_is_extreme(self):
        # self-match PCE grows with the surface area (peak 1, off-peak ~1/mn)
        plane = np.random.default_rng(24).standard_normal((1200, 1200))
        result = link_videos(plane, plane)
        assert math.isinf(result.pce) or result.pce >= 1e6
        assert result.decision == "H1"

    def test_aligned_pce_symmetry(self):
        a, b = self._device_fingerprints(25)
        ab = link_videos(a, b).pce
        ba = link_videos(b, a).pce
        assert abs(ab - ba) <= 1e-6 * max(1.0, abs(ab))


def test_match_composition():
    rng = np.random.default_rng(26)
    f = rng.standard_normal((32, 32))
    result = match(f, f + 0.01 * rng.standard_normal((32, 32)))
    assert result.decision == "H1"
    assert result.peak_location == (1, 1)
