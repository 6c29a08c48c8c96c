"""Per-frame PRNU noise residual extraction and post-processing.

Pipeline: wavelet denoise -> residual -> row/column zero-meaning (linear
pattern removal) -> Wiener filtering in the DFT domain. Frames are expected
as 2-D float arrays on the 0..255 intensity scale; video processing runs on
the luma plane.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fft2, ifft2
from scipy.ndimage import uniform_filter

from .errors import DimensionMismatchError, RejectedInputError
from .wavelet import daubechies_lowpass, dwt2, idwt2

MIN_PLANE_SIDE = 8

RGB_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class DenoiseParams:
    """Knobs of the wavelet denoiser.

    sigma0_sq is the assumed white-noise variance on the 0..255 scale;
    window_sizes are the local-variance estimation windows (odd, >= 3),
    the per-pixel minimum across windows is used.
    """

    wavelet_levels: int = 4
    vanishing_moments: int = 8
    sigma0_sq: float = 9.0
    window_sizes: tuple = (3, 5, 7, 9)

    def __post_init__(self):
        if self.wavelet_levels < 1:
            raise RejectedInputError("wavelet_levels must be >= 1")
        for w in self.window_sizes:
            if w < 3 or w % 2 == 0:
                raise RejectedInputError(f"window size {w} must be odd and >= 3")


def _check_plane(plane):
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise RejectedInputError(f"expected a 2-D plane, got ndim={plane.ndim}")
    if plane.shape[0] < MIN_PLANE_SIDE or plane.shape[1] < MIN_PLANE_SIDE:
        raise RejectedInputError(
            f"plane {plane.shape} smaller than {MIN_PLANE_SIDE}x{MIN_PLANE_SIDE}"
        )
    return plane


def _mirror_pad(plane, multiple):
    h, w = plane.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph > h or pw > w:
        raise RejectedInputError(
            f"plane {plane.shape} too small to mirror-pad to a multiple of {multiple}"
        )
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="symmetric")


def denoise_wavelet(plane, params: DenoiseParams = DenoiseParams()):
    """Wavelet-domain adaptive Wiener denoiser.

    Detail coefficients are shrunk by s2/(s2 + sigma0_sq) where s2 is the
    local signal-variance estimate max(0, local second moment - sigma0_sq),
    minimized over the configured windows. The approximation band passes
    through untouched.
    """
    plane = _check_plane(plane)
    h, w = plane.shape
    block = 2 ** params.wavelet_levels
    padded = _mirror_pad(plane, block)
    lo = daubechies_lowpass(params.vanishing_moments)
    approx, details = dwt2(padded, lo, params.wavelet_levels)
    shrunk = []
    for triple in details:
        out = []
        for band in triple:
            sq = band * band
            est = None
            for win in params.window_sizes:
                local = uniform_filter(sq, size=win, mode="reflect")
                cand = np.maximum(local - params.sigma0_sq, 0.0)
                est = cand if est is None else np.minimum(est, cand)
            out.append(band * est / (est + params.sigma0_sq))
        shrunk.append(tuple(out))
    rec = idwt2(approx, shrunk, lo)
    return rec[:h, :w]


def extract_noise(plane, params: DenoiseParams = DenoiseParams()):
    """Noise residual: plane minus its denoised version."""
    plane = _check_plane(plane)
    return plane - denoise_wavelet(plane, params)


def zero_mean(residual, tol=1e-9, max_iter=8):
    """Remove the linear pattern by subtracting every row and column mean.

    One rows-then-columns pass is exact in theory; iterate defensively until
    all row/column means are below tol.
    """
    out = np.asarray(residual, dtype=np.float64).copy()
    for _ in range(max_iter):
        out -= out.mean(axis=1, keepdims=True)
        out -= out.mean(axis=0, keepdims=True)
        if (
            np.abs(out.mean(axis=1)).max() <= tol
            and np.abs(out.mean(axis=0)).max() <= tol
        ):
            return out
    return out


def _wiener_gain(residual):
    """DFT-domain Wiener gain map for a zero-meaned residual."""
    spectrum = fft2(residual, norm="ortho")
    power = np.abs(spectrum) ** 2
    sigma_sq = float(np.var(residual))
    local = uniform_filter(power, size=3, mode="wrap")
    gain = sigma_sq / np.maximum(local, np.finfo(np.float64).tiny)
    return spectrum, np.minimum(gain, 1.0)


def wiener_dft(residual, rel_tol=1e-9):
    """Suppress periodic artifacts by adaptive Wiener filtering of the DFT.

    Bins whose local spectral energy exceeds the global residual variance
    are attenuated; flat (noise-like) regions of the spectrum pass through.
    """
    residual = np.asarray(residual, dtype=np.float64)
    if not np.any(residual):
        return residual.copy()
    spectrum, gain = _wiener_gain(residual)
    out = ifft2(spectrum * gain, norm="ortho")
    real = out.real
    norm = np.linalg.norm(real)
    if norm > 0 and np.linalg.norm(out.imag) > rel_tol * norm:
        raise RejectedInputError("Wiener output has non-negligible imaginary part")
    return real


def rgb_combine(red, green, blue):
    """Standard luminance-weighted RGB combination (0.299 / 0.587 / 0.114)."""
    red = np.asarray(red, dtype=np.float64)
    green = np.asarray(green, dtype=np.float64)
    blue = np.asarray(blue, dtype=np.float64)
    if not (red.shape == green.shape == blue.shape):
        raise DimensionMismatchError(
            f"channel shapes differ: {red.shape} {green.shape} {blue.shape}"
        )
    wr, wg, wb = RGB_WEIGHTS
    return wr * red + wg * green + wb * blue


def postprocess_residual(residual):
    """zero_mean followed by wiener_dft, the order used everywhere."""
    return wiener_dft(zero_mean(residual))
