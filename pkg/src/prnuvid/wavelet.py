"""Orthogonal Daubechies wavelet transform with circular boundary handling.

The 2-D transform used by the denoiser: separable, periodic convolution,
dyadic decimation. Periodic extension on even lengths keeps the transform
exactly orthogonal, so reconstruction is exact to rounding error. Inputs are
mirror-padded by the caller before they reach this module.
"""

from functools import lru_cache
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def daubechies_lowpass(vanishing_moments: int) -> tuple:
    """Minimum-phase Daubechies lowpass filter with the given number of
    vanishing moments (tap count = 2 * vanishing_moments).

    Built by spectral factorization: the roots of the Daubechies half-band
    polynomial inside the unit circle go to the analysis filter.
    """
    p = vanishing_moments
    if p < 1:
        raise ValueError("vanishing_moments must be >= 1")
    # P(y) = sum_k C(p-1+k, k) y^k, roots taken in y then mapped to z via
    # y = (2 - z - 1/z) / 4.
    coeffs = [comb(p - 1 + k, k) for k in range(p)]
    yroots = np.roots(coeffs[::-1]) if p > 1 else np.array([])
    poly = np.poly1d([1.0])
    for _ in range(p):
        poly = poly * np.poly1d([1.0, 1.0])
    for y in yroots:
        b = 4.0 * y - 2.0
        disc = np.sqrt(b * b - 4.0 + 0j)
        z1 = (-b + disc) / 2.0
        z2 = (-b - disc) / 2.0
        z = z1 if abs(z1) < 1.0 else z2
        poly = poly * np.poly1d([1.0, -z])
    h = np.real(poly.coeffs)
    h = h * np.sqrt(2.0) / h.sum()
    return tuple(float(v) for v in h)


def quadrature_mirror(lo):
    """Highpass counterpart: g[k] = (-1)^k lo[L-1-k]."""
    lo = np.asarray(lo, dtype=np.float64)
    signs = (-1.0) ** np.arange(lo.size)
    return signs * lo[::-1]


def _analyze_axis(x, filt, axis):
    """Circular correlation with stride-2 decimation along one axis."""
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    idx = (np.arange(0, n, 2)[:, None] + np.arange(len(filt))[None, :]) % n
    out = x[..., idx] @ filt
    return np.moveaxis(out, -1, axis)


def _synthesize_axis(lo_band, hi_band, lo, hi, axis):
    """Inverse of :func:`_analyze_axis` (adjoint of the orthogonal analysis)."""
    lo_band = np.moveaxis(lo_band, axis, -1)
    hi_band = np.moveaxis(hi_band, axis, -1)
    n = 2 * lo_band.shape[-1]
    up = np.zeros(lo_band.shape[:-1] + (n,), dtype=np.float64)
    out = np.zeros_like(up)
    for band, filt in ((lo_band, lo), (hi_band, hi)):
        up[..., :] = 0.0
        up[..., ::2] = band
        idx = (np.arange(n)[:, None] - np.arange(len(filt))[None, :]) % n
        out += up[..., idx] @ np.asarray(filt, dtype=np.float64)
    return np.moveaxis(out, -1, axis)


def dwt2(image, lo, levels):
    """Multi-level separable 2-D DWT.

    Returns (approx, details) where details is a list, coarsest level last,
    of (horizontal, vertical, diagonal) subband triples. Both image axes must
    be divisible by 2**levels.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = quadrature_mirror(lo)
    a = np.asarray(image, dtype=np.float64)
    details = []
    for _ in range(levels):
        if a.shape[0] % 2 or a.shape[1] % 2:
            raise ValueError(f"subband shape {a.shape} not even; pad the input")
        lo_r = _analyze_axis(a, lo, 0)
        hi_r = _analyze_axis(a, hi, 0)
        ll = _analyze_axis(lo_r, lo, 1)
        lh = _analyze_axis(lo_r, hi, 1)
        hl = _analyze_axis(hi_r, lo, 1)
        hh = _analyze_axis(hi_r, hi, 1)
        details.append((lh, hl, hh))
        a = ll
    return a, details


def idwt2(approx, details, lo):
    """Inverse of :func:`dwt2`."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = quadrature_mirror(lo)
    a = np.asarray(approx, dtype=np.float64)
    for lh, hl, hh in reversed(details):
        lo_r = _synthesize_axis(a, lh, lo, hi, 1)
        hi_r = _synthesize_axis(hl, hh, lo, hi, 1)
        a = _synthesize_axis(lo_r, hi_r, lo, hi, 0)
    return a
