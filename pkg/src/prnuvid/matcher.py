"""Fingerprint matching: circular NCC, PCE, and the H0/H1 decision."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import fft2, ifft2

from .errors import DegenerateInputError, DimensionMismatchError, RejectedInputError

DEFAULT_TAU = 50.0


@dataclass(frozen=True)
class NccSurface:
    """Normalized circular cross-correlation over all shifts.

    values[r-1, c-1] is the correlation at circular shift (r, c), 1-based,
    so the aligned correlation sits at (1, 1). peak_location is 1-based with
    lexicographic tie-breaking.
    """

    values: np.ndarray
    peak_location: tuple
    peak_value: float


@dataclass(frozen=True)
class PceParams:
    exclusion_half_width: int = 5
    aligned_mode: bool = False
    signed_mode: bool = False


@dataclass(frozen=True)
class PceResult:
    pce: float
    peak_location: tuple
    peak_value: float
    threshold: float
    decision: str  # "H0" or "H1"


def ncc(fingerprint, residual):
    """Normalized cross-correlation surface via FFT.

    Both inputs are mean-subtracted; the surface is the circular correlation
    divided by the product of the centered Euclidean norms.
    """
    f = np.asarray(getattr(fingerprint, "plane", fingerprint), dtype=np.float64)
    w = np.asarray(getattr(residual, "plane", residual), dtype=np.float64)
    if f.shape != w.shape:
        raise DimensionMismatchError(f"NCC operands {f.shape} vs {w.shape}")
    fc = f - f.mean()
    wc = w - w.mean()
    nf = np.linalg.norm(fc)
    nw = np.linalg.norm(wc)
    if nf == 0.0 or nw == 0.0:
        raise DegenerateInputError("constant input has no correlation structure")
    surface = ifft2(np.conj(fft2(fc)) * fft2(wc)).real / (nf * nw)
    flat_idx = int(np.argmax(surface))  # argmax is lexicographically first max
    r, c = np.unravel_index(flat_idx, surface.shape)
    return NccSurface(
        values=surface,
        peak_location=(int(r) + 1, int(c) + 1),
        peak_value=float(surface[r, c]),
    )


def _exclusion_mask(shape, center, half_width):
    """Boolean mask of the square region S around the peak, wrapped circularly."""
    m, n = shape
    rows = (np.arange(center[0] - half_width, center[0] + half_width + 1)) % m
    cols = (np.arange(center[1] - half_width, center[1] + half_width + 1)) % n
    mask = np.zeros(shape, dtype=bool)
    mask[np.ix_(rows, cols)] = True
    return mask


def pce(surface: NccSurface, params: PceParams = PceParams()):
    """Peak-to-correlation-energy of an NCC surface.

    PCE = peak^2 / mean off-peak squared correlation, the peak's square
    region S (side 2h+1) excluded. aligned_mode pins the peak at shift (1,1);
    signed_mode carries the sign of the peak through the squaring.
    """
    values = surface.values
    m, n = values.shape
    h = params.exclusion_half_width
    if (2 * h + 1) ** 2 >= m * n:
        raise RejectedInputError(
            f"exclusion region ({2 * h + 1})^2 does not fit in a {m}x{n} surface"
        )
    if params.aligned_mode:
        peak_rc = (0, 0)
        peak = float(values[0, 0])
    else:
        peak_rc = (surface.peak_location[0] - 1, surface.peak_location[1] - 1)
        peak = surface.peak_value
    excl = _exclusion_mask(values.shape, peak_rc, h)
    off = values[~excl]
    energy = float(np.mean(off * off))
    if energy == 0.0:
        return math.copysign(math.inf, peak) if params.signed_mode else math.inf
    out = peak * peak / energy
    if params.signed_mode and peak < 0:
        out = -out
    return out


def decide(pce_value, tau=DEFAULT_TAU, peak_location=(1, 1), peak_value=float("nan")):
    """H1 iff pce > tau (strict). NaN PCE is rejected, never a silent H0."""
    if math.isnan(pce_value):
        raise RejectedInputError("PCE is NaN; refusing to decide")
    return PceResult(
        pce=float(pce_value),
        peak_location=tuple(peak_location),
        peak_value=float(peak_value),
        threshold=float(tau),
        decision="H1" if pce_value > tau else "H0",
    )


def match(fingerprint, residual, params: PceParams = PceParams(), tau=DEFAULT_TAU):
    """ncc -> pce -> decide in one call."""
    surface = ncc(fingerprint, residual)
    value = pce(surface, params)
    if params.aligned_mode:
        loc, pk = (1, 1), float(surface.values[0, 0])
    else:
        loc, pk = surface.peak_location, surface.peak_value
    return decide(value, tau, peak_location=loc, peak_value=pk)


def link_videos(fp_a, fp_b, params: PceParams = PceParams(aligned_mode=True),
                tau=DEFAULT_TAU):
    """Device linking: match two per-video fingerprint estimates directly.

    Defaults to aligned mode; same-device equal-resolution videos carry the
    PRNU at the same pixel positions, so no shift search is needed.
    """
    return match(fp_a, fp_b, params=params, tau=tau)
