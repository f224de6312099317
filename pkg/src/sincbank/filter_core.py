"""Windowed-sinc FIR band-pass construction with trainable cutoff pairs.

Cutoffs are expressed as fractions of Nyquist, so a band (a1, a2) with
0 <= a1 <= a2 <= 1 covers digital frequencies [a1*pi, a2*pi] rad/sample.
All filters share an odd kernel length L and are linear-phase with group
delay M = (L - 1) // 2 samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .validation import check_finite, check_odd_kernel

REFORMED = "reformed"
ORIGINAL = "original"
MODES = (REFORMED, ORIGINAL)

LOW_PASS = "low_pass"
HIGH_PASS = "high_pass"
BAND_PASS = "band_pass"
DEGENERATE = "degenerate"


def normalize_cutoffs(raw1, raw2):
    """Map unconstrained raw cutoffs to an ordered pair in [0, 1].

    Applies abs, orders the pair, then clamps each value at 1 from above:
    a1 = min(min(|r1|, |r2|), 1), a2 = min(max(|r1|, |r2|), 1). Works
    elementwise on arrays; scalars in, scalars out.
    """
    r1 = np.abs(check_finite(raw1, "raw1"))
    r2 = np.abs(check_finite(raw2, "raw2"))
    a1 = np.minimum(np.minimum(r1, r2), 1.0)
    a2 = np.minimum(np.maximum(r1, r2), 1.0)
    if a1.ndim == 0:
        return float(a1), float(a2)
    return a1, a2


def sort_abs_cutoffs(raw1, raw2):
    """Order |raw| without the upper clamp (original-mode materialization)."""
    r1 = np.abs(check_finite(raw1, "raw1"))
    r2 = np.abs(check_finite(raw2, "raw2"))
    a1 = np.minimum(r1, r2)
    a2 = np.maximum(r1, r2)
    if a1.ndim == 0:
        return float(a1), float(a2)
    return a1, a2


def hamming_window(kernel_len):
    """Symmetric Hamming window w[n] = 0.54 - 0.46 cos(2 pi n / (L - 1)).

    Built by mirroring the first half so w[M + k] == w[M - k] holds exactly
    in floating point, which keeps assembled filters exactly linear-phase.
    """
    L = check_odd_kernel(kernel_len)
    M = L // 2
    half = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(M + 1) / (L - 1))
    return np.concatenate([half, half[:-1][::-1]])


def ideal_band_taps(a1, a2, kernel_len):
    """Unwindowed ideal band-pass taps for normalized cutoffs (a1, a2).

    h[n] = a2 * sinc(a2 (n - M)) - a1 * sinc(a1 (n - M)) with the
    normalized sinc (sinc(0) = 1), so the center tap is exactly a2 - a1.
    Accepts a1, a2 as scalars or equal-length vectors; vectors produce a
    (N, L) stack. Cutoffs above 1 are accepted and alias naturally.
    """
    L = check_odd_kernel(kernel_len)
    a1v = check_finite(a1, "a1")
    a2v = check_finite(a2, "a2")
    if np.any(a1v < 0) or np.any(a2v < 0) or np.any(a2v < a1v):
        raise InvalidParameterError("cutoffs must satisfy 0 <= a1 <= a2")
    d = np.arange(L, dtype=np.float64) - (L // 2)
    if a1v.ndim == 0:
        return a2v * np.sinc(a2v * d) - a1v * np.sinc(a1v * d)
    a1c = a1v[:, None]
    a2c = a2v[:, None]
    return a2c * np.sinc(a2c * d) - a1c * np.sinc(a1c * d)


def windowed_band_taps(a1, a2, beta, kernel_len):
    """beta * ideal_band_taps * hamming_window, vectorized like ideal_band_taps."""
    taps = ideal_band_taps(a1, a2, kernel_len) * hamming_window(kernel_len)
    b = check_finite(beta, "beta")
    if taps.ndim == 1:
        return float(b) * taps
    return np.asarray(b)[:, None] * taps


@dataclass(frozen=True)
class FilterSpec:
    """One realized filter: effective normalized band, gain, and taps."""

    band: tuple
    beta: float
    taps: np.ndarray
    mode: str = REFORMED

    @property
    def kernel_len(self):
        return self.taps.shape[0]


def assemble_filter(raw1, raw2, beta, kernel_len, mode=REFORMED):
    """Realize one filter from raw parameters.

    In reformed mode the raw pair goes through normalize_cutoffs; in
    original mode through sort_abs_cutoffs (no upper clamp, bands above
    Nyquist alias naturally). beta must be finite and >= 0.
    """
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
    b = float(check_finite(beta, "beta"))
    if b < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {b}")
    if mode == REFORMED:
        a1, a2 = normalize_cutoffs(float(raw1), float(raw2))
    else:
        a1, a2 = sort_abs_cutoffs(float(raw1), float(raw2))
    taps = windowed_band_taps(a1, a2, b, kernel_len)
    return FilterSpec(band=(a1, a2), beta=b, taps=taps, mode=mode)


@dataclass
class Filterbank:
    """A bank of N trainable band-pass filters sharing one kernel length.

    raw holds the unconstrained per-filter cutoff pair (N, 2). In reformed
    mode raw values are dimensionless and materialize through the clamp; in
    original mode they are absolute frequencies in Hz, materialized as
    |raw| / (sample_rate / 2), ordered, without the upper clamp.
    """

    raw: np.ndarray
    beta: np.ndarray
    sample_rate: float
    kernel_len: int
    mode: str = REFORMED

    def __post_init__(self):
        self.raw = check_finite(self.raw, "raw")
        if self.raw.ndim != 2 or self.raw.shape[1] != 2 or self.raw.shape[0] < 1:
            raise InvalidParameterError(
                f"raw must have shape (N, 2) with N >= 1, got {self.raw.shape}"
            )
        self.beta = check_finite(self.beta, "beta")
        if self.beta.shape != (self.raw.shape[0],):
            raise InvalidParameterError(
                f"beta must have shape ({self.raw.shape[0]},), got {self.beta.shape}"
            )
        if np.any(self.beta < 0):
            raise InvalidParameterError("beta must be >= 0")
        self.sample_rate = float(self.sample_rate)
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise InvalidParameterError(f"sample_rate must be > 0, got {self.sample_rate}")
        self.kernel_len = check_odd_kernel(self.kernel_len)
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def n_filters(self):
        return self.raw.shape[0]

    @property
    def nyquist_hz(self):
        return self.sample_rate / 2.0

    def effective_bands(self):
        """Normalized (a1, a2) per filter after the mode's materialization map."""
        if self.mode == REFORMED:
            a1, a2 = normalize_cutoffs(self.raw[:, 0], self.raw[:, 1])
        else:
            a1, a2 = sort_abs_cutoffs(
                self.raw[:, 0] / self.nyquist_hz, self.raw[:, 1] / self.nyquist_hz
            )
        return np.stack([a1, a2], axis=1)

    def materialize(self, include_beta=True):
        """Tap matrix (N, L) for the whole bank."""
        bands = self.effective_bands()
        beta = self.beta if include_beta else np.ones(self.n_filters)
        return windowed_band_taps(bands[:, 0], bands[:, 1], beta, self.kernel_len)

    def filter_spec(self, index):
        bands = self.effective_bands()
        a1, a2 = bands[index]
        taps = windowed_band_taps(a1, a2, float(self.beta[index]), self.kernel_len)
        return FilterSpec(band=(float(a1), float(a2)), beta=float(self.beta[index]),
                          taps=taps, mode=self.mode)

    def copy(self):
        return Filterbank(
            raw=self.raw.copy(), beta=self.beta.copy(),
            sample_rate=self.sample_rate, kernel_len=self.kernel_len, mode=self.mode,
        )


def frequency_response(taps, n_grid=2048):
    """Magnitude response on a uniform grid of n_grid points over [0, pi].

    Returns (omega, magnitude), both shape (n_grid,). Direct evaluation of
    |sum_n taps[n] e^{-j omega n}|.
    """
    t = check_finite(taps, "taps")
    if t.ndim != 1 or t.size < 1:
        raise InvalidParameterError(f"taps must be a non-empty 1-D array, got shape {t.shape}")
    if not isinstance(n_grid, (int, np.integer)) or int(n_grid) < 2:
        raise InvalidParameterError(f"n_grid must be an integer >= 2, got {n_grid!r}")
    omega = np.linspace(0.0, np.pi, int(n_grid))
    phases = np.exp(-1j * np.outer(omega, np.arange(t.size)))
    return omega, np.abs(phases @ t)


def classify_filter(a1, a2, eps=0.01):
    """Coarse shape class of a normalized band.

    Degenerate wins for all-pass bands (both edges at the limits) and for
    bandwidth below eps; otherwise a1 < eps is low-pass, a2 > 1 - eps is
    high-pass, and the rest are band-pass.
    """
    e = float(eps)
    if not 0 < e < 0.5:
        raise InvalidParameterError(f"eps must lie in (0, 0.5), got {eps!r}")
    lo = float(a1)
    hi = float(a2)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi < lo:
        raise InvalidParameterError(f"need 0 <= a1 <= a2, got ({a1!r}, {a2!r})")
    at_dc = lo < e
    at_nyquist = hi > 1.0 - e
    if at_dc and at_nyquist:
        return DEGENERATE
    if hi - lo < e:
        return DEGENERATE
    if at_dc:
        return LOW_PASS
    if at_nyquist:
        return HIGH_PASS
    return BAND_PASS
