"""Cutoff-pair initialization: uniform, spectral-shape driven, and mel-spaced.

All strategies return an (N, 2) array of normalized cutoff pairs with
0 <= a1 <= a2 <= 1, suitable as reformed-mode raw parameters (original
mode scales them back to Hz at bank construction).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .validation import check_finite, check_positive_float, check_positive_int


@dataclass(frozen=True)
class TabulatedCurve:
    """A sampled nonnegative magnitude curve over frequency in Hz."""

    freqs_hz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = check_finite(self.freqs_hz, "freqs_hz")
        v = check_finite(self.values, "values")
        if f.ndim != 1 or v.shape != f.shape or f.size < 2:
            raise InvalidParameterError(
                f"curve needs matching 1-D arrays of >= 2 points, got {f.shape} / {v.shape}"
            )
        if np.any(np.diff(f) <= 0):
            raise InvalidParameterError("curve frequencies must be strictly ascending")
        if f[0] < 0:
            raise InvalidParameterError("curve frequencies must be >= 0")
        if np.any(v < 0):
            raise InvalidParameterError("curve values must be >= 0")
        if not np.any(v > 0):
            raise InvalidParameterError("curve must have at least one positive value")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Pmf:
    """Discrete probability masses over ascending frequency support (Hz)."""

    support_hz: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        s = check_finite(self.support_hz, "support_hz")
        m = check_finite(self.mass, "mass")
        if s.ndim != 1 or m.shape != s.shape or s.size < 1:
            raise InvalidParameterError("pmf needs matching non-empty 1-D arrays")
        if s.size > 1 and np.any(np.diff(s) <= 0):
            raise InvalidParameterError("pmf support must be strictly ascending")
        if np.any(m < 0):
            raise InvalidParameterError("pmf masses must be >= 0")
        if abs(float(m.sum()) - 1.0) > 1e-12:
            raise InvalidParameterError(f"pmf masses must sum to 1, got {float(m.sum())}")
        object.__setattr__(self, "support_hz", s)
        object.__setattr__(self, "mass", m)


def init_uniform(n_filters, seed):
    """Independent U[0, 1] draws for every cutoff; pairs left unordered.

    The downstream clamp orders each pair, so no sorting happens here.
    """
    n = check_positive_int(n_filters, "n_filters")
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(n, 2))


def cfr_to_pmf(curve, n_bins, nyquist_hz=None):
    """Resample a magnitude curve onto n_bins points and normalize to a PMF.

    The support is a uniform grid over [0, nyquist_hz] (default: the curve's
    last frequency); values come from linear interpolation of the curve,
    clamped at its endpoints outside the tabulated range.
    """
    if not isinstance(curve, TabulatedCurve):
        raise InvalidParameterError("curve must be a TabulatedCurve")
    n = check_positive_int(n_bins, "n_bins")
    if n < 2:
        raise InvalidParameterError(f"n_bins must be >= 2, got {n}")
    nyq = float(curve.freqs_hz[-1]) if nyquist_hz is None else check_positive_float(
        nyquist_hz, "nyquist_hz")
    support = np.linspace(0.0, nyq, n)
    values = np.interp(support, curve.freqs_hz, curve.values)
    total = float(values.sum())
    if total <= 0:
        raise InvalidParameterError("curve interpolates to zero mass on the requested grid")
    return Pmf(support_hz=support, mass=values / total)


def sample_pmf(pmf, size, rng):
    """Inverse-CDF draws from a PMF; returns frequencies in Hz."""
    cdf = np.cumsum(pmf.mass)
    cdf[-1] = 1.0
    u = rng.uniform(0.0, 1.0, size=size)
    idx = np.searchsorted(cdf, u, side="left")
    return pmf.support_hz[idx]


def init_formant(n_filters, pmf, sample_rate, seed):
    """Draw cutoff pairs from a spectral-shape PMF; each pair sorted ascending.

    Both pair members are independent draws; frequencies are normalized by
    Nyquist. PMF support must not exceed Nyquist.
    """
    n = check_positive_int(n_filters, "n_filters")
    if not isinstance(pmf, Pmf):
        raise InvalidParameterError("pmf must be a Pmf")
    fs = check_positive_float(sample_rate, "sample_rate")
    nyq = fs / 2.0
    if float(pmf.support_hz[-1]) > nyq * (1 + 1e-12):
        raise InvalidParameterError(
            f"pmf support reaches {float(pmf.support_hz[-1])} Hz, above Nyquist {nyq} Hz"
        )
    rng = np.random.default_rng(seed)
    freqs = sample_pmf(pmf, (n, 2), rng)
    return np.sort(freqs / nyq, axis=1)


def mel_from_hz(freq_hz):
    """HTK mel scale: 2595 log10(1 + f / 700)."""
    f = check_finite(freq_hz, "freq_hz")
    if np.any(f < 0):
        raise InvalidParameterError("frequency must be >= 0")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def hz_from_mel(mel):
    """Inverse of mel_from_hz."""
    m = check_finite(mel, "mel")
    if np.any(m < 0):
        raise InvalidParameterError("mel value must be >= 0")
    out = 700.0 * (np.power(10.0, m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def init_mel(n_filters, sample_rate, f_min=0.0):
    """Contiguous mel-spaced bands: N + 1 edges from f_min to Nyquist.

    Edges are uniform on the mel scale; band i spans (edge_i, edge_{i+1}),
    normalized by Nyquist. Endpoints are pinned to exactly f_min and
    Nyquist so the first and last bands touch the range limits.
    """
    n = check_positive_int(n_filters, "n_filters")
    fs = check_positive_float(sample_rate, "sample_rate")
    nyq = fs / 2.0
    fmin = float(f_min)
    if not np.isfinite(fmin) or fmin < 0 or fmin >= nyq:
        raise InvalidParameterError(f"f_min must lie in [0, Nyquist), got {f_min!r}")
    mel_edges = np.linspace(mel_from_hz(fmin), mel_from_hz(nyq), n + 1)
    edges_hz = hz_from_mel(mel_edges)
    edges_hz[0] = fmin
    edges_hz[-1] = nyq
    if np.any(np.diff(edges_hz) <= 0):
        raise InvalidParameterError("mel edges degenerate for this N / f_min combination")
    alpha = edges_hz / nyq
    return np.stack([alpha[:-1], alpha[1:]], axis=1)


def synthetic_formant_curve(sample_rate=16000.0, n_points=257):
    """A synthetic speech-like magnitude curve with three low-frequency peaks.

    Gaussian bumps near 500, 1500, and 2500 Hz on a gentle downward tilt.
    Useful as a stand-in spectral shape when no measured curve is supplied.
    """
    fs = check_positive_float(sample_rate, "sample_rate")
    n = check_positive_int(n_points, "n_points")
    if n < 2:
        raise InvalidParameterError(f"n_points must be >= 2, got {n}")
    nyq = fs / 2.0
    f = np.linspace(0.0, nyq, n)
    peaks = ((500.0, 180.0, 1.0), (1500.0, 250.0, 0.7), (2500.0, 320.0, 0.45))
    v = 0.05 * np.exp(-f / (0.6 * nyq))
    for center, width, height in peaks:
        v = v + height * np.exp(-0.5 * ((f - center) / width) ** 2)
    return TabulatedCurve(freqs_hz=f, values=v)


def load_curve_csv(path):
    """Read a two-column CSV (freq_hz, magnitude); a non-numeric header row is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise InvalidParameterError(f"{path}:{lineno}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1:
                    continue
                raise InvalidParameterError(
                    f"{path}:{lineno}: non-numeric row {row!r}") from None
    if len(rows) < 2:
        raise InvalidParameterError(f"{path}: fewer than two data rows")
    data = np.asarray(rows, dtype=np.float64)
    return TabulatedCurve(freqs_hz=data[:, 0], values=data[:, 1])


def save_curve_csv(curve, path):
    """Write a TabulatedCurve as freq_hz,magnitude rows with a header."""
    if not isinstance(curve, TabulatedCurve):
        raise InvalidParameterError("curve must be a TabulatedCurve")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "magnitude"])
        for f, v in zip(curve.freqs_hz, curve.values):
            writer.writerow([repr(float(f)), repr(float(v))])
