"""Interpretability diagnostics for a filterbank.

Three read-only views: the cumulative frequency response (pointwise sum of
every filter's linear magnitude response, beta and window included), a
shape census over the classify_filter categories plus a zero-gain count,
and sorted cutoff/gain tables in Hz. All exports are CSV; plotting is out
of scope.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .filter_core import (
    BAND_PASS,
    DEGENERATE,
    HIGH_PASS,
    LOW_PASS,
    Filterbank,
    classify_filter,
)
from .validation import as_float_array, check_finite

CFR_DEFAULT_GRID = 2048
ZERO_GAIN_THRESHOLD = 1e-6
SORT_KEYS = ("lower", "upper")


@dataclass(frozen=True)
class CfrCurve:
    """Summed linear magnitude response on a uniform Hz grid over [0, fs/2]."""

    freqs: np.ndarray
    magnitude: np.ndarray

    def __post_init__(self):
        freqs = as_float_array(self.freqs, "freqs")
        magnitude = check_finite(self.magnitude, "magnitude")
        if freqs.ndim != 1 or freqs.size < 2 or magnitude.shape != freqs.shape:
            raise InvalidParameterError(
                f"freqs/magnitude must be matching 1-D grids, got shapes "
                f"{freqs.shape} and {magnitude.shape}")
        steps = np.diff(freqs)
        if not (np.all(steps > 0) and np.allclose(steps, steps[0], rtol=1e-9)):
            raise InvalidParameterError("freqs must be uniform and ascending")
        if np.any(magnitude < 0):
            raise InvalidParameterError("magnitude must be nonnegative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "magnitude", magnitude)


@dataclass(frozen=True)
class FilterCensus:
    low_pass: int
    high_pass: int
    band_pass: int
    degenerate: int
    zero_gain: int

    @property
    def total(self):
        return self.low_pass + self.high_pass + self.band_pass + self.degenerate


def cumulative_frequency_response(fb, n_grid=CFR_DEFAULT_GRID):
    """Pointwise sum over the bank of per-filter magnitude responses."""
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    if not isinstance(n_grid, (int, np.integer)) or int(n_grid) < 16:
        raise InvalidParameterError(f"n_grid must be an integer >= 16, got {n_grid!r}")
    n_grid = int(n_grid)
    taps = fb.materialize(include_beta=True)
    omega = np.linspace(0.0, np.pi, n_grid)
    phases = np.exp(-1j * np.outer(omega, np.arange(fb.kernel_len)))
    magnitude = np.abs(phases @ taps.T).sum(axis=1)
    freqs = omega / np.pi * fb.nyquist_hz
    return CfrCurve(freqs=freqs, magnitude=magnitude)


def filter_census(fb, eps=0.01):
    """Count filters per shape class; zero-gain counts beta below 1e-6."""
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    bands = fb.effective_bands()
    counts = {LOW_PASS: 0, HIGH_PASS: 0, BAND_PASS: 0, DEGENERATE: 0}
    for a1, a2 in bands:
        counts[classify_filter(a1, a2, eps=eps)] += 1
    zero_gain = int(np.count_nonzero(fb.beta < ZERO_GAIN_THRESHOLD))
    return FilterCensus(
        low_pass=counts[LOW_PASS],
        high_pass=counts[HIGH_PASS],
        band_pass=counts[BAND_PASS],
        degenerate=counts[DEGENERATE],
        zero_gain=zero_gain,
    )


def export_cutoffs_and_gains(fb, sort_key="lower"):
    """Rows (index, f_low_hz, f_high_hz, beta) sorted by the chosen cutoff.

    Ties preserve original filter index order (stable sort).
    """
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    if sort_key not in SORT_KEYS:
        raise InvalidParameterError(
            f"sort_key must be one of {SORT_KEYS}, got {sort_key!r}")
    bands = fb.effective_bands()
    hz = bands * fb.nyquist_hz
    column = hz[:, 0] if sort_key == "lower" else hz[:, 1]
    order = np.argsort(column, kind="stable")
    return [
        (int(i), float(hz[i, 0]), float(hz[i, 1]), float(fb.beta[i]))
        for i in order
    ]


def save_cfr_csv(curve, path):
    if not isinstance(curve, CfrCurve):
        raise InvalidParameterError("curve must be a CfrCurve")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "magnitude"])
        for f, m in zip(curve.freqs, curve.magnitude):
            writer.writerow([repr(float(f)), repr(float(m))])


def save_cutoffs_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "f_low_hz", "f_high_hz", "beta"])
        for index, f_low, f_high, beta in rows:
            writer.writerow([index, repr(f_low), repr(f_high), repr(beta)])


def load_cutoffs_csv(path):
    """Read back an export_cutoffs_and_gains CSV; repr floats are lossless."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "f_low_hz", "f_high_hz", "beta"]:
            raise InvalidParameterError(f"unrecognized cutoff table header: {header!r}")
        for record in reader:
            if len(record) != 4:
                raise InvalidParameterError(f"malformed cutoff table row: {record!r}")
            rows.append((int(record[0]), float(record[1]),
                         float(record[2]), float(record[3])))
    return rows
