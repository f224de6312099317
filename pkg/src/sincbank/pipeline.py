"""Analysis/synthesis pipeline: framed convolution, masking, and decoders.

Encoding is a valid-mode convolution sampled every hop samples:

    fm[i, t] = sum_l x[t * hop + (L - 1) - l] * h_i[l]

so each row is filter i's output at the frame positions and the number of
frames is T' = floor((T - L) / hop) + 1. All three decoders map a masked
frame matrix back to a time signal of the source length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    InvalidParameterError,
    SingularOperatorError,
    UnsupportedConfigurationError,
)
from .filter_core import Filterbank
from .validation import check_finite, check_positive_int, check_signal

TRANSPOSED = "transposed"
LINEAR_COMBINATION = "linear_combination"
PINV = "pinv"
DECODER_VARIANTS = (TRANSPOSED, LINEAR_COMBINATION, PINV)

PINV_RCOND = 1e-10


def n_frames(source_len, kernel_len, hop):
    """T' = floor((T - L) / hop) + 1 for a valid-mode framed convolution."""
    if source_len < kernel_len:
        raise InvalidParameterError(
            f"signal of {source_len} samples is shorter than the kernel ({kernel_len})"
        )
    return (source_len - kernel_len) // hop + 1


@dataclass
class FrameMatrix:
    """Filterbank output frames plus the metadata needed to invert them."""

    data: np.ndarray
    hop: int
    kernel_len: int
    source_len: int

    def __post_init__(self):
        self.data = check_finite(self.data, "frame data")
        if self.data.ndim != 2:
            raise InvalidParameterError(f"frame data must be 2-D, got {self.data.shape}")
        self.hop = check_positive_int(self.hop, "hop")
        self.kernel_len = check_positive_int(self.kernel_len, "kernel_len")
        self.source_len = check_positive_int(self.source_len, "source_len")
        expected = n_frames(self.source_len, self.kernel_len, self.hop)
        if self.data.shape[1] != expected:
            raise InvalidParameterError(
                f"frame count {self.data.shape[1]} inconsistent with "
                f"source_len={self.source_len}, L={self.kernel_len}, hop={self.hop} "
                f"(expected {expected})"
            )

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_frames(self):
        return self.data.shape[1]

    @property
    def covered_len(self):
        """Samples the frames span: (T' - 1) * hop + L."""
        return (self.n_frames - 1) * self.hop + self.kernel_len

    def with_data(self, data):
        return FrameMatrix(data=data, hop=self.hop, kernel_len=self.kernel_len,
                           source_len=self.source_len)


@dataclass
class Mask:
    """Per-channel gains in [0, 1], broadcast over frames."""

    data: np.ndarray

    def __post_init__(self):
        self.data = check_finite(self.data, "mask")
        if self.data.ndim not in (1, 2):
            raise InvalidParameterError(f"mask must be 1-D or 2-D, got {self.data.shape}")
        if np.any(self.data < 0) or np.any(self.data > 1):
            raise InvalidParameterError("mask values must lie in [0, 1]")


@dataclass
class DecoderSpec:
    """Decoder variant plus exactly the parameters that variant uses."""

    variant: str
    synth_taps: np.ndarray | None = None
    gamma: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in DECODER_VARIANTS:
            raise InvalidParameterError(
                f"decoder variant must be one of {DECODER_VARIANTS}, got {self.variant!r}"
            )
        if self.variant == TRANSPOSED:
            if self.synth_taps is None or self.gamma is not None:
                raise InvalidParameterError("transposed decoder takes synth_taps only")
            self.synth_taps = check_finite(self.synth_taps, "synth_taps")
            if self.synth_taps.ndim != 2:
                raise InvalidParameterError(
                    f"synth_taps must be (N, L), got {self.synth_taps.shape}")
        elif self.variant == LINEAR_COMBINATION:
            if self.gamma is None or self.synth_taps is not None:
                raise InvalidParameterError("linear-combination decoder takes gamma only")
            self.gamma = check_finite(self.gamma, "gamma")
            if self.gamma.ndim != 1:
                raise InvalidParameterError(f"gamma must be 1-D, got {self.gamma.shape}")
        else:
            if self.synth_taps is not None or self.gamma is not None:
                raise InvalidParameterError("pinv decoder has no trainable parameters")

    def copy(self):
        return DecoderSpec(
            variant=self.variant,
            synth_taps=None if self.synth_taps is None else self.synth_taps.copy(),
            gamma=None if self.gamma is None else self.gamma.copy(),
        )


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    """Stable softmax; output sums to 1."""
    z = np.asarray(z, dtype=np.float64)
    shifted = np.exp(z - z.max())
    return shifted / shifted.sum()


def frame_signal(x, kernel_len, hop):
    """Frame a signal into overlapping windows: shape (T', L)."""
    T = x.shape[0]
    n_frames(T, kernel_len, hop)
    return sliding_window_view(x, kernel_len)[::hop]


def convolve_bank(x, taps, hop):
    """Valid-mode convolution of x with every row of taps, sampled every hop.

    Returns (N, T'). Implemented as a frame/matmul product so the result is
    deterministic for fixed inputs.
    """
    frames = frame_signal(x, taps.shape[1], hop)
    return (frames @ taps[:, ::-1].T).T


def encode(x, fb, hop=1):
    """Run a signal through the materialized filterbank.

    Parameters
    ----------
    x : 1-D signal, length >= the bank's kernel length
    fb : Filterbank
    hop : frame advance in samples

    Returns a FrameMatrix with one row per filter.
    """
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    hop = check_positive_int(hop, "hop")
    x = check_signal(x, "x", min_len=fb.kernel_len)
    taps = fb.materialize(include_beta=True)
    data = convolve_bank(x, taps, hop)
    return FrameMatrix(data=data, hop=hop, kernel_len=fb.kernel_len, source_len=x.shape[0])


def layer_normalize(fm, eps=1e-8):
    """Zero-mean, unit-variance normalization of each channel over frames.

    Each row is mapped to (row - mean) / (std + eps); constant rows map to
    zeros. Needs at least 2 frames for the statistics to mean anything.
    """
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    if fm.n_frames < 2:
        raise InvalidParameterError("layer normalization needs at least 2 frames")
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0:
        raise InvalidParameterError(f"eps must be > 0, got {eps!r}")
    mu = fm.data.mean(axis=1, keepdims=True)
    sigma = fm.data.std(axis=1, keepdims=True)
    return fm.with_data((fm.data - mu) / (sigma + eps))


def estimate_mask(fm, theta):
    """Sigmoid of per-channel logits, one gain per filter."""
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    theta = check_finite(theta, "theta")
    if theta.shape != (fm.n_channels,):
        raise InvalidParameterError(
            f"theta must have shape ({fm.n_channels},), got {theta.shape}")
    return Mask(data=sigmoid(theta))


def apply_mask(fm, mask):
    """Multiply each channel (or entry) of the frame matrix by its mask gain."""
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    if not isinstance(mask, Mask):
        raise InvalidParameterError("mask must be a Mask")
    m = mask.data
    if m.ndim == 1:
        if m.shape[0] != fm.n_channels:
            raise InvalidParameterError(
                f"mask length {m.shape[0]} != channel count {fm.n_channels}")
        return fm.with_data(fm.data * m[:, None])
    if m.shape != fm.data.shape:
        raise InvalidParameterError(
            f"mask shape {m.shape} != frame shape {fm.data.shape}")
    return fm.with_data(fm.data * m)


def overlap_add(frame_contrib, hop, out_len):
    """Scatter per-frame length-L contributions onto a signal grid.

    frame_contrib has shape (L, T'); column t lands at offset t * hop.
    """
    L, T_prime = frame_contrib.shape
    covered = (T_prime - 1) * hop + L
    if covered > out_len:
        raise InvalidParameterError(
            f"frames cover {covered} samples but output length is {out_len}")
    out = np.zeros(out_len)
    for s in range(L):
        out[s : s + hop * T_prime : hop] += frame_contrib[s]
    return out


def coverage_counts(kernel_len, hop, n_frames_, out_len):
    """How many frames touch each output sample under overlap-add."""
    ones = np.ones((kernel_len, n_frames_))
    return overlap_add(ones, hop, out_len)


def decode_transposed(fm, synth_taps):
    """Transposed-convolution decoder with learnable synthesis taps.

    Channel i of frame t contributes fm[i, t] * synth_taps[i] starting at
    offset t * hop; contributions are summed over channels and frames.
    """
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    synth = check_finite(synth_taps, "synth_taps")
    if synth.shape != (fm.n_channels, fm.kernel_len):
        raise InvalidParameterError(
            f"synth_taps must have shape ({fm.n_channels}, {fm.kernel_len}), "
            f"got {synth.shape}")
    frame_contrib = synth.T @ fm.data
    return overlap_add(frame_contrib, fm.hop, fm.source_len)


def decode_linear_combination(fm, gamma):
    """Sum channels under softmax weights; defined for hop=1 only.

    The combined sequence is placed at offset L - 1 so the end-to-end path
    (valid-mode encode followed by this decoder) has a net delay of exactly
    M = (L - 1) / 2 samples for linear-phase banks.
    """
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    if fm.hop != 1:
        raise UnsupportedConfigurationError(
            f"linear-combination decoding requires hop=1, got hop={fm.hop}")
    g = check_finite(gamma, "gamma")
    if g.shape != (fm.n_channels,):
        raise InvalidParameterError(
            f"gamma must have shape ({fm.n_channels},), got {g.shape}")
    weights = softmax(g)
    mixed = weights @ fm.data
    out = np.zeros(fm.source_len)
    out[fm.kernel_len - 1 : fm.kernel_len - 1 + fm.n_frames] = mixed
    return out


def filterbank_matrix(fb):
    """Bank taps time-reversed to match encode's kernel orientation: (N, L)."""
    return fb.materialize(include_beta=True)[:, ::-1]


def pseudo_inverse(matrix, rcond=PINV_RCOND):
    """Moore-Penrose pseudo-inverse via SVD with relative truncation.

    Singular values below rcond * sigma_max are discarded. An all-zero
    matrix has no usable singular values and raises.
    """
    m = check_finite(matrix, "matrix")
    if m.ndim != 2 or m.size == 0:
        raise InvalidParameterError(f"matrix must be non-empty 2-D, got {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        raise SingularOperatorError("matrix has no nonzero singular values")
    keep = s > rcond * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def decode_pinv(fm, fb):
    """Parameter-free decoder: least-squares frame reconstruction + overlap-add.

    Frames are estimated as F+ @ fm with F the time-reversed bank taps, then
    overlap-added and divided by the per-sample coverage count so constant
    coverage regions keep unit scale.
    """
    if not isinstance(fm, FrameMatrix):
        raise InvalidParameterError("fm must be a FrameMatrix")
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    if fb.n_filters != fm.n_channels or fb.kernel_len != fm.kernel_len:
        raise InvalidParameterError(
            f"bank ({fb.n_filters} x {fb.kernel_len}) inconsistent with frames "
            f"({fm.n_channels} x L={fm.kernel_len})")
    F = filterbank_matrix(fb)
    P = pseudo_inverse(F)
    # rows of the frame estimate are in-frame offsets j, already forward order
    frames_est = P @ fm.data
    out = overlap_add(frames_est, fm.hop, fm.source_len)
    counts = coverage_counts(fm.kernel_len, fm.hop, fm.n_frames, fm.source_len)
    covered = counts > 0
    out[covered] /= counts[covered]
    return out


@dataclass(frozen=True)
class ParameterCounts:
    """Trainable parameter tally for one encoder/decoder configuration."""

    encoder: int
    decoder: int
    dense_encoder: int | None = None

    @property
    def total(self):
        return self.encoder + self.decoder

    @property
    def encoder_reduction(self):
        if not self.dense_encoder:
            return None
        return 1.0 - self.encoder / self.dense_encoder


def parameter_count(fb, decoder, dense_equivalent=True):
    """Count trainable parameters: 3 per filter (two cutoffs + gain) plus
    the decoder's own, with the N * L dense-filterbank figure for contrast."""
    if not isinstance(fb, Filterbank):
        raise InvalidParameterError("fb must be a Filterbank")
    if not isinstance(decoder, DecoderSpec):
        raise InvalidParameterError("decoder must be a DecoderSpec")
    N = fb.n_filters
    L = fb.kernel_len
    if decoder.variant == TRANSPOSED:
        dec = int(decoder.synth_taps.size)
    elif decoder.variant == LINEAR_COMBINATION:
        dec = int(decoder.gamma.size)
    else:
        dec = 0
    dense = N * L if dense_equivalent else None
    return ParameterCounts(encoder=3 * N, decoder=dec, dense_encoder=dense)
