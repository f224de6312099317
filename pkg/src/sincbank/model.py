"""Enhancer model: filterbank encoder, per-band mask, and one decoder.

Couples the trainable pieces (raw cutoffs, band gains, mask logits,
decoder parameters) and defines the staged forward pass the analytic
backward pass mirrors:

    frames -> [layer norm] -> band gain -> mask -> decode -> evaluation core

With normalization enabled the band gains are applied after the per-band
statistics, so encoding uses gain-free taps and beta scales the normalized
frames; without normalization beta rides inside the taps' assembly, which
is algebraically equivalent to scaling afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericFailureError
from .filter_core import Filterbank
from .pipeline import (
    LINEAR_COMBINATION,
    PINV,
    TRANSPOSED,
    DecoderSpec,
    FrameMatrix,
    convolve_bank,
    coverage_counts,
    filterbank_matrix,
    n_frames,
    overlap_add,
    pseudo_inverse,
    sigmoid,
    softmax,
)
from .validation import check_finite, check_positive_int, check_signal


def _require_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise NumericFailureError(f"non-finite values in stage '{stage}'")
    return arr


@dataclass
class EnhancerModel:
    """Filterbank + mask + decoder with a cached staged forward pass."""

    filterbank: Filterbank
    mask_logits: np.ndarray
    decoder: DecoderSpec
    hop: int = 1
    normalization: bool = False
    norm_eps: float = 1e-8

    def __post_init__(self):
        if not isinstance(self.filterbank, Filterbank):
            raise InvalidParameterError("filterbank must be a Filterbank")
        if not isinstance(self.decoder, DecoderSpec):
            raise InvalidParameterError("decoder must be a DecoderSpec")
        self.mask_logits = check_finite(self.mask_logits, "mask_logits")
        N = self.filterbank.n_filters
        L = self.filterbank.kernel_len
        if self.mask_logits.shape != (N,):
            raise InvalidParameterError(
                f"mask_logits must have shape ({N},), got {self.mask_logits.shape}")
        self.hop = check_positive_int(self.hop, "hop")
        if self.decoder.variant == LINEAR_COMBINATION:
            if self.hop != 1:
                raise InvalidParameterError(
                    "linear-combination decoder requires hop=1")
            if self.decoder.gamma.shape != (N,):
                raise InvalidParameterError(
                    f"gamma must have shape ({N},), got {self.decoder.gamma.shape}")
        if self.decoder.variant == TRANSPOSED and self.decoder.synth_taps.shape != (N, L):
            raise InvalidParameterError(
                f"synth_taps must have shape ({N}, {L}), "
                f"got {self.decoder.synth_taps.shape}")
        self.norm_eps = float(self.norm_eps)
        if not np.isfinite(self.norm_eps) or self.norm_eps <= 0:
            raise InvalidParameterError(f"norm_eps must be > 0, got {self.norm_eps!r}")

    @property
    def n_filters(self):
        return self.filterbank.n_filters

    @property
    def kernel_len(self):
        return self.filterbank.kernel_len

    @property
    def group_delay(self):
        return self.filterbank.kernel_len // 2

    def intrinsic_delay(self):
        """Net delay of the decoded signal against the input, in samples."""
        return self.group_delay if self.decoder.variant == LINEAR_COMBINATION else 0

    def copy(self):
        return EnhancerModel(
            filterbank=self.filterbank.copy(),
            mask_logits=self.mask_logits.copy(),
            decoder=self.decoder.copy(),
            hop=self.hop,
            normalization=self.normalization,
            norm_eps=self.norm_eps,
        )

    # parameter flattening -------------------------------------------------

    def param_slices(self):
        """Ordered (name, size) blocks of the flat trainable vector."""
        N = self.n_filters
        blocks = [("raw", 2 * N), ("beta", N), ("theta", N)]
        if self.decoder.variant == LINEAR_COMBINATION:
            blocks.append(("gamma", N))
        elif self.decoder.variant == TRANSPOSED:
            blocks.append(("synth", N * self.kernel_len))
        return blocks

    def param_vector(self):
        parts = [self.filterbank.raw.ravel(), self.filterbank.beta, self.mask_logits]
        if self.decoder.variant == LINEAR_COMBINATION:
            parts.append(self.decoder.gamma)
        elif self.decoder.variant == TRANSPOSED:
            parts.append(self.decoder.synth_taps.ravel())
        return np.concatenate(parts)

    def set_param_vector(self, vec):
        vec = check_finite(vec, "param vector")
        expected = sum(size for _, size in self.param_slices())
        if vec.shape != (expected,):
            raise InvalidParameterError(
                f"param vector must have shape ({expected},), got {vec.shape}")
        N = self.n_filters
        L = self.kernel_len
        pos = 0
        self.filterbank.raw = vec[pos : pos + 2 * N].reshape(N, 2).copy()
        pos += 2 * N
        self.filterbank.beta = vec[pos : pos + N].copy()
        pos += N
        self.mask_logits = vec[pos : pos + N].copy()
        pos += N
        if self.decoder.variant == LINEAR_COMBINATION:
            self.decoder.gamma = vec[pos : pos + N].copy()
        elif self.decoder.variant == TRANSPOSED:
            self.decoder.synth_taps = vec[pos : pos + N * L].reshape(N, L).copy()

    def param_names(self):
        """One label per flat parameter, for gradient-check reporting."""
        N = self.n_filters
        L = self.kernel_len
        names = []
        for i in range(N):
            names.extend([f"raw[{i}].a1", f"raw[{i}].a2"])
        names.extend([f"beta[{i}]" for i in range(N)])
        names.extend([f"theta[{i}]" for i in range(N)])
        if self.decoder.variant == LINEAR_COMBINATION:
            names.extend([f"gamma[{i}]" for i in range(N)])
        elif self.decoder.variant == TRANSPOSED:
            names.extend([f"synth[{i},{j}]" for i in range(N) for j in range(L)])
        return names

    # forward pass ---------------------------------------------------------

    def forward(self, x):
        """Run the staged pipeline and cache every intermediate.

        Returns a ForwardState whose `core` / `core_slice` give the
        delay-aligned comparison window used for losses and reported
        SI-SNR figures.
        """
        x = check_signal(x, "x", min_len=self.kernel_len)
        T = x.shape[0]
        L = self.kernel_len
        M = self.group_delay
        fb = self.filterbank
        taps_nobeta = fb.materialize(include_beta=False)
        if self.normalization:
            conv_taps = taps_nobeta
        else:
            conv_taps = fb.beta[:, None] * taps_nobeta
        fm0 = _require_finite(convolve_bank(x, conv_taps, self.hop), "encode")
        T_prime = fm0.shape[1]
        if self.normalization:
            if T_prime < 2:
                raise InvalidParameterError(
                    "layer normalization needs at least 2 frames")
            mu = fm0.mean(axis=1, keepdims=True)
            sigma_v = fm0.std(axis=1, keepdims=True)
            fm_norm = _require_finite((fm0 - mu) / (sigma_v + self.norm_eps),
                                      "normalize")
            fm_scaled = fb.beta[:, None] * fm_norm
        else:
            mu = sigma_v = fm_norm = None
            fm_scaled = fm0
        mask = sigmoid(self.mask_logits)
        fm_masked = _require_finite(mask[:, None] * fm_scaled, "mask")
        covered = (T_prime - 1) * self.hop + L

        if self.decoder.variant == LINEAR_COMBINATION:
            weights = softmax(self.decoder.gamma)
            mixed = weights @ fm_masked
            y = np.zeros(T)
            y[L - 1 : L - 1 + T_prime] = mixed
            core = mixed
            core_slice = slice(M, M + T_prime)
            pinv_mat = None
            counts = None
        else:
            if self.decoder.variant == TRANSPOSED:
                frame_contrib = self.decoder.synth_taps.T @ fm_masked
                y = overlap_add(frame_contrib, self.hop, T)
                pinv_mat = None
                counts = None
            else:
                F = filterbank_matrix(fb)
                pinv_mat = pseudo_inverse(F)
                frames_est = pinv_mat @ fm_masked
                y = overlap_add(frames_est, self.hop, T)
                counts = coverage_counts(L, self.hop, T_prime, T)
                covered_mask = counts > 0
                y[covered_mask] /= counts[covered_mask]
            weights = None
            lo = L - 1
            hi = covered - (L - 1)
            if hi - lo < 2:
                raise InvalidParameterError(
                    f"signal too short for evaluation: core [{lo}, {hi}) empty")
            core = y[lo:hi]
            core_slice = slice(lo, hi)
        _require_finite(y, "decode")
        return ForwardState(
            model=self, x=x, conv_taps=conv_taps, taps_nobeta=taps_nobeta,
            fm0=fm0, mu=mu, sigma=sigma_v, fm_norm=fm_norm, fm_scaled=fm_scaled,
            mask=mask, fm_masked=fm_masked, weights=weights, pinv_mat=pinv_mat,
            counts=counts, y=y, core=core, core_slice=core_slice,
        )

    def enhance(self, x):
        """Full-length enhanced signal (decoder output, source length)."""
        return self.forward(x).y


@dataclass
class ForwardState:
    """All intermediates of one forward pass, consumed by the backward pass."""

    model: EnhancerModel
    x: np.ndarray
    conv_taps: np.ndarray
    taps_nobeta: np.ndarray
    fm0: np.ndarray
    mu: np.ndarray | None
    sigma: np.ndarray | None
    fm_norm: np.ndarray | None
    fm_scaled: np.ndarray
    mask: np.ndarray
    fm_masked: np.ndarray
    weights: np.ndarray | None
    pinv_mat: np.ndarray | None
    counts: np.ndarray | None
    y: np.ndarray
    core: np.ndarray
    core_slice: slice

    @property
    def n_frames(self):
        return self.fm0.shape[1]

    def aligned_reference(self, target):
        """Slice of the reference aligned with `core` for this decoder."""
        target = check_signal(target, "target", min_len=self.x.shape[0])
        if target.shape != self.x.shape:
            raise InvalidParameterError(
                f"target length {target.shape[0]} != input length {self.x.shape[0]}")
        return target[self.core_slice]


def build_decoder(variant, filterbank):
    """Deterministic decoder initialization for a bank.

    transposed: synthesis taps start as the materialized analysis taps
    (their symmetric rows make this the exact adjoint); linear_combination:
    zero logits (uniform weights); pinv: parameter-free.
    """
    if variant == TRANSPOSED:
        return DecoderSpec(variant=variant, synth_taps=filterbank.materialize())
    if variant == LINEAR_COMBINATION:
        return DecoderSpec(variant=variant, gamma=np.zeros(filterbank.n_filters))
    if variant == PINV:
        return DecoderSpec(variant=variant)
    raise InvalidParameterError(f"unknown decoder variant {variant!r}")
