"""Analytic reverse-mode gradients for the enhancer, stage by stage.

No autodiff framework: each pipeline stage has a hand-derived adjoint and
`backward` chains them in reverse order. The negative SI-SNR of the
delay-aligned evaluation core is the loss throughout.

The pinv decoder's reconstruction matrix is treated as a constant (no
gradient through the SVD), so its cutoff/gain gradients are approximate;
mask-logit gradients remain exact there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidParameterError, NumericFailureError
from .filter_core import ORIGINAL, REFORMED, hamming_window
from .losses import DEFAULT_EPS, si_snr_with_grad
from .model import EnhancerModel, ForwardState
from .pipeline import LINEAR_COMBINATION, PINV, TRANSPOSED


@dataclass
class GradientSet:
    """Gradients matching EnhancerModel's trainable blocks."""

    d_raw: np.ndarray
    d_beta: np.ndarray
    d_theta: np.ndarray
    d_gamma: np.ndarray | None = None
    d_synth: np.ndarray | None = None

    def to_vector(self):
        parts = [self.d_raw.ravel(), self.d_beta, self.d_theta]
        if self.d_gamma is not None:
            parts.append(self.d_gamma)
        if self.d_synth is not None:
            parts.append(self.d_synth.ravel())
        return np.concatenate(parts)


def taps_grad_wrt_cutoffs(a1, a2, kernel_len):
    """d(ideal taps)/d a1 and /d a2 on the tap grid.

    With d = n - M: d h / d a2 = cos(pi a2 d), d h / d a1 = -cos(pi a1 d);
    the d = 0 limit (1 and -1) falls out of the same expression. Accepts
    scalars or vectors like ideal_band_taps.
    """
    a1v = np.asarray(a1, dtype=np.float64)
    a2v = np.asarray(a2, dtype=np.float64)
    d = np.arange(kernel_len, dtype=np.float64) - (kernel_len // 2)
    if a1v.ndim == 0:
        return -np.cos(np.pi * a1v * d), np.cos(np.pi * a2v * d)
    return -np.cos(np.pi * a1v[:, None] * d), np.cos(np.pi * a2v[:, None] * d)


def sort_abs_backward(raw1, raw2, g_low, g_high, clamp=True):
    """Adjoint of abs + pairwise sort (+ optional clamp at 1).

    g_low / g_high are gradients with respect to the ordered outputs.
    Ties route both selections to raw1. The clamp's subgradient is 0 at
    |r| = 1 and sign(0) = 0 at the origin.
    """
    r1 = np.asarray(raw1, dtype=np.float64)
    r2 = np.asarray(raw2, dtype=np.float64)
    gl = np.asarray(g_low, dtype=np.float64)
    gh = np.asarray(g_high, dtype=np.float64)
    u1 = np.abs(r1)
    u2 = np.abs(r2)
    low_from_r1 = u1 <= u2
    high_from_r1 = u1 >= u2
    if clamp:
        s1 = np.where(u1 < 1.0, np.sign(r1), 0.0)
        s2 = np.where(u2 < 1.0, np.sign(r2), 0.0)
    else:
        s1 = np.sign(r1)
        s2 = np.sign(r2)
    gr1 = (np.where(low_from_r1, gl, 0.0) + np.where(high_from_r1, gh, 0.0)) * s1
    gr2 = (np.where(~low_from_r1, gl, 0.0) + np.where(~high_from_r1, gh, 0.0)) * s2
    if np.ndim(raw1) == 0 and np.ndim(raw2) == 0:
        return float(gr1), float(gr2)
    return gr1, gr2


def clamp_backward(raw1, raw2, g_low, g_high):
    """Adjoint of normalize_cutoffs (abs, sort, clamp at 1)."""
    return sort_abs_backward(raw1, raw2, g_low, g_high, clamp=True)


def _gather_frames(g_signal, kernel_len, hop, t_prime):
    covered = (t_prime - 1) * hop + kernel_len
    return sliding_window_view(g_signal[:covered], kernel_len)[::hop].T


def backward(model, x, target, eps=DEFAULT_EPS, state=None):
    """Loss and gradients for one (input, target) pair.

    Returns (loss, GradientSet). loss = -si_snr(core, aligned target).
    Pass a ForwardState from model.forward(x) to reuse its intermediates.
    """
    if not isinstance(model, EnhancerModel):
        raise InvalidParameterError("model must be an EnhancerModel")
    if state is None:
        state = model.forward(x)
    elif not isinstance(state, ForwardState):
        raise InvalidParameterError("state must come from model.forward")
    ref_core = state.aligned_reference(target)
    value, g_core = si_snr_with_grad(state.core, ref_core, eps)
    loss = -value
    g_core = -g_core

    fb = model.filterbank
    N = fb.n_filters
    L = model.kernel_len
    T_prime = state.n_frames
    hop = model.hop

    # decoder stage
    d_gamma = None
    d_synth = None
    if model.decoder.variant == LINEAR_COMBINATION:
        g_masked = state.weights[:, None] * g_core[None, :]
        g_weights = state.fm_masked @ g_core
        w = state.weights
        d_gamma = w * (g_weights - float(w @ g_weights))
    else:
        g_y = np.zeros(state.y.shape[0])
        g_y[state.core_slice] = g_core
        if model.decoder.variant == PINV:
            covered = state.counts > 0
            g_y = np.where(covered, g_y / np.where(covered, state.counts, 1.0), 0.0)
        G = _gather_frames(g_y, L, hop, T_prime)
        if model.decoder.variant == TRANSPOSED:
            d_synth = state.fm_masked @ G.T
            g_masked = model.decoder.synth_taps @ G
        else:
            g_masked = state.pinv_mat.T @ G

    # mask stage
    mask = state.mask
    g_scaled = mask[:, None] * g_masked
    d_theta = (g_masked * state.fm_scaled).sum(axis=1) * mask * (1.0 - mask)

    # band-gain / normalization stage
    if model.normalization:
        d_beta = (g_scaled * state.fm_norm).sum(axis=1)
        g_norm = fb.beta[:, None] * g_scaled
        n = T_prime
        centered = state.fm0 - state.mu
        denom = state.sigma + model.norm_eps
        proj = (g_norm * centered).sum(axis=1, keepdims=True)
        sigma_safe = np.where(state.sigma > 0, state.sigma, 1.0)
        correction = np.where(
            state.sigma > 0,
            proj * centered / (n * sigma_safe * denom**2),
            0.0,
        )
        g_fm0 = (g_norm - g_norm.mean(axis=1, keepdims=True)) / denom - correction
    else:
        g_fm0 = g_scaled

    # convolution stage: fm0 = frames @ rev(conv_taps).T
    frames = sliding_window_view(x, L)[::hop]
    d_conv_taps = (g_fm0 @ frames)[:, ::-1]

    # taps stage
    window = hamming_window(L)
    if model.normalization:
        d_taps_nobeta = d_conv_taps
    else:
        d_beta = (d_conv_taps * state.taps_nobeta).sum(axis=1)
        d_taps_nobeta = fb.beta[:, None] * d_conv_taps
    d_ideal = d_taps_nobeta * window

    # cutoff stage
    bands = fb.effective_bands()
    da1_taps, da2_taps = taps_grad_wrt_cutoffs(bands[:, 0], bands[:, 1], L)
    g_low = (d_ideal * da1_taps).sum(axis=1)
    g_high = (d_ideal * da2_taps).sum(axis=1)
    if fb.mode == REFORMED:
        gr1, gr2 = sort_abs_backward(fb.raw[:, 0], fb.raw[:, 1], g_low, g_high,
                                     clamp=True)
    else:
        gr1, gr2 = sort_abs_backward(fb.raw[:, 0], fb.raw[:, 1], g_low, g_high,
                                     clamp=False)
        gr1 = gr1 / fb.nyquist_hz
        gr2 = gr2 / fb.nyquist_hz
    d_raw = np.stack([gr1, gr2], axis=1)

    grads = GradientSet(d_raw=d_raw, d_beta=d_beta, d_theta=d_theta,
                        d_gamma=d_gamma, d_synth=d_synth)
    vec = grads.to_vector()
    if not np.all(np.isfinite(vec)) or not np.isfinite(loss):
        raise NumericFailureError("non-finite values in stage 'gradients'")
    return loss, grads


def loss_value(model, x, target, eps=DEFAULT_EPS):
    """Forward-only loss, used by the finite-difference oracle."""
    state = model.forward(x)
    ref_core = state.aligned_reference(target)
    value, _ = si_snr_with_grad(state.core, ref_core, eps, need_grad=False)
    return -value


@dataclass
class FdReport:
    """Summary of one finite-difference gradient verification."""

    max_rel_error: float
    worst_param: str
    n_checked: int
    n_skipped: int
    rel_errors: np.ndarray
    passed: bool = False


def finite_difference_check(model, x, target, step=1e-5, eps=DEFAULT_EPS,
                            tolerance=1e-4, small_floor=1e-8):
    """Compare analytic gradients against central differences.

    Every trainable parameter is perturbed by +-step. Entries where both
    the analytic and numeric derivative are below small_floor are skipped,
    as are raw cutoffs within 10 * step of a clamp kink (|r| near 0 or 1,
    or a near-tie |r1| = |r2|) where the subgradient is one-sided.
    """
    step = float(step)
    if not np.isfinite(step) or step <= 0:
        raise InvalidParameterError(f"step must be > 0, got {step!r}")
    work = model.copy()
    base = work.param_vector()
    _, grads = backward(work, x, target, eps=eps)
    analytic = grads.to_vector()
    names = work.param_names()
    kink_margin = 10.0 * step

    def near_kink(idx):
        # only raw cutoffs have a non-smooth reparametrization
        if idx >= 2 * work.n_filters:
            return False
        pair = idx // 2
        r1, r2 = base[2 * pair], base[2 * pair + 1]
        if abs(abs(r1) - abs(r2)) < kink_margin or min(abs(r1), abs(r2)) < kink_margin:
            return True
        if work.filterbank.mode == REFORMED:
            # the upper clamp only exists in reformed mode
            if abs(abs(r1) - 1.0) < kink_margin or abs(abs(r2) - 1.0) < kink_margin:
                return True
        return False

    rel_errors = np.zeros(base.size)
    checked = 0
    skipped = 0
    max_rel = 0.0
    worst = "(none)"
    for idx in range(base.size):
        if near_kink(idx):
            skipped += 1
            continue
        vec = base.copy()
        vec[idx] = base[idx] + step
        work.set_param_vector(vec)
        loss_plus = loss_value(work, x, target, eps=eps)
        vec[idx] = base[idx] - step
        work.set_param_vector(vec)
        loss_minus = loss_value(work, x, target, eps=eps)
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        if abs(analytic[idx]) < small_floor and abs(numeric) < small_floor:
            skipped += 1
            continue
        rel = abs(analytic[idx] - numeric) / max(abs(analytic[idx]), abs(numeric),
                                                 small_floor)
        rel_errors[idx] = rel
        checked += 1
        if rel > max_rel:
            max_rel = rel
            worst = names[idx]
    work.set_param_vector(base)
    return FdReport(max_rel_error=max_rel, worst_param=worst, n_checked=checked,
                    n_skipped=skipped, rel_errors=rel_errors,
                    passed=bool(max_rel < tolerance))
