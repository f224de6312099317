"""Scale-invariant SNR: value and closed-form gradient.

Both signals are mean-centered, the estimate is projected onto the
reference, and the ratio of projection power to residual power is reported
in dB with an epsilon guard in every quotient:

    s = (<est_c, ref_c> / (<ref_c, ref_c> + eps)) * ref_c
    e = est_c - s
    si_snr = 10 log10((<s, s> + eps) / (<e, e> + eps))
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError
from .validation import check_signal

DEFAULT_EPS = 1e-8
_LOG10 = float(np.log(10.0))


def _validate_pair(est, ref, eps):
    est = check_signal(est, "est", min_len=2)
    ref = check_signal(ref, "ref", min_len=2)
    if est.shape != ref.shape:
        raise InvalidParameterError(
            f"est and ref must have equal length, got {est.shape[0]} vs {ref.shape[0]}"
        )
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0:
        raise InvalidParameterError(f"eps must be > 0, got {eps!r}")
    return est, ref, eps


def si_snr(est, ref, eps=DEFAULT_EPS):
    """Scale-invariant SNR of est against ref, in dB."""
    value, _ = si_snr_with_grad(est, ref, eps, need_grad=False)
    return value


def si_snr_with_grad(est, ref, eps=DEFAULT_EPS, need_grad=True):
    """SI-SNR value and its gradient with respect to est.

    Returns (value_db, grad) where grad has est's shape; grad is None when
    need_grad is False.
    """
    est, ref, eps = _validate_pair(est, ref, eps)
    n = est.shape[0]
    est_c = est - est.mean()
    ref_c = ref - ref.mean()
    rr = float(ref_c @ ref_c) + eps
    dot = float(est_c @ ref_c)
    k = dot / rr
    s = k * ref_c
    e = est_c - s
    ps = float(s @ s) + eps
    pe = float(e @ e) + eps
    value = 10.0 * np.log10(ps / pe)
    if not need_grad:
        return value, None
    # d ps / d est_c = 2 k rr' ref_c / rr with rr' = <ref_c, ref_c>
    dps = (2.0 * k * float(ref_c @ ref_c) / rr) * ref_c
    de = e - (float(e @ ref_c) / rr) * ref_c
    dpe = 2.0 * de
    grad_c = (10.0 / _LOG10) * (dps / ps - dpe / pe)
    grad = grad_c - grad_c.mean()
    del n
    return value, grad
