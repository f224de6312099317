"""Estimator-style wrappers around the filterbank pipeline.

SincEncoder is a stateless-after-fit transformer turning waveforms into
filterbank feature matrices; SincDenoiser wraps model construction plus
the training loop behind fit/predict/score. Both follow the usual
get_params/set_params conventions so cloning and grid search work, with
one deviation from tabular estimators: samples here are 1-D signals (or
lists of them), not rows of a fixed-width design matrix.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InvalidParameterError
from .filter_core import REFORMED
from .losses import DEFAULT_EPS
from .model import build_decoder
from .pipeline import LINEAR_COMBINATION, encode
from .trainer import (
    PairStream,
    SynthSpec,
    TrainConfig,
    build_model,
    evaluate_model,
    fit_pairs,
)
from .validation import check_signal_batch


class SincEncoder(TransformerMixin, BaseEstimator):
    """Fixed filterbank analysis transform.

    fit() materializes the initialized bank (there is nothing learned);
    transform() returns one (n_filters, n_frames) array per signal.
    """

    def __init__(self, n_filters=80, kernel_len=251, hop=125,
                 init_strategy="mel", mode=REFORMED, sample_rate=16000.0,
                 seed=0, f_min=0.0):
        self.n_filters = n_filters
        self.kernel_len = kernel_len
        self.hop = hop
        self.init_strategy = init_strategy
        self.mode = mode
        self.sample_rate = sample_rate
        self.seed = seed
        self.f_min = f_min

    def _config(self, **overrides):
        kw = dict(
            steps=1,
            hop=self.hop,
            decoder_variant="transposed" if self.hop != 1 else LINEAR_COMBINATION,
            init_strategy=self.init_strategy,
            seed=self.seed,
            mode=self.mode,
            n_filters=self.n_filters,
            kernel_len=self.kernel_len,
            sample_rate=self.sample_rate,
            f_min=self.f_min,
        )
        kw.update(overrides)
        return TrainConfig(**kw)

    def fit(self, X=None, y=None):
        self.filterbank_ = build_model(self._config()).filterbank
        return self

    def transform(self, X):
        if not hasattr(self, "filterbank_"):
            raise InvalidParameterError("SincEncoder is not fitted; call fit first")
        signals, was_single = check_signal_batch(X)
        out = []
        for x in signals:
            if x.size < self.filterbank_.kernel_len:
                raise InvalidParameterError(
                    f"signal of {x.size} samples is shorter than the "
                    f"{self.filterbank_.kernel_len}-tap kernel")
            out.append(encode(x, self.filterbank_, hop=self.hop).data)
        return out[0] if was_single else out


class SincDenoiser(BaseEstimator):
    """Trainable masking denoiser over the sinc filterbank.

    fit(X, y) optimizes cutoffs, band gains, mask logits, and decoder
    weights on (noisy, clean) signal pairs, cycling through the provided
    pairs for `steps` updates. predict() returns enhanced waveforms.
    """

    def __init__(self, steps=200, learning_rate=1e-3, batch=1, hop=1,
                 decoder_variant=LINEAR_COMBINATION, init_strategy="uniform",
                 seed=0, mode=REFORMED, normalization=False, n_filters=16,
                 kernel_len=101, sample_rate=16000.0, f_min=0.0,
                 loss_eps=DEFAULT_EPS):
        self.steps = steps
        self.learning_rate = learning_rate
        self.batch = batch
        self.hop = hop
        self.decoder_variant = decoder_variant
        self.init_strategy = init_strategy
        self.seed = seed
        self.mode = mode
        self.normalization = normalization
        self.n_filters = n_filters
        self.kernel_len = kernel_len
        self.sample_rate = sample_rate
        self.f_min = f_min
        self.loss_eps = loss_eps

    def _config(self):
        return TrainConfig(
            steps=self.steps, learning_rate=self.learning_rate,
            batch=self.batch, hop=self.hop,
            decoder_variant=self.decoder_variant,
            init_strategy=self.init_strategy, seed=self.seed, mode=self.mode,
            normalization=self.normalization, n_filters=self.n_filters,
            kernel_len=self.kernel_len, sample_rate=self.sample_rate,
            f_min=self.f_min, loss_eps=self.loss_eps)

    def fit(self, X, y):
        config = self._config()
        noisy, _ = check_signal_batch(X)
        clean, _ = check_signal_batch(y)
        if len(noisy) != len(clean):
            raise InvalidParameterError(
                f"{len(noisy)} noisy signals but {len(clean)} clean signals")
        pairs = []
        for n_sig, c_sig in zip(noisy, clean):
            if n_sig.shape != c_sig.shape:
                raise InvalidParameterError(
                    "each noisy/clean pair must share a length, got "
                    f"{n_sig.shape} vs {c_sig.shape}")
            if n_sig.size < 4 * config.kernel_len:
                raise InvalidParameterError(
                    f"signal of {n_sig.size} samples is shorter than "
                    f"4 * kernel_len = {4 * config.kernel_len}")
            pairs.append((n_sig, c_sig))
        self.model_ = build_model(config)

        def provider(step):
            base = (step - 1) * config.batch
            return [pairs[(base + j) % len(pairs)] for j in range(config.batch)]

        self.history_ = fit_pairs(self.model_, config, provider, pairs[0])
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise InvalidParameterError("SincDenoiser is not fitted; call fit first")
        signals, was_single = check_signal_batch(X)
        out = [self.model_.enhance(x) for x in signals]
        return out[0] if was_single else out

    def score(self, X, y):
        """Mean SI-SNR (dB) of predictions against references on the
        delay-aligned core; higher is better."""
        if not hasattr(self, "model_"):
            raise InvalidParameterError("SincDenoiser is not fitted; call fit first")
        noisy, _ = check_signal_batch(X)
        clean, _ = check_signal_batch(y)
        if len(noisy) != len(clean):
            raise InvalidParameterError(
                f"{len(noisy)} noisy signals but {len(clean)} clean signals")
        scores = [evaluate_model(self.model_, n_sig, c_sig, eps=self.loss_eps)[0]
                  for n_sig, c_sig in zip(noisy, clean)]
        return float(np.mean(scores))
