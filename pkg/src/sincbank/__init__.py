"""Trainable windowed-sinc filterbank engine for time-domain enhancement."""

from .analysis import (
    CfrCurve,
    FilterCensus,
    cumulative_frequency_response,
    export_cutoffs_and_gains,
    filter_census,
)
from .audio_io import AudioBuffer, read_wav, write_wav
from .autodiff import GradientSet, backward, finite_difference_check, loss_value
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    AudioFormatError,
    CheckpointError,
    InvalidParameterError,
    NumericFailureError,
    SincbankError,
    SingularOperatorError,
    UnsupportedConfigurationError,
)
from .estimators import SincDenoiser, SincEncoder
from .filter_core import (
    Filterbank,
    FilterSpec,
    assemble_filter,
    classify_filter,
    frequency_response,
    hamming_window,
    ideal_band_taps,
    normalize_cutoffs,
)
from .init_strategies import (
    Pmf,
    TabulatedCurve,
    cfr_to_pmf,
    init_formant,
    init_mel,
    init_uniform,
    mel_from_hz,
    synthetic_formant_curve,
)
from .losses import si_snr, si_snr_with_grad
from .model import EnhancerModel, build_decoder
from .pipeline import (
    DecoderSpec,
    FrameMatrix,
    decode_linear_combination,
    decode_pinv,
    decode_transposed,
    encode,
    parameter_count,
)
from .trainer import (
    SynthSpec,
    TrainConfig,
    TrainHistory,
    build_model,
    evaluate_model,
    oracle_bandstop_baseline,
    synth_dataset,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "AudioFormatError",
    "CfrCurve",
    "CheckpointError",
    "DecoderSpec",
    "EnhancerModel",
    "FilterCensus",
    "FilterSpec",
    "Filterbank",
    "FrameMatrix",
    "GradientSet",
    "InvalidParameterError",
    "NumericFailureError",
    "Pmf",
    "SincDenoiser",
    "SincEncoder",
    "SincbankError",
    "SingularOperatorError",
    "SynthSpec",
    "TabulatedCurve",
    "TrainConfig",
    "TrainHistory",
    "UnsupportedConfigurationError",
    "assemble_filter",
    "backward",
    "build_decoder",
    "build_model",
    "cfr_to_pmf",
    "classify_filter",
    "cumulative_frequency_response",
    "decode_linear_combination",
    "decode_pinv",
    "decode_transposed",
    "encode",
    "evaluate_model",
    "export_cutoffs_and_gains",
    "filter_census",
    "finite_difference_check",
    "frequency_response",
    "hamming_window",
    "ideal_band_taps",
    "init_formant",
    "init_mel",
    "init_uniform",
    "load_checkpoint",
    "loss_value",
    "mel_from_hz",
    "normalize_cutoffs",
    "oracle_bandstop_baseline",
    "parameter_count",
    "read_wav",
    "save_checkpoint",
    "si_snr",
    "si_snr_with_grad",
    "synth_dataset",
    "synthetic_formant_curve",
    "train",
    "write_wav",
    "__version__",
]
