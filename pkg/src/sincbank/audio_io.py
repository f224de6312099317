"""WAV input/output with fixed conventions.

Reads RIFF PCM16 and float32, writes PCM16 only. PCM16 maps to floats by
division with 32768, so full-scale positive is 32767/32768 and -1.0 is
representable exactly; the write path rounds, clips to the int16 range,
and reports how many samples exceeded unity. Stereo downmixes to mono
with a warning. Writes go through a temp file and rename so a crashed
process never leaves a half-written WAV behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import AudioFormatError, InvalidParameterError
from .validation import as_float_array

STANDARD_RATE = 16000
PCM16_SCALE = 32768.0


@dataclass
class AudioBuffer:
    """Mono audio: samples nominally in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = as_float_array(self.samples, "samples")
        if samples.ndim != 1:
            raise InvalidParameterError(
                f"samples must be 1-D mono, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise InvalidParameterError("samples contain non-finite values")
        rate = int(self.sample_rate)
        if rate <= 0:
            raise InvalidParameterError(f"sample_rate must be > 0, got {self.sample_rate!r}")
        self.samples = samples
        self.sample_rate = rate

    @property
    def duration_seconds(self):
        return self.samples.size / self.sample_rate


def read_wav(path):
    """Read a WAV file into an AudioBuffer.

    PCM16 divides by 32768 (lossless, exactly invertible by write_wav);
    float32/float64 data passes through with clipping to [-1, 1] and a
    warning when anything was actually out of range.
    """
    if not os.path.exists(path):
        raise AudioFormatError(f"no such file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError, struct.error) as exc:
        raise AudioFormatError(f"cannot parse WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
        n_out = int(np.count_nonzero(np.abs(samples) > 1.0))
        if n_out:
            warnings.warn(
                f"{path}: {n_out} float samples outside [-1, 1] were clipped")
            samples = np.clip(samples, -1.0, 1.0)
    else:
        raise AudioFormatError(
            f"{path}: unsupported sample format {data.dtype}; "
            "expected PCM16 or float32")
    if samples.ndim == 2:
        warnings.warn(f"{path}: {samples.shape[1]} channels downmixed to mono")
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise AudioFormatError(f"{path}: unexpected data layout {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise AudioFormatError(f"{path}: non-finite samples")
    if rate != STANDARD_RATE:
        warnings.warn(
            f"{path}: sample rate {rate} Hz differs from the standard "
            f"{STANDARD_RATE} Hz pipeline")
    return AudioBuffer(samples=samples, sample_rate=rate)


def write_wav(buffer, path):
    """Write an AudioBuffer as PCM16. Returns the clipped-sample count."""
    if not isinstance(buffer, AudioBuffer):
        raise InvalidParameterError("buffer must be an AudioBuffer")
    samples = buffer.samples
    n_clipped = int(np.count_nonzero(np.abs(samples) > 1.0))
    if n_clipped:
        warnings.warn(f"{path}: {n_clipped} samples clipped to [-1, 1]")
    pcm = np.round(samples * PCM16_SCALE)
    pcm = np.clip(pcm, -32768, 32767).astype(np.int16)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".wav.tmp")
    try:
        os.close(fd)
        wavfile.write(tmp_path, buffer.sample_rate, pcm)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return n_clipped
