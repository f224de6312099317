"""WAV conventions: PCM16 normalization, lossless round trips, downmix
and clip warnings, format rejection."""

import os

import numpy as np
import pytest
from scipy.io import wavfile

from sincbank.audio_io import AudioBuffer, read_wav, write_wav
from sincbank.errors import AudioFormatError, InvalidParameterError


class TestAudioBuffer:
    def test_valid(self):
        buf = AudioBuffer(samples=np.zeros(16), sample_rate=16000)
        assert buf.duration_seconds == 16 / 16000

    def test_stereo_rejected(self):
        with pytest.raises(InvalidParameterError):
            AudioBuffer(samples=np.zeros((8, 2)), sample_rate=16000)

    def test_nan_rejected(self):
        with pytest.raises(InvalidParameterError):
            AudioBuffer(samples=np.array([0.0, np.nan]), sample_rate=16000)

    def test_bad_rate_rejected(self):
        with pytest.raises(InvalidParameterError):
            AudioBuffer(samples=np.zeros(4), sample_rate=0)


class TestReadWav:
    def test_silence_pcm16(self, tmp_path):
        path = tmp_path / "silence.wav"
        wavfile.write(path, 16000, np.zeros(16000, dtype=np.int16))
        buf = read_wav(path)
        assert buf.sample_rate == 16000
        assert buf.samples.shape == (16000,)
        assert np.array_equal(buf.samples, np.zeros(16000))

    def test_pcm16_normalization_convention(self, tmp_path):
        path = tmp_path / "square.wav"
        wavfile.write(path, 16000,
                      np.array([32767, -32768, 32767, -32768], dtype=np.int16))
        buf = read_wav(path)
        np.testing.assert_array_equal(
            buf.samples,
            [32767 / 32768, -1.0, 32767 / 32768, -1.0])

    def test_float32_passthrough(self, tmp_path):
        path = tmp_path / "f32.wav"
        data = np.array([0.25, -0.5, 0.75], dtype=np.float32)
        wavfile.write(path, 16000, data)
        buf = read_wav(path)
        np.testing.assert_allclose(buf.samples, data.astype(np.float64))

    def test_float_out_of_range_clipped_with_warning(self, tmp_path):
        path = tmp_path / "hot.wav"
        wavfile.write(path, 16000, np.array([1.5, -2.0, 0.5], dtype=np.float32))
        with pytest.warns(UserWarning, match="clipped"):
            buf = read_wav(path)
        np.testing.assert_array_equal(buf.samples, [1.0, -1.0, 0.5])

    def test_stereo_downmix_warns(self, tmp_path):
        path = tmp_path / "stereo.wav"
        data = np.array([[100, 300], [-200, 200]], dtype=np.int16)
        wavfile.write(path, 16000, data)
        with pytest.warns(UserWarning, match="downmix"):
            buf = read_wav(path)
        np.testing.assert_allclose(buf.samples, [200 / 32768, 0.0])

    def test_nonstandard_rate_warns(self, tmp_path):
        path = tmp_path / "slow.wav"
        wavfile.write(path, 8000, np.zeros(80, dtype=np.int16))
        with pytest.warns(UserWarning, match="8000"):
            buf = read_wav(path)
        assert buf.sample_rate == 8000

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioFormatError, match="no such file"):
            read_wav(tmp_path / "absent.wav")

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "broken.wav"
        good = tmp_path / "good.wav"
        wavfile.write(good, 16000, np.zeros(1000, dtype=np.int16))
        path.write_bytes(good.read_bytes()[:30])
        with pytest.raises(AudioFormatError):
            read_wav(path)

    def test_unsupported_dtype(self, tmp_path):
        path = tmp_path / "u8.wav"
        wavfile.write(path, 16000, np.full(16, 128, dtype=np.uint8))
        with pytest.raises(AudioFormatError, match="unsupported"):
            read_wav(path)


class TestWriteWav:
    def test_round_trip_pcm16_exact(self, tmp_path):
        src = tmp_path / "src.wav"
        rng = np.random.default_rng(0)
        original = rng.integers(-32768, 32768, size=4096).astype(np.int16)
        wavfile.write(src, 16000, original)
        buf = read_wav(src)
        dst = tmp_path / "dst.wav"
        n_clipped = write_wav(buf, dst)
        assert n_clipped == 0
        rate, back = wavfile.read(dst)
        assert rate == 16000
        np.testing.assert_array_equal(back, original)

    def test_clipping_reported(self, tmp_path):
        buf = AudioBuffer(samples=np.array([2.0, -2.0, 0.0]), sample_rate=16000)
        path = tmp_path / "clip.wav"
        with pytest.warns(UserWarning, match="2 samples clipped"):
            n_clipped = write_wav(buf, path)
        assert n_clipped == 2
        _, data = wavfile.read(path)
        np.testing.assert_array_equal(data, [32767, -32768, 0])

    def test_zero_length(self, tmp_path):
        buf = AudioBuffer(samples=np.zeros(0), sample_rate=16000)
        path = tmp_path / "empty.wav"
        write_wav(buf, path)
        _, data = wavfile.read(path)
        assert data.size == 0

    def test_no_temp_residue(self, tmp_path):
        buf = AudioBuffer(samples=np.zeros(8), sample_rate=16000)
        write_wav(buf, tmp_path / "out.wav")
        assert sorted(os.listdir(tmp_path)) == ["out.wav"]

    def test_preserves_rate(self, tmp_path):
        buf = AudioBuffer(samples=np.zeros(8), sample_rate=22050)
        path = tmp_path / "rate.wav"
        write_wav(buf, path)
        rate, _ = wavfile.read(path)
        assert rate == 22050
