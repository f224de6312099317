"""Checkpoint format: byte-stable round trips, exact parameter recovery,
version and structure validation."""

import json

import numpy as np
import pytest

from sincbank.checkpoint import (
    FORMAT_VERSION,
    checkpoint_payload,
    load_checkpoint,
    save_checkpoint,
)
from sincbank.errors import CheckpointError
from sincbank.filter_core import Filterbank
from sincbank.model import EnhancerModel, build_decoder
from sincbank.trainer import TrainConfig, build_model


def make_model(variant="linear_combination", hop=1, mode="reformed", n=5, L=31):
    rng = np.random.default_rng(8)
    raw = rng.uniform(0, 1, size=(n, 2))
    if mode == "original":
        raw = raw * 8000.0
    fb = Filterbank(raw=raw, beta=rng.uniform(0.2, 1.5, size=n),
                    sample_rate=16000.0, kernel_len=L, mode=mode)
    return EnhancerModel(filterbank=fb,
                         mask_logits=rng.standard_normal(n),
                         decoder=build_decoder(variant, fb),
                         hop=hop)


class TestRoundTrip:
    @pytest.mark.parametrize("variant,hop", [
        ("linear_combination", 1),
        ("transposed", 8),
        ("pinv", 4),
    ])
    def test_bytes_stable(self, tmp_path, variant, hop):
        model = make_model(variant=variant, hop=hop)
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_checkpoint(model, p1)
        loaded, _ = load_checkpoint(p1)
        save_checkpoint(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_parameters_exact(self, tmp_path):
        model = make_model()
        path = tmp_path / "m.json"
        save_checkpoint(model, path)
        loaded, _ = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.filterbank.raw, model.filterbank.raw)
        np.testing.assert_array_equal(loaded.filterbank.beta, model.filterbank.beta)
        np.testing.assert_array_equal(loaded.mask_logits, model.mask_logits)
        np.testing.assert_array_equal(loaded.decoder.gamma, model.decoder.gamma)
        assert loaded.hop == model.hop
        assert loaded.normalization == model.normalization

    def test_original_mode_round_trip(self, tmp_path):
        model = make_model(mode="original", variant="transposed", hop=4)
        path = tmp_path / "o.json"
        save_checkpoint(model, path)
        loaded, _ = load_checkpoint(path)
        assert loaded.filterbank.mode == "original"
        np.testing.assert_array_equal(loaded.filterbank.raw, model.filterbank.raw)
        np.testing.assert_array_equal(loaded.decoder.synth_taps,
                                      model.decoder.synth_taps)

    def test_metadata_echo(self, tmp_path):
        model = make_model()
        config = TrainConfig(steps=7, n_filters=5, kernel_len=31, seed=3)
        path = tmp_path / "meta.json"
        save_checkpoint(model, path, train_config=config,
                        seeds={"train": 3, "data": 11})
        _, metadata = load_checkpoint(path)
        assert metadata["train_config"]["steps"] == 7
        assert metadata["train_config"]["learning_rate"] == 1e-3
        assert metadata["seeds"] == {"train": 3, "data": 11}

    def test_metadata_defaults_none(self, tmp_path):
        model = make_model()
        path = tmp_path / "bare.json"
        save_checkpoint(model, path)
        _, metadata = load_checkpoint(path)
        assert metadata["train_config"] is None
        assert metadata["seeds"] is None

    def test_trained_model_round_trip(self, tmp_path):
        model = build_model(TrainConfig(n_filters=6, kernel_len=41, seed=1))
        path = tmp_path / "t.json"
        save_checkpoint(model, path)
        loaded, _ = load_checkpoint(path)
        x = np.random.default_rng(0).standard_normal(300)
        np.testing.assert_array_equal(loaded.enhance(x), model.enhance(x))


class TestFormat:
    def test_canonical_serialization(self, tmp_path):
        model = make_model()
        path = tmp_path / "c.json"
        save_checkpoint(model, path)
        text = path.read_text()
        assert text.endswith("\n")
        payload = json.loads(text)
        assert payload["format_version"] == FORMAT_VERSION
        assert json.dumps(payload, sort_keys=True, indent=2) + "\n" == text

    def test_payload_structure(self):
        model = make_model()
        payload = checkpoint_payload(model)
        assert set(payload) == {
            "format_version", "sample_rate", "kernel_len", "mode", "hop",
            "normalization", "filters", "mask_logits", "decoder",
            "train_config", "seeds"}
        assert len(payload["filters"]) == 5
        assert set(payload["filters"][0]) == {"a1_raw", "a2_raw", "beta"}
        assert payload["decoder"]["variant"] == "linear_combination"

    def test_pinv_decoder_has_no_weights(self):
        payload = checkpoint_payload(make_model(variant="pinv", hop=4))
        assert payload["decoder"] == {"variant": "pinv"}


class TestLoadErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="no such checkpoint"):
            load_checkpoint(tmp_path / "gone.json")

    def test_garbage_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(CheckpointError, match="cannot parse"):
            load_checkpoint(path)

    def test_wrong_version(self, tmp_path):
        model = make_model()
        path = tmp_path / "v.json"
        save_checkpoint(model, path)
        payload = json.loads(path.read_text())
        payload["format_version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="format_version 99"):
            load_checkpoint(path)

    def test_missing_field(self, tmp_path):
        model = make_model()
        path = tmp_path / "m.json"
        save_checkpoint(model, path)
        payload = json.loads(path.read_text())
        del payload["mask_logits"]
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="mask_logits"):
            load_checkpoint(path)

    def test_unknown_decoder(self, tmp_path):
        model = make_model()
        path = tmp_path / "d.json"
        save_checkpoint(model, path)
        payload = json.loads(path.read_text())
        payload["decoder"] = {"variant": "istft"}
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="istft"):
            load_checkpoint(path)

    def test_empty_filters(self, tmp_path):
        model = make_model()
        path = tmp_path / "e.json"
        save_checkpoint(model, path)
        payload = json.loads(path.read_text())
        payload["filters"] = []
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="empty"):
            load_checkpoint(path)

    def test_inconsistent_shapes(self, tmp_path):
        model = make_model()
        path = tmp_path / "s.json"
        save_checkpoint(model, path)
        payload = json.loads(path.read_text())
        payload["mask_logits"] = payload["mask_logits"][:-1]
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="inconsistent"):
            load_checkpoint(path)
