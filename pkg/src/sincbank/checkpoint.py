"""Versioned JSON checkpoints.

Only raw parameters are stored (cutoff pairs, band gains, mask logits,
decoder weights); taps are always rematerialized on load so stored and
computed filters can never drift apart. Serialization is canonical:
sorted keys, two-space indent, trailing newline, floats via repr (which
round-trips binary64 exactly), written atomically. save(load(p)) is
byte-identical to p.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile

import numpy as np

from .errors import CheckpointError
from .filter_core import MODES, Filterbank
from .model import EnhancerModel
from .pipeline import DECODER_VARIANTS, LINEAR_COMBINATION, PINV, TRANSPOSED, DecoderSpec

FORMAT_VERSION = 1


def _decoder_payload(decoder):
    payload = {"variant": decoder.variant}
    if decoder.variant == LINEAR_COMBINATION:
        payload["gamma"] = decoder.gamma.tolist()
    elif decoder.variant == TRANSPOSED:
        payload["synth_taps"] = decoder.synth_taps.tolist()
    return payload


def checkpoint_payload(model, train_config=None, seeds=None):
    """The checkpoint as a plain JSON-serializable dict."""
    if not isinstance(model, EnhancerModel):
        raise CheckpointError("model must be an EnhancerModel")
    fb = model.filterbank
    if train_config is not None and dataclasses.is_dataclass(train_config):
        train_config = dataclasses.asdict(train_config)
    return {
        "format_version": FORMAT_VERSION,
        "sample_rate": float(fb.sample_rate),
        "kernel_len": int(fb.kernel_len),
        "mode": fb.mode,
        "hop": int(model.hop),
        "normalization": bool(model.normalization),
        "filters": [
            {"a1_raw": float(fb.raw[i, 0]), "a2_raw": float(fb.raw[i, 1]),
             "beta": float(fb.beta[i])}
            for i in range(fb.n_filters)
        ],
        "mask_logits": model.mask_logits.tolist(),
        "decoder": _decoder_payload(model.decoder),
        "train_config": train_config,
        "seeds": seeds,
    }


def save_checkpoint(model, path, train_config=None, seeds=None):
    payload = checkpoint_payload(model, train_config=train_config, seeds=seeds)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".json.tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _require(payload, key, kind):
    if key not in payload:
        raise CheckpointError(f"checkpoint missing required field {key!r}")
    value = payload[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise CheckpointError(
            f"checkpoint field {key!r} has type {type(value).__name__}")
    return value


def load_checkpoint(path):
    """Load a checkpoint; returns (EnhancerModel, metadata dict).

    Metadata holds the train_config echo and seeds (either may be None).
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError as exc:
        raise CheckpointError(f"no such checkpoint: {path}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"cannot parse checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise CheckpointError(f"checkpoint {path} is not a JSON object")
    version = _require(payload, "format_version", int)
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version}; "
            f"this build reads version {FORMAT_VERSION}")
    mode = _require(payload, "mode", str)
    if mode not in MODES:
        raise CheckpointError(f"unknown mode {mode!r}")
    filters = _require(payload, "filters", list)
    if not filters:
        raise CheckpointError("checkpoint has an empty filter list")
    raw = np.array([[f["a1_raw"], f["a2_raw"]] for f in filters], dtype=float)
    beta = np.array([f["beta"] for f in filters], dtype=float)
    fb = Filterbank(
        raw=raw,
        beta=beta,
        sample_rate=_require(payload, "sample_rate", float),
        kernel_len=_require(payload, "kernel_len", int),
        mode=mode,
    )
    mask_logits = np.array(_require(payload, "mask_logits", list), dtype=float)
    dec = _require(payload, "decoder", dict)
    variant = dec.get("variant")
    if variant not in DECODER_VARIANTS:
        raise CheckpointError(f"unknown decoder variant {variant!r}")
    if variant == LINEAR_COMBINATION:
        decoder = DecoderSpec(variant=variant,
                              gamma=np.array(dec["gamma"], dtype=float))
    elif variant == TRANSPOSED:
        decoder = DecoderSpec(variant=variant,
                              synth_taps=np.array(dec["synth_taps"], dtype=float))
    else:
        decoder = DecoderSpec(variant=PINV)
    try:
        model = EnhancerModel(
            filterbank=fb,
            mask_logits=mask_logits,
            decoder=decoder,
            hop=_require(payload, "hop", int),
            normalization=_require(payload, "normalization", bool),
        )
    except Exception as exc:
        raise CheckpointError(f"inconsistent checkpoint {path}: {exc}") from exc
    metadata = {
        "train_config": payload.get("train_config"),
        "seeds": payload.get("seeds"),
    }
    return model, metadata
