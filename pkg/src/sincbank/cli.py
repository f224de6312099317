"""Command-line surface.

Subcommands: init, inspect, filter, train, enhance, check-grads,
export-cfr, export-cutoffs, synth. Exit codes: 0 success, 1 usage error,
2 runtime error. Options may come from a JSON file via --config; explicit
flags win over file values, which win over built-in defaults. Diagnostics
go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .analysis import (
    cumulative_frequency_response,
    export_cutoffs_and_gains,
    filter_census,
    save_cfr_csv,
    save_cutoffs_csv,
)
from .audio_io import AudioBuffer, read_wav, write_wav
from .autodiff import finite_difference_check
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import InvalidParameterError, SincbankError
from .filter_core import MODES, REFORMED
from .init_strategies import load_curve_csv
from .losses import si_snr
from .model import build_decoder
from .pipeline import DECODER_VARIANTS, LINEAR_COMBINATION, parameter_count
from .trainer import (
    INIT_STRATEGIES,
    PairStream,
    SynthSpec,
    TrainConfig,
    build_model,
    evaluate_model,
    train,
)


class UsageError(Exception):
    """Bad command line; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


TRAIN_DEFAULTS = {
    "steps": 2000, "learning_rate": 1e-3, "batch": 1, "hop": 1,
    "decoder": LINEAR_COMBINATION, "strategy": "uniform", "seed": 0,
    "mode": REFORMED, "normalization": False, "n": 80, "kernel": 251,
    "sample_rate": 16000.0, "f_min": 0.0,
    "tones": "400,700", "tone_amps": "0.3,0.3", "noise_band": "3000,5000",
    "snr": 0.0, "duration": 2048, "data_seed": 0,
}

INIT_DEFAULTS = {
    "n": 80, "kernel": 251, "strategy": "mel", "seed": 0, "mode": REFORMED,
    "decoder": LINEAR_COMBINATION, "hop": 1, "normalization": False,
    "sample_rate": 16000.0, "f_min": 0.0, "curve": None,
}

SYNTH_DEFAULTS = {
    "tones": "400,700", "tone_amps": "0.3,0.3", "noise_band": "3000,5000",
    "snr": 0.0, "duration": 2048, "data_seed": 0, "sample_rate": 16000.0,
}

CHECK_GRADS_DEFAULTS = {
    "seed": 0, "step": 1e-5, "tolerance": 1e-4,
}


def _parse_float_list(text, name, expect=None):
    try:
        values = tuple(float(part) for part in str(text).split(",") if part != "")
    except ValueError as exc:
        raise UsageError(f"cannot parse {name} {text!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{name} must list at least one number")
    if expect is not None and len(values) != expect:
        raise UsageError(f"{name} needs exactly {expect} numbers, got {len(values)}")
    return values


def _merge(args, defaults):
    """Flag > config file > defaults, keyed by argparse dest names."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise UsageError(f"config {config_path} must hold a JSON object")
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise UsageError(
                f"config {config_path} has unknown keys: {sorted(unknown)}")
        merged.update(from_file)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _train_config_from(options):
    return TrainConfig(
        steps=options["steps"], learning_rate=options["learning_rate"],
        batch=options["batch"], hop=options["hop"],
        decoder_variant=options["decoder"], init_strategy=options["strategy"],
        seed=options["seed"], mode=options["mode"],
        normalization=bool(options["normalization"]), n_filters=options["n"],
        kernel_len=options["kernel"], sample_rate=options["sample_rate"],
        f_min=options["f_min"])


def _synth_spec_from(options):
    return SynthSpec(
        tone_freqs=_parse_float_list(options["tones"], "--tones"),
        tone_amps=_parse_float_list(options["tone_amps"], "--tone-amps"),
        noise_band=_parse_float_list(options["noise_band"], "--noise-band", expect=2),
        input_snr_db=float(options["snr"]),
        duration=int(options["duration"]),
        seed=int(options["data_seed"]),
        sample_rate=float(options["sample_rate"]))


def _add_config_flag(sub):
    sub.add_argument("--config", help="JSON file providing option values; "
                     "explicit flags override it")


def _add_train_flags(sub, data_only=False):
    if not data_only:
        sub.add_argument("--steps", type=int)
        sub.add_argument("--learning-rate", type=float, dest="learning_rate")
        sub.add_argument("--batch", type=int)
        sub.add_argument("--hop", type=int)
        sub.add_argument("--decoder", choices=DECODER_VARIANTS)
        sub.add_argument("--strategy", choices=INIT_STRATEGIES)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--mode", choices=MODES)
        sub.add_argument("--normalization", action=argparse.BooleanOptionalAction,
                         default=None)
        sub.add_argument("--n", type=int, help="number of filters")
        sub.add_argument("--kernel", type=int, help="kernel length (odd)")
        sub.add_argument("--f-min", type=float, dest="f_min")
    sub.add_argument("--sample-rate", type=float, dest="sample_rate")
    sub.add_argument("--tones", help="comma-separated tone frequencies in Hz")
    sub.add_argument("--tone-amps", dest="tone_amps",
                     help="comma-separated tone amplitudes")
    sub.add_argument("--noise-band", dest="noise_band",
                     help="noise band as lo,hi in Hz")
    sub.add_argument("--snr", type=float, help="input SI-SNR in dB")
    sub.add_argument("--duration", type=int, help="samples per pair")
    sub.add_argument("--data-seed", type=int, dest="data_seed")


def build_parser():
    parser = _Parser(prog="sincbank",
                     description="Windowed-sinc filterbank speech enhancement")
    commands = parser.add_subparsers(dest="command", metavar="command")

    sub = commands.add_parser("init", help="build and save an initialized bank",
                              description="Initialize a model checkpoint.")
    _add_config_flag(sub)
    sub.add_argument("--n", type=int, help="number of filters")
    sub.add_argument("--kernel", type=int, help="kernel length (odd)")
    sub.add_argument("--strategy", choices=INIT_STRATEGIES)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--mode", choices=MODES)
    sub.add_argument("--decoder", choices=DECODER_VARIANTS)
    sub.add_argument("--hop", type=int)
    sub.add_argument("--normalization", action=argparse.BooleanOptionalAction,
                     default=None)
    sub.add_argument("--sample-rate", type=float, dest="sample_rate")
    sub.add_argument("--f-min", type=float, dest="f_min")
    sub.add_argument("--curve", help="CSV frequency curve for the formant strategy")
    sub.add_argument("--out", required=True, help="checkpoint path to write")

    sub = commands.add_parser("inspect", help="print census and parameter counts",
                              description="Summarize a checkpoint.")
    sub.add_argument("checkpoint")

    sub = commands.add_parser("filter", help="apply one filter to a WAV",
                              description="Run a single filter over audio.")
    sub.add_argument("--in", dest="in_path", required=True, help="input WAV")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--index", type=int, required=True, help="filter index")
    sub.add_argument("--out", required=True, help="output WAV")

    sub = commands.add_parser("train", help="train on the synthetic task",
                              description="Train a model; writes a checkpoint "
                              "and a history CSV.")
    _add_config_flag(sub)
    _add_train_flags(sub)
    sub.add_argument("--curve", help="CSV frequency curve for the formant strategy")
    sub.add_argument("--out", required=True, help="checkpoint path to write")
    sub.add_argument("--history", help="history CSV path to write")

    sub = commands.add_parser("enhance", help="denoise a WAV with a checkpoint",
                              description="Run the enhancement pipeline.")
    sub.add_argument("--in", dest="in_path", required=True, help="noisy WAV")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--out", required=True, help="enhanced WAV")
    sub.add_argument("--reference", help="clean WAV for SI-SNR reporting")

    sub = commands.add_parser("check-grads",
                              help="verify analytic gradients numerically",
                              description="Compare analytic gradients with "
                              "central finite differences on a small random "
                              "configuration.")
    _add_config_flag(sub)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--step", type=float)
    sub.add_argument("--tolerance", type=float)

    sub = commands.add_parser("export-cfr",
                              help="write the cumulative frequency response CSV",
                              description="Export the bank's summed magnitude "
                              "response.")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--out", required=True, help="CSV path")
    sub.add_argument("--grid", type=int, default=2048)

    sub = commands.add_parser("export-cutoffs",
                              help="write the sorted cutoff/gain table CSV",
                              description="Export cutoffs and band gains.")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--out", required=True, help="CSV path")
    sub.add_argument("--sort", choices=("lower", "upper"), default="lower")

    sub = commands.add_parser("synth", help="emit one synthetic pair as WAVs",
                              description="Generate a (noisy, clean) pair.")
    _add_config_flag(sub)
    _add_train_flags(sub, data_only=True)
    sub.add_argument("--out-noisy", dest="out_noisy", required=True)
    sub.add_argument("--out-clean", dest="out_clean", required=True)

    return parser


def _cmd_init(args):
    options = _merge(args, INIT_DEFAULTS)
    config = _train_config_from({**options, "steps": 1, "learning_rate": 1e-3,
                                 "batch": 1})
    curve = load_curve_csv(options["curve"]) if options["curve"] else None
    model = build_model(config, curve=curve)
    save_checkpoint(model, args.out, seeds={"init": options["seed"]})
    print(f"wrote {args.out}: {config.n_filters} filters, "
          f"kernel {config.kernel_len}, {options['strategy']} init")
    return 0


def _cmd_inspect(args):
    model, metadata = load_checkpoint(args.checkpoint)
    fb = model.filterbank
    counts = parameter_count(fb, model.decoder)
    census = filter_census(fb)
    print(f"checkpoint: {args.checkpoint}")
    print(f"filters: {fb.n_filters}  kernel_len: {fb.kernel_len}  "
          f"mode: {fb.mode}  hop: {model.hop}  "
          f"normalization: {model.normalization}")
    print(f"decoder: {model.decoder.variant}")
    print(f"encoder parameters: {counts.encoder}  "
          f"decoder parameters: {counts.decoder}  "
          f"dense-equivalent encoder: {counts.dense_encoder}")
    print(f"census: low_pass={census.low_pass} band_pass={census.band_pass} "
          f"high_pass={census.high_pass} degenerate={census.degenerate} "
          f"zero_gain={census.zero_gain}")
    if metadata["train_config"] is not None:
        print(f"trained: steps={metadata['train_config'].get('steps')}")
    return 0


def _cmd_filter(args):
    model, _ = load_checkpoint(args.checkpoint)
    fb = model.filterbank
    if not 0 <= args.index < fb.n_filters:
        raise InvalidParameterError(
            f"filter index {args.index} out of range for {fb.n_filters} filters")
    buf = read_wav(args.in_path)
    if buf.sample_rate != fb.sample_rate:
        raise InvalidParameterError(
            f"audio rate {buf.sample_rate} Hz does not match checkpoint rate "
            f"{fb.sample_rate:g} Hz")
    taps = fb.materialize(include_beta=True)[args.index]
    filtered = np.convolve(buf.samples, taps, mode="same")
    n_clipped = write_wav(AudioBuffer(samples=filtered,
                                      sample_rate=buf.sample_rate), args.out)
    spec = fb.filter_spec(args.index)
    print(f"filter {args.index}: band ({spec.band[0]:.4f}, {spec.band[1]:.4f}) "
          f"beta {spec.beta:.4f} -> {args.out} ({n_clipped} clipped)")
    return 0


def _cmd_train(args):
    options = _merge(args, TRAIN_DEFAULTS)
    config = _train_config_from(options)
    spec = _synth_spec_from(options)
    curve = load_curve_csv(args.curve) if getattr(args, "curve", None) else None
    model, history = train(config, spec, curve=curve)
    val_pair = PairStream(dataclasses.replace(spec, seed=spec.seed + 7919)).next_pair()
    est_db, noisy_db = evaluate_model(model, *val_pair)
    save_checkpoint(model, args.out, train_config=config,
                    seeds={"train": config.seed, "data": spec.seed})
    print(f"trained {config.steps} steps: loss {history.loss[-1]:.3f}, "
          f"val SI-SNR {est_db:.2f} dB (noisy {noisy_db:.2f} dB), "
          f"displacement {history.displacement[-1]:.5f}")
    print(f"wrote {args.out}")
    if args.history:
        history.to_csv(args.history)
        print(f"wrote {args.history}")
    return 0


def _cmd_enhance(args):
    model, _ = load_checkpoint(args.checkpoint)
    buf = read_wav(args.in_path)
    if buf.sample_rate != model.filterbank.sample_rate:
        raise InvalidParameterError(
            f"audio rate {buf.sample_rate} Hz does not match checkpoint rate "
            f"{model.filterbank.sample_rate:g} Hz")
    state = model.forward(buf.samples)
    n_clipped = write_wav(AudioBuffer(samples=state.y,
                                      sample_rate=buf.sample_rate), args.out)
    print(f"enhanced {args.in_path} -> {args.out} "
          f"({buf.samples.size} samples, {n_clipped} clipped)")
    if args.reference:
        ref = read_wav(args.reference)
        ref_core = state.aligned_reference(ref.samples)
        est_db = si_snr(state.core, ref_core)
        noisy_db = si_snr(buf.samples[state.core_slice], ref_core)
        print(f"SI-SNR vs reference: {est_db:.2f} dB "
              f"(noisy {noisy_db:.2f} dB, gain {est_db - noisy_db:+.2f} dB)")
    return 0


def _cmd_check_grads(args):
    options = _merge(args, CHECK_GRADS_DEFAULTS)
    rng = np.random.default_rng(options["seed"])
    from .filter_core import Filterbank
    from .model import EnhancerModel

    raw = rng.uniform(0.05, 0.95, size=(4, 2))
    fb = Filterbank(raw=raw, beta=rng.uniform(0.5, 1.5, size=4),
                    sample_rate=16000.0, kernel_len=31, mode=REFORMED)
    model = EnhancerModel(filterbank=fb, mask_logits=rng.standard_normal(4),
                          decoder=build_decoder(LINEAR_COMBINATION, fb), hop=1)
    x = rng.standard_normal(200)
    target = rng.standard_normal(200)
    report = finite_difference_check(model, x, target, step=options["step"],
                                     tolerance=options["tolerance"])
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} max_rel_error={report.max_rel_error:.3e} "
          f"worst={report.worst_param} checked={report.n_checked} "
          f"skipped={report.n_skipped}")
    return 0 if report.passed else 2


def _cmd_export_cfr(args):
    model, _ = load_checkpoint(args.checkpoint)
    curve = cumulative_frequency_response(model.filterbank, n_grid=args.grid)
    save_cfr_csv(curve, args.out)
    print(f"wrote {args.out}: {curve.freqs.size} grid points over "
          f"[0, {curve.freqs[-1]:g}] Hz")
    return 0


def _cmd_export_cutoffs(args):
    model, _ = load_checkpoint(args.checkpoint)
    rows = export_cutoffs_and_gains(model.filterbank, sort_key=args.sort)
    save_cutoffs_csv(rows, args.out)
    print(f"wrote {args.out}: {len(rows)} filters sorted by {args.sort} cutoff")
    return 0


def _cmd_synth(args):
    options = _merge(args, SYNTH_DEFAULTS)
    spec = _synth_spec_from(options)
    noisy, clean = PairStream(spec).next_pair()
    peak = max(np.abs(noisy).max(), np.abs(clean).max(), 1.0)
    rate = int(spec.sample_rate)
    write_wav(AudioBuffer(samples=noisy / peak, sample_rate=rate), args.out_noisy)
    write_wav(AudioBuffer(samples=clean / peak, sample_rate=rate), args.out_clean)
    print(f"wrote {args.out_noisy} and {args.out_clean}: {spec.duration} samples "
          f"at {rate} Hz, target SI-SNR {spec.input_snr_db:g} dB")
    return 0


HANDLERS = {
    "init": _cmd_init,
    "inspect": _cmd_inspect,
    "filter": _cmd_filter,
    "train": _cmd_train,
    "enhance": _cmd_enhance,
    "check-grads": _cmd_check_grads,
    "export-cfr": _cmd_export_cfr,
    "export-cutoffs": _cmd_export_cutoffs,
    "synth": _cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse exits directly for --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return HANDLERS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SincbankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
