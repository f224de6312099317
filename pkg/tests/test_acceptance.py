"""Acceptance suite: twelve headline criteria, one test (and one printed
pass line) each. Scales and tolerances are fixed; the training run in
criterion 9 is the long pole at a few minutes."""

import hashlib
import time

import numpy as np
import scipy.stats

from sincbank.autodiff import backward, finite_difference_check
from sincbank.cli import main as cli_main
from sincbank.filter_core import (
    Filterbank,
    assemble_filter,
    frequency_response,
    normalize_cutoffs,
    windowed_band_taps,
)
from sincbank.init_strategies import (
    cfr_to_pmf,
    init_formant,
    init_mel,
    init_uniform,
    mel_from_hz,
    synthetic_formant_curve,
)
from sincbank.model import EnhancerModel, build_decoder
from sincbank.pipeline import (
    DecoderSpec,
    decode_transposed,
    encode,
    filterbank_matrix,
    parameter_count,
    pseudo_inverse,
)
from sincbank.trainer import (
    PairStream,
    SynthSpec,
    TrainConfig,
    evaluate_model,
    oracle_bandstop_baseline,
    train,
)


def ok(n, message):
    print(f"[criterion {n:2d}] PASS: {message}")


def test_criterion_01_clamp_invariant_fuzz():
    rng = np.random.default_rng(20240817)
    specials = np.array([0.0, 1.0, -1.0, 1e9, -1e9, 1e-12, -1e-12])
    r1 = rng.uniform(-1e9, 1e9, size=100_000)
    r2 = rng.uniform(-1e9, 1e9, size=100_000)
    idx = rng.integers(0, specials.size, size=(2, 2000))
    r1[:2000] = specials[idx[0]]
    r2[-2000:] = specials[idx[1]]
    start = time.monotonic()
    a1, a2 = normalize_cutoffs(r1, r2)
    elapsed = time.monotonic() - start
    violations = int(np.count_nonzero(~((0 <= a1) & (a1 <= a2) & (a2 <= 1))))
    assert violations == 0
    assert elapsed < 1.0
    ok(1, f"0 violations over 1e5 pairs in {elapsed * 1e3:.0f} ms")


def test_criterion_02_full_band_delta():
    taps = windowed_band_taps(0.0, 1.0, 1.0, 251)
    expected = np.zeros(251)
    expected[125] = 1.0
    deviation = np.abs(taps - expected).max()
    assert deviation < 1e-12
    ok(2, f"full-band taps are a unit impulse at 125 (max dev {deviation:.2e})")


def test_criterion_03_linear_phase():
    rng = np.random.default_rng(3)
    for _ in range(100):
        L = int(rng.choice([31, 101, 251]))
        spec = assemble_filter(rng.uniform(-2, 2), rng.uniform(-2, 2),
                               rng.uniform(0.1, 2.0), L)
        M = L // 2
        for k in range(1, M + 1):
            assert spec.taps[M + k] == spec.taps[M - k]
    # in-band tone through the hop=1 all-pass path: cross-correlation
    # peaks at exactly M samples of lag (Hann envelope breaks the
    # periodicity ambiguity)
    L = 101
    M = L // 2
    fb = Filterbank(raw=np.array([[0.0, 1.0]]), beta=np.ones(1),
                    sample_rate=16000.0, kernel_len=L, mode="reformed")
    model = EnhancerModel(filterbank=fb, mask_logits=np.array([60.0]),
                          decoder=build_decoder("linear_combination", fb), hop=1)
    t = np.arange(4000)
    x = np.sin(2 * np.pi * 0.07 * t) * np.hanning(4000)
    y = model.enhance(x)
    lags = np.arange(0, 4 * M)
    scores = [float(np.dot(y[lag:], x[: x.size - lag])) for lag in lags]
    assert int(np.argmax(scores)) == M
    ok(3, f"100 banks exactly symmetric; all-pass tone delay is M={M}")


def test_criterion_04_frequency_response():
    L = 251
    beta = 1.0
    taps = windowed_band_taps(0.2, 0.4, beta, L)
    omega, mag = frequency_response(taps, n_grid=8192)
    margin = 8 * np.pi / L
    center = np.pi * 0.3
    mid = np.argmin(np.abs(omega - center))
    mid_db = 20 * np.log10(mag[mid] / beta)
    assert abs(mid_db) < 0.5
    stop = ((omega < 0.2 * np.pi - margin) | (omega > 0.4 * np.pi + margin))
    stop_peak_db = 20 * np.log10(mag[stop].max() / beta)
    assert stop_peak_db < -50.0
    ok(4, f"midpoint {mid_db:+.3f} dB, stopband peak {stop_peak_db:.1f} dB")


def test_criterion_05_gradient_oracle():
    start = time.monotonic()
    rng = np.random.default_rng(55)
    worst = 0.0
    for trial in range(20):
        variant = ("linear_combination", "transposed")[trial % 2]
        normalization = bool((trial // 2) % 2)
        hop = 1 if variant == "linear_combination" else int(rng.choice([1, 4]))
        raw = rng.uniform(0.08, 0.92, size=(4, 2))
        while np.abs(raw[:, 0] - raw[:, 1]).min() < 1e-3:
            raw = rng.uniform(0.08, 0.92, size=(4, 2))
        fb = Filterbank(raw=raw, beta=rng.uniform(0.4, 1.6, size=4),
                        sample_rate=16000.0, kernel_len=31, mode="reformed")
        model = EnhancerModel(filterbank=fb,
                              mask_logits=rng.standard_normal(4),
                              decoder=build_decoder(variant, fb), hop=hop,
                              normalization=normalization)
        x = rng.standard_normal(200)
        target = rng.standard_normal(200)
        report = finite_difference_check(model, x, target, step=1e-5,
                                         tolerance=1e-4)
        assert report.passed, (
            f"trial {trial} ({variant}, norm={normalization}): "
            f"max rel error {report.max_rel_error:.3e} at {report.worst_param}")
        worst = max(worst, report.max_rel_error)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    ok(5, f"20 configurations, max rel error {worst:.2e} in {elapsed:.1f} s")


def test_criterion_06_adjoint_identity():
    rng = np.random.default_rng(66)
    worst = 0.0
    for _ in range(50):
        n, L = 3, int(rng.choice([31, 51]))
        hop = int(rng.choice([1, 8, L]))
        T = int(rng.integers(150, 400))
        fb = Filterbank(raw=rng.uniform(0, 1, size=(n, 2)),
                        beta=rng.uniform(0.3, 1.5, size=n),
                        sample_rate=16000.0, kernel_len=L, mode="reformed")
        x = rng.standard_normal(T)
        fm = encode(x, fb, hop=hop)
        Y = rng.standard_normal(fm.data.shape)
        taps = fb.materialize(include_beta=True)
        lhs = float(np.sum(fm.data * Y))
        rhs = float(np.dot(x[: fm.covered_len],
                           decode_transposed(fm.with_data(Y), taps)[: fm.covered_len]))
        rel = abs(lhs - rhs) / max(abs(lhs), 1e-30)
        assert rel < 1e-8
        worst = max(worst, rel)
    ok(6, f"50 trials, worst relative error {worst:.2e}")


def test_criterion_07_pseudo_inverse_identity():
    fb = Filterbank(raw=init_mel(80, 16000.0), beta=np.ones(80),
                    sample_rate=16000.0, kernel_len=251, mode="reformed")
    F = filterbank_matrix(fb)
    P = pseudo_inverse(F)
    residual = np.linalg.norm(F @ P @ F - F) / np.linalg.norm(F)
    assert residual < 1e-10
    ok(7, f"Penrose residual {residual:.2e} for N=80, L=251 mel bank")


def test_criterion_08_parameter_count():
    fb = Filterbank(raw=init_mel(80, 16000.0), beta=np.ones(80),
                    sample_rate=16000.0, kernel_len=251, mode="reformed")
    counts = parameter_count(fb, DecoderSpec(variant="pinv"))
    assert counts.encoder == 240
    assert counts.dense_encoder == 20080
    ok(8, f"encoder {counts.encoder} vs dense {counts.dense_encoder}")


def test_criterion_09_synthetic_denoising():
    spec = SynthSpec(tone_freqs=(400.0, 700.0), tone_amps=(0.3, 0.3),
                     noise_band=(3000.0, 5000.0), input_snr_db=0.0, seed=0)
    oracle_db = oracle_bandstop_baseline(spec)
    threshold = max(10.0, 0.5 * oracle_db)
    config = TrainConfig(seed=0)
    assert config.steps <= 2000
    start = time.monotonic()
    model, history = train(config, spec)
    elapsed = time.monotonic() - start
    from dataclasses import replace
    val_noisy, val_clean = PairStream(replace(spec, seed=spec.seed + 7919)).next_pair()
    est_db, noisy_db = evaluate_model(model, val_noisy, val_clean)
    improvement = est_db - noisy_db
    assert improvement >= threshold, (
        f"improvement {improvement:.2f} dB below threshold {threshold:.2f} dB "
        f"(oracle {oracle_db:.2f} dB)")
    assert elapsed < 600.0
    # weak monotone-trend invariant on the same run
    assert (history.moving_average_loss(100, 2000)
            < history.moving_average_loss(100, 100))
    ok(9, f"improvement {improvement:.1f} dB >= {threshold:.1f} dB "
          f"(oracle {oracle_db:.1f} dB) in {elapsed:.0f} s")


def test_criterion_10_reformed_vs_original_mobility():
    spec = SynthSpec(seed=0)
    displacement = {}
    for mode in ("reformed", "original"):
        config = TrainConfig(steps=300, seed=0, mode=mode, n_filters=16,
                             kernel_len=101)
        _, history = train(config, spec)
        displacement[mode] = history.displacement[-1]
    ratio = displacement["reformed"] / displacement["original"]
    assert ratio >= 5.0
    ok(10, f"displacement reformed {displacement['reformed']:.4f} vs "
           f"original {displacement['original']:.6f}, ratio {ratio:.0f}x")


def test_criterion_11_initialization_statistics():
    draws = init_uniform(50_000, seed=11).ravel()
    sigma = np.sqrt(1.0 / 12.0 / draws.size)
    dev = abs(draws.mean() - 0.5)
    assert dev < 4 * sigma

    curve = synthetic_formant_curve(16000.0)
    pmf = cfr_to_pmf(curve, n_bins=64, nyquist_hz=8000.0)
    pairs = init_formant(50_000, pmf, 16000.0, seed=12)
    hz = pairs.ravel() * 8000.0
    # draws land exactly on the support atoms; count by nearest grid index
    observed = np.zeros(pmf.support_hz.size)
    step = pmf.support_hz[1] - pmf.support_hz[0]
    idx = np.round((hz - pmf.support_hz[0]) / step).astype(int)
    np.testing.assert_allclose(pmf.support_hz[idx], hz, atol=1e-6)
    np.add.at(observed, idx, 1.0)
    expected = pmf.mass * hz.size
    keep = expected > 0
    stat = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
    p_value = float(scipy.stats.chi2.sf(stat, df=int(keep.sum()) - 1))
    assert p_value > 0.001

    mel_edges = init_mel(80, 16000.0)
    flat = np.concatenate([mel_edges[:, 0], mel_edges[-1:, 1]])
    assert np.all(np.diff(flat) > 0)
    top_mel = mel_from_hz(8000.0)
    assert abs(top_mel - 2840.0) < 0.05
    ok(11, f"uniform mean dev {dev:.2e} < 4 sigma; chi-square p={p_value:.3f}; "
           f"mel(8000)={top_mel:.2f}")


def test_criterion_12_end_to_end_determinism(tmp_path):
    def pipeline(root):
        root.mkdir()
        bank = root / "bank.json"
        ck = root / "trained.json"
        history = root / "history.csv"
        noisy = root / "noisy.wav"
        clean = root / "clean.wav"
        enhanced = root / "enhanced.wav"
        cfr = root / "cfr.csv"
        cutoffs = root / "cutoffs.csv"
        assert cli_main(["init", "--n", "6", "--kernel", "31",
                         "--strategy", "uniform", "--seed", "4",
                         "--out", str(bank)]) == 0
        assert cli_main(["synth", "--duration", "1024", "--data-seed", "9",
                         "--out-noisy", str(noisy),
                         "--out-clean", str(clean)]) == 0
        assert cli_main(["train", "--steps", "5", "--n", "6", "--kernel", "31",
                         "--duration", "512", "--seed", "4",
                         "--data-seed", "9", "--out", str(ck),
                         "--history", str(history)]) == 0
        assert cli_main(["enhance", "--in", str(noisy),
                         "--checkpoint", str(ck),
                         "--out", str(enhanced)]) == 0
        assert cli_main(["export-cfr", "--checkpoint", str(ck),
                         "--out", str(cfr), "--grid", "256"]) == 0
        assert cli_main(["export-cutoffs", "--checkpoint", str(ck),
                         "--out", str(cutoffs)]) == 0
        return {
            path.name: hashlib.sha256(path.read_bytes()).hexdigest()
            for path in (bank, ck, history, noisy, clean, enhanced, cfr, cutoffs)
        }

    first = pipeline(tmp_path / "run1")
    second = pipeline(tmp_path / "run2")
    assert first == second
    ok(12, f"{len(first)} artifacts byte-identical across two runs")
