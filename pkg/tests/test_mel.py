"""Log-mel frontend tests.

The filterbank checks recompute band edges with their own piecewise mel-scale
formulas rather than calling back into the module under test.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgetagger.audio import AnalysisWindow
from edgetagger.dsp import (MEL_PRESETS, MelConfig, log_mel, mel_filterbank,
                            read_golden_mel, write_golden_mel)
from edgetagger.errors import ConfigError

MEL64 = MEL_PRESETS["mel64"]


def hz_to_mel_oracle(hz):
    # Slaney scale, written out scalar-wise: linear to 1 kHz, log after.
    if hz < 1000.0:
        return hz * 3.0 / 200.0
    return 15.0 + 27.0 * math.log(hz / 1000.0) / math.log(6.4)


def mel_to_hz_oracle(mel):
    if mel < 15.0:
        return mel * 200.0 / 3.0
    return 1000.0 * 6.4 ** ((mel - 15.0) / 27.0)


def band_edges_oracle(cfg):
    lo = hz_to_mel_oracle(cfg.fmin_hz)
    hi = hz_to_mel_oracle(cfg.fmax_hz)
    step = (hi - lo) / (cfg.n_mels + 1)
    return [mel_to_hz_oracle(lo + i * step) for i in range(cfg.n_mels + 2)]


def mkwin(samples, rate=32000):
    return AnalysisWindow(samples=np.asarray(samples, dtype=np.float32),
                          sample_rate_hz=rate, start_time_ns=0, index=0)


def test_default_window_shape_is_64_by_1001():
    expected_frames = 1 + 320000 // MEL64.hop_length
    assert expected_frames == 1001
    rng = np.random.default_rng(0)
    frame = log_mel(mkwin(rng.uniform(-0.5, 0.5, 320000)), MEL64)
    assert frame.values.shape == (64, 1001)
    assert frame.values.dtype == np.float32


def test_silence_maps_to_constant_floor():
    frame = log_mel(mkwin(np.zeros(320000)), MEL64)
    floor = np.float32(10.0 * math.log10(MEL64.log_floor))
    assert np.array_equal(frame.values, np.full((64, 1001), floor))


def test_1khz_sine_peaks_in_the_band_containing_1khz():
    t = np.arange(320000) / 32000.0
    frame = log_mel(mkwin(np.sin(2 * np.pi * 1000.0 * t)), MEL64)
    edges = band_edges_oracle(MEL64)
    containing = {i for i in range(MEL64.n_mels)
                  if edges[i] < 1000.0 < edges[i + 2]}
    assert containing, "oracle failed to place 1 kHz inside any band"
    interior = frame.values[:, 2:-2]
    hit = np.argmax(interior, axis=0)
    assert set(hit.tolist()) <= containing


def test_gain_shifts_every_unclamped_cell_by_20db():
    rng = np.random.default_rng(7)
    x = rng.uniform(-0.05, 0.05, 320000)
    base = log_mel(mkwin(x), MEL64).values.astype(np.float64)
    loud = log_mel(mkwin(10.0 * x), MEL64).values.astype(np.float64)
    floor = 10.0 * math.log10(MEL64.log_floor)
    mask = base > floor + 25.0
    assert mask.any()
    np.testing.assert_allclose(loud[mask] - base[mask], 20.0, atol=1e-5)


def test_identical_inputs_identical_bytes():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, 320000).astype(np.float32)
    a = log_mel(mkwin(x), MEL64).values
    b = log_mel(mkwin(x.copy()), MEL64).values
    assert a.tobytes() == b.tobytes()


def test_filterbank_rows_nonnegative_nonempty_ascending():
    for name, cfg in MEL_PRESETS.items():
        fb = mel_filterbank(cfg, 32000)
        assert fb.shape == (cfg.n_mels, cfg.n_fft // 2 + 1)
        assert (fb >= 0).all(), name
        assert fb.any(axis=1).all(), name
        centers = band_edges_oracle(cfg)[1:-1]
        assert centers == sorted(centers), name
        # row argmax tracks the ascending centers
        peak_bins = fb.argmax(axis=1)
        assert (np.diff(peak_bins) >= 0).all(), name


def test_single_band_spans_full_range():
    cfg = MelConfig(n_fft=1024, win_length=1024, hop_length=320,
                    n_mels=1, fmin_hz=0.0, fmax_hz=16000.0)
    fb = mel_filterbank(cfg, 32000)
    assert fb.shape == (1, 513)
    assert fb[0, 0] == 0.0 and fb[0, -1] == 0.0
    assert (fb[0, 1:-1] > 0).all()


def test_slaney_normalization_exact_on_bin_aligned_bands():
    # fmax below 1 kHz keeps the mel scale linear, so the triangle vertices
    # land exactly on FFT bins (multiples of 31.25 Hz) and two discrete
    # identities hold exactly: peak = 2/width, sum = n_fft/rate.
    cfg = MelConfig(n_fft=1024, win_length=1024, hop_length=320,
                    n_mels=3, fmin_hz=0.0, fmax_hz=500.0)
    fb = mel_filterbank(cfg, 32000)
    width = 250.0
    np.testing.assert_allclose(fb.max(axis=1), 2.0 / width, rtol=1e-12)
    np.testing.assert_allclose(fb.sum(axis=1), 1024 / 32000, rtol=1e-12)


def test_preset_rows_integrate_to_about_one():
    fb = mel_filterbank(MEL64, 32000)
    freqs = np.linspace(0.0, 16000.0, 513)
    areas = np.trapezoid(fb, freqs, axis=1)
    # trapezoid rule is only approximate when vertices fall between bins
    np.testing.assert_allclose(areas, 1.0, rtol=0.15)


def test_flat_spectrum_yields_row_sums():
    fb = mel_filterbank(MEL64, 32000)
    np.testing.assert_allclose(fb @ np.ones(513), fb.sum(axis=1), rtol=1e-12)


def test_overdense_filterbank_rejected():
    cfg = MelConfig(n_fft=1024, win_length=1024, hop_length=320,
                    n_mels=600, fmin_hz=50.0, fmax_hz=14000.0)
    with pytest.raises(ConfigError):
        mel_filterbank(cfg, 32000)


@pytest.mark.parametrize("kwargs", [
    dict(win_length=2048),            # window longer than FFT
    dict(hop_length=0),
    dict(n_mels=0),
    dict(fmin_hz=500.0, fmax_hz=100.0),
    dict(log_floor=0.0),
])
def test_bad_configs_rejected(kwargs):
    base = dict(n_fft=1024, win_length=1024, hop_length=320,
                n_mels=64, fmin_hz=50.0, fmax_hz=14000.0)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        MelConfig(**base)


def test_window_inconsistent_with_config_rejected():
    with pytest.raises(ConfigError):
        log_mel(mkwin(np.zeros(512)), MEL64)  # shorter than n_fft
    with pytest.raises(ConfigError):
        log_mel(mkwin(np.zeros(320000), rate=16000), MEL64)  # fmax > Nyquist


@settings(max_examples=40, deadline=None)
@given(n=st.integers(min_value=256, max_value=4000))
def test_frame_count_formula(n):
    cfg = MelConfig(n_fft=256, win_length=256, hop_length=64,
                    n_mels=8, fmin_hz=50.0, fmax_hz=3500.0)
    frame = log_mel(mkwin(np.zeros(n), rate=8000), cfg)
    assert frame.values.shape == (8, 1 + n // 64)


def test_golden_sidecar_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    frame = log_mel(mkwin(rng.uniform(-1, 1, 320000)), MEL64)
    write_golden_mel(tmp_path / "probe.json", frame, input_name="probe")
    back = read_golden_mel(tmp_path / "probe.json")
    assert back.config == MEL64
    assert np.array_equal(back.values, frame.values)
