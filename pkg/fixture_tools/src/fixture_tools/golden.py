"""Golden log-mel vectors from an independent reference implementation.

Everything downstream tests compare against is computed here from first
principles in float64: explicit DFT matrices instead of an FFT, loop-built
mel triangles, hand-rolled reflect padding.  Agreement with the runtime
implementation is therefore evidence, not tautology.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import chirp

RATE_HZ = 32000
WINDOW_SAMPLES = 320_000

# Published parameters of the 64-band preset the runtime calls "mel64".
MEL64 = {
    "n_fft": 1024,
    "win_length": 1024,
    "hop_length": 320,
    "n_mels": 64,
    "fmin_hz": 50.0,
    "fmax_hz": 14000.0,
    "power": 2.0,
    "log_floor": 1e-10,
    "center_padding": True,
}

PRESETS = {"mel64": MEL64}


def hz_to_mel(hz: float) -> float:
    if hz < 1000.0:
        return hz * 3.0 / 200.0
    return 15.0 + 27.0 * math.log(hz / 1000.0) / math.log(6.4)


def mel_to_hz(mel: float) -> float:
    if mel < 15.0:
        return mel * 200.0 / 3.0
    return 1000.0 * 6.4 ** ((mel - 15.0) / 27.0)


def band_edges(cfg: dict) -> list[float]:
    lo = hz_to_mel(cfg["fmin_hz"])
    hi = hz_to_mel(cfg["fmax_hz"])
    step = (hi - lo) / (cfg["n_mels"] + 1)
    return [mel_to_hz(lo + i * step) for i in range(cfg["n_mels"] + 2)]


def band_containing(freq_hz: float, cfg: dict) -> int:
    """Index of the band whose triangle weighs freq_hz the most."""
    edges = band_edges(cfg)
    best, best_weight = 0, -1.0
    for m in range(cfg["n_mels"]):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        if lo < freq_hz < hi:
            weight = ((freq_hz - lo) / (center - lo) if freq_hz <= center
                      else (hi - freq_hz) / (hi - center))
            if weight > best_weight:
                best, best_weight = m, weight
    if best_weight < 0:
        raise ValueError(f"{freq_hz} Hz falls outside every band")
    return best


def filterbank(cfg: dict, rate_hz: int) -> np.ndarray:
    edges = band_edges(cfg)
    n_bins = cfg["n_fft"] // 2 + 1
    bin_hz = [rate_hz / 2.0 * k / (n_bins - 1) for k in range(n_bins)]
    weights = np.zeros((cfg["n_mels"], n_bins), dtype=np.float64)
    for m in range(cfg["n_mels"]):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        norm = 2.0 / (hi - lo)
        for k, freq in enumerate(bin_hz):
            if lo < freq < hi:
                if freq <= center:
                    weights[m, k] = norm * (freq - lo) / (center - lo)
                else:
                    weights[m, k] = norm * (hi - freq) / (hi - center)
    return weights


def hann_periodic(length: int) -> np.ndarray:
    k = np.arange(length, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / length)


def dft_matrices(n_fft: int) -> tuple[np.ndarray, np.ndarray]:
    n_bins = n_fft // 2 + 1
    n = np.arange(n_fft, dtype=np.float64)[:, None]
    k = np.arange(n_bins, dtype=np.float64)[None, :]
    angle = 2.0 * np.pi * n * k / n_fft
    return np.cos(angle), -np.sin(angle)


def reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad >= len(x):
        raise ValueError("signal shorter than the padding it needs")
    left = x[pad:0:-1]
    right = x[-2:-pad - 2:-1]
    return np.concatenate([left, x, right])


def log_mel_reference(samples: np.ndarray, cfg: dict,
                      rate_hz: int = RATE_HZ) -> np.ndarray:
    """(n_mels, n_frames) float64 log-power matrix."""
    x = np.asarray(samples, dtype=np.float64)
    n_fft, hop = cfg["n_fft"], cfg["hop_length"]
    if cfg["center_padding"]:
        x = reflect_pad(x, n_fft // 2)
    n_frames = (len(x) - n_fft) // hop + 1
    window = hann_periodic(cfg["win_length"])
    cos_m, sin_m = dft_matrices(n_fft)
    fb = filterbank(cfg, rate_hz)
    frames = np.empty((n_frames, n_fft), dtype=np.float64)
    for t in range(n_frames):
        frames[t] = x[t * hop:t * hop + n_fft] * window
    real = frames @ cos_m
    imag = frames @ sin_m
    power = real * real + imag * imag
    mel_power = fb @ power.T
    return 10.0 * np.log10(np.maximum(mel_power, cfg["log_floor"]))


def synth_speech_like(n: int = WINDOW_SAMPLES,
                      rate_hz: int = RATE_HZ) -> np.ndarray:
    """Deterministic stand-in for recorded speech: modulated pitch with
    two formant resonances, syllable-rate amplitude bursts, faint noise."""
    t = np.arange(n, dtype=np.float64) / rate_hz
    f0 = 110.0 + 20.0 * np.sin(2.0 * np.pi * 0.6 * t)
    phase = 2.0 * np.pi * np.cumsum(f0) / rate_hz
    formants = ((700.0, 130.0, 1.0), (1800.0, 220.0, 0.6))
    voiced = np.zeros(n, dtype=np.float64)
    for harmonic in range(1, 31):
        freq = harmonic * f0
        amp = np.zeros(n, dtype=np.float64)
        for center, width, gain in formants:
            amp += gain * np.exp(-0.5 * ((freq - center) / width) ** 2)
        voiced += amp * np.sin(harmonic * phase)
    syllables = 0.55 + 0.45 * np.sin(2.0 * np.pi * 2.5 * t)
    pauses = (np.sin(2.0 * np.pi * 0.35 * t) > -0.3).astype(np.float64)
    voiced *= syllables * pauses
    noise = np.random.default_rng(7).normal(scale=0.01, size=n)
    signal = voiced / np.max(np.abs(voiced)) * 0.7 + noise
    return np.clip(signal, -1.0, 1.0)


def golden_windows() -> dict[str, np.ndarray]:
    t = np.arange(WINDOW_SAMPLES, dtype=np.float64) / RATE_HZ
    return {
        "silence": np.zeros(WINDOW_SAMPLES, dtype=np.float32),
        "sine_1khz": np.sin(2.0 * np.pi * 1000.0 * t).astype(np.float32),
        "noise_seed42": np.random.default_rng(42)
        .uniform(-0.5, 0.5, WINDOW_SAMPLES).astype(np.float32),
        "chirp_100_8000": (0.8 * chirp(t, f0=100.0, t1=10.0, f1=8000.0))
        .astype(np.float32),
        "speech_like": synth_speech_like().astype(np.float32),
    }


def generate_golden_vectors(preset: str, out_dir: Path) -> list[Path]:
    """Write five (wav input, raw float32 dump, JSON sidecar) triples."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
    cfg = PRESETS[preset]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sidecars = []
    for name, samples in golden_windows().items():
        wav_path = out_dir / f"{name}.wav"
        wavfile.write(wav_path, RATE_HZ, samples)
        values = log_mel_reference(samples, cfg).astype("<f4")
        data_path = out_dir / f"{name}.f32"
        data_path.write_bytes(values.tobytes())
        sidecar = {
            "shape": list(values.shape),
            "dtype": "float32-le",
            "data_file": data_path.name,
            "input_name": name,
            "input_file": wav_path.name,
            "preset": preset,
            "mel": cfg,
        }
        sidecar_path = out_dir / f"{name}.json"
        sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n",
                                encoding="utf-8")
        sidecars.append(sidecar_path)
    (out_dir / "README.md").write_text(GOLDEN_README, encoding="utf-8")
    return sidecars


GOLDEN_README = """\
# Golden log-mel vectors

Five 10 s / 32 kHz windows (float32 WAV) paired with log-mel matrices
computed by the reference implementation in `fixture_tools.golden`
(explicit-DFT, float64, loop-built Slaney filterbank).  Sidecar JSON gives
the matrix shape, the raw little-endian float32 dump file, and the mel
parameters.  Windows: silence, unit 1 kHz sine, uniform white noise from
seed 42, a 100 Hz to 8 kHz chirp, and a deterministic synthetic
speech-like signal.

Regenerate with `fixture-tools golden --out <dir>`; output is byte-stable.
"""
